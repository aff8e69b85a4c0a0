//! Independent checker for plan transcripts, adapted certificates, and
//! division traces.
//!
//! Nothing here calls into the builder or the division code. Canonical
//! choices are re-derived by brute force over small candidates, constraints
//! are re-evaluated exactly, and images are recomputed with a separate
//! monomial evaluator `t^a x1^q1 x2^q2 x3^q3 -> t^{a + q2 v(c)} x^{q1 - q2} alpha^{q3}`.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fields::is_odd_prime;
use crate::series::text::parse_series;
use crate::series::{Profile, TruncatedSeries};
use crate::transcript::{
    parse_document, sha256_hex, CertificateDoc, Document, InstanceDoc, PlanDoc, StageDoc, TraceDoc,
};
use crate::valgroup::{fmt_rat, int, is_in_zp, p_pow, parse_rat, zp_parts, ExtRat, Rat};

/// Outcome of a successful verification.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub kind: &'static str,
    pub checks: usize,
    pub lines: Vec<String>,
}

fn fail(location: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Verification {
        location: location.into(),
        reason: reason.into(),
    }
}

fn field(location: &str, name: &str, s: &str) -> Result<Rat> {
    parse_rat(s).map_err(|_| fail(location, format!("{name} `{s}` is not a rational")))
}

fn series(location: &str, text: &str, profile: &Arc<Profile>) -> Result<TruncatedSeries> {
    parse_series(text, profile).map_err(|e| fail(location, format!("unreadable series: {e}")))
}

pub fn verify_document(text: &str) -> Result<VerifyReport> {
    match parse_document(text)? {
        Document::Plan(d) => verify_plan(&d),
        Document::Certificate(d) => verify_certificate(&d),
        Document::Trace(d) => verify_trace(&d),
    }
}

struct Params {
    p: u32,
    gamma: Rat,
    v_s: Rat,
    v_c: Rat,
}

#[derive(Clone, Debug)]
struct Row {
    m: usize,
    omega: Rat,
    v_e: Rat,
    b: u32,
    v_eps: Rat,
}

impl Row {
    fn lead(&self, gamma: &Rat) -> Rat {
        &self.v_e + &self.omega * gamma
    }
}

/// Ordering key of the enumeration of `Z[1/p]`: height, denominator
/// exponent, absolute numerator, positive first.
fn enumeration_key(q: &Rat, p: u32) -> (BigInt, u32, BigInt, bool) {
    let (i, k) = zp_parts(q, p).expect("checked membership");
    let height = i.abs().max(num_traits::pow(BigInt::from(p), k as usize));
    (height, k, i.abs(), i.is_negative())
}

/// `x` is the point of `Z[1/p]` in `(lo, hi)` with least denominator, then
/// least numerator.
fn is_canonical_point(x: &Rat, lo: &Rat, hi: &Rat, p: u32) -> bool {
    if !(lo < x && x < hi) {
        return false;
    }
    let Some((_, k)) = zp_parts(x, p) else {
        return false;
    };
    for j in 0..=k {
        let scale = p_pow(p, j as i64);
        // largest integer strictly below hi * p^j
        let top = (hi * &scale).ceil() - Rat::one();
        if top > lo * &scale {
            let first = (lo * &scale).floor() + Rat::one();
            return j == k && first / &scale == *x;
        }
    }
    false
}

fn check_instance(doc: &InstanceDoc, c_val: &str) -> Result<Params> {
    let loc = "instance";
    if !is_odd_prime(doc.p) {
        return Err(fail(loc, format!("p = {} is not an odd prime", doc.p)));
    }
    let gamma = field(loc, "gamma_x", &doc.gamma_x)?;
    let v_s = field(loc, "v_s", &doc.v_s)?;
    if !gamma.is_positive() || is_in_zp(&gamma, doc.p) {
        return Err(fail(
            loc,
            "gamma_x must be positive and outside the value group",
        ));
    }
    if !v_s.is_positive() || v_s >= Rat::one() {
        return Err(fail(loc, "v_s outside (0, 1)"));
    }
    let v_c = field("c_valuation", "c_valuation", c_val)?;
    if !is_canonical_point(&v_c, &gamma, &(&gamma + &v_s), doc.p) {
        return Err(fail(
            "c_valuation",
            format!("{c_val} is not the canonical point of (gamma_x, gamma_x + v_s)"),
        ));
    }
    Ok(Params {
        p: doc.p,
        gamma,
        v_s,
        v_c,
    })
}

/// Weight of `f(W)` where `W = x1^{omega p^b}` or `x2^{-omega p^b}`.
fn image_weight_of_w(par: &Params, omega: &Rat, b: u32) -> Rat {
    let n = omega * p_pow(par.p, b as i64);
    let (a, q) = if n.is_negative() {
        (-&n * &par.v_c, n.clone())
    } else {
        (Rat::zero(), n.clone())
    };
    a + q * &par.gamma
}

/// Checks each recorded stage against everything before it; the first
/// failing stage is the one reported.
fn check_stages(par: &Params, docs: &[StageDoc]) -> Result<Vec<Row>> {
    if docs.is_empty() {
        return Err(fail("stages", "no stages"));
    }
    let one_s = Rat::one() + &par.v_s;
    let mut rows: Vec<Row> = Vec::with_capacity(docs.len());
    for (idx, d) in docs.iter().enumerate() {
        let m = idx + 1;
        let loc = format!("stage {m}");
        if d.m != m {
            return Err(fail(&loc, format!("recorded index {}", d.m)));
        }
        let omega = field(&loc, "omega", &d.omega)?;
        let v_e = field(&loc, "v_e", &d.v_e)?;
        let v_eps = field(&loc, "v_eps", &d.v_eps)?;
        if !is_in_zp(&omega, par.p) || !is_in_zp(&v_eps, par.p) {
            return Err(fail(&loc, "omega and v_eps must lie in Z[1/p]"));
        }
        if rows.iter().any(|r| r.omega == omega) {
            return Err(fail(
                &loc,
                format!("omega = {} repeats an earlier stage", d.omega),
            ));
        }
        match d.origin.as_str() {
            "enumeration" => check_next_unused(par, &omega, &rows).map_err(|r| fail(&loc, r))?,
            "demand" => {}
            other => return Err(fail(&loc, format!("unknown origin `{other}`"))),
        }
        let lo = -(&omega * &par.gamma);
        if !is_canonical_point(&v_e, &lo, &(&lo + &par.v_s), par.p) {
            return Err(fail(
                &loc,
                format!("v_e = {} is not canonical for omega = {}", d.v_e, d.omega),
            ));
        }
        let row = Row {
            m,
            omega,
            v_e,
            b: d.b,
            v_eps,
        };
        let w = row.lead(&par.gamma);
        if m == 1 {
            if row.b != 0 || !row.v_eps.is_zero() {
                return Err(fail(&loc, "first stage needs b = 0 and v_eps = 0"));
            }
            rows.push(row);
            continue;
        }
        let need_eps = rows
            .iter()
            .map(|r| {
                image_weight_of_w(par, &r.omega, r.b)
                    - p_pow(par.p, r.b as i64) * r.lead(&par.gamma)
            })
            .fold(Rat::zero(), |a, b| if b > a { b } else { a });
        if row.v_eps != need_eps {
            return Err(fail(
                &loc,
                format!(
                    "v_eps = {} but the least admissible value is {}",
                    d.v_eps,
                    fmt_rat(&need_eps)
                ),
            ));
        }
        let holds = |b: u32| -> std::result::Result<(), String> {
            let pb = p_pow(par.p, b as i64);
            if &pb * &w <= int(m as i64) {
                return Err(format!(
                    "constraint 1: p^b w = {} not above {m}",
                    fmt_rat(&(&pb * &w))
                ));
            }
            let lead = &row.v_eps / &pb + &w;
            if !lead.is_positive() || lead >= par.v_s {
                return Err(format!(
                    "constraint 2: leading weight {} outside (0, v_s)",
                    fmt_rat(&lead)
                ));
            }
            for r in &rows {
                if b <= r.b || p_pow(par.p, (b - r.b) as i64) * &w <= one_s {
                    return Err(format!("constraint 3 fails against stage {}", r.m));
                }
            }
            Ok(())
        };
        holds(row.b).map_err(|r| fail(&loc, r))?;
        if row.b > 0 && holds(row.b - 1).is_ok() {
            return Err(fail(&loc, format!("b = {} is not minimal", row.b)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_next_unused(par: &Params, omega: &Rat, rows: &[Row]) -> std::result::Result<(), String> {
    let key = enumeration_key(omega, par.p);
    let h = key.0.to_i64().ok_or("omega height too large")?;
    let mut pk: i64 = 1;
    let mut k = 0u32;
    while pk <= h {
        for i in -h..=h {
            if k > 0 && i.rem_euclid(par.p as i64) == 0 {
                continue;
            }
            let cand = Rat::new(BigInt::from(i), BigInt::from(pk));
            if rows.iter().any(|r| r.omega == cand) {
                continue;
            }
            if enumeration_key(&cand, par.p).cmp(&key) == Ordering::Less {
                return Err(format!(
                    "omega = {} skips the unused earlier value {}",
                    fmt_rat(omega),
                    fmt_rat(&cand)
                ));
            }
        }
        pk *= par.p as i64;
        k += 1;
    }
    Ok(())
}

fn tail_bound(par: &Params, rows: &[Row]) -> Rat {
    let last = rows.last().expect("nonempty");
    p_pow(par.p, last.b as i64) * (Rat::one() + &par.v_s)
}

struct Evaluator {
    profile: Arc<Profile>,
    alpha: TruncatedSeries,
    v_c: Rat,
}

impl Evaluator {
    fn new(par: &Params, rows: &[Row]) -> Result<Self> {
        let profile = Profile::residue(par.p, par.gamma.clone())?;
        let mut alpha = TruncatedSeries::zero(&profile, tail_bound(par, rows).into());
        for r in rows {
            let pb = p_pow(par.p, r.b as i64);
            let term = TruncatedSeries::monomial(&profile, 1, vec![&r.v_e * &pb, &r.omega * &pb]);
            alpha = alpha.add(&term)?;
        }
        Ok(Evaluator {
            profile,
            alpha,
            v_c: par.v_c.clone(),
        })
    }

    fn eval(&self, f: &TruncatedSeries, target: &ExtRat) -> Result<TruncatedSeries> {
        let mut acc =
            TruncatedSeries::zero(&self.profile, f.precision().clone().min(target.clone()));
        for (e, c) in f.terms() {
            let mono = vec![&e[0] + &e[2] * &self.v_c, &e[1] - &e[2]];
            let mut value = TruncatedSeries::monomial(&self.profile, c, mono);
            if !e[3].is_zero() {
                let (k, n) = zp_parts(&e[3], self.profile.p())
                    .ok_or_else(|| fail("evaluation", "bad x3 exponent"))?;
                let root = self.alpha.frobenius(-(n as i64));
                let k = k
                    .to_u64()
                    .ok_or_else(|| fail("evaluation", "x3 exponent too large"))?;
                for _ in 0..k {
                    value = value.mul(&root)?.truncated_to(target);
                }
            }
            acc = acc.add(&value.truncated_to(target))?;
        }
        Ok(acc)
    }
}

fn check_integral(loc: &str, f: &TruncatedSeries) -> Result<()> {
    for (e, _) in f.terms() {
        if e[0].is_negative() || e[1..].iter().any(Signed::is_negative) {
            return Err(fail(loc, "preimage is not in the integral subring"));
        }
    }
    if !f.precision().ge(&Rat::zero()) {
        return Err(fail(loc, "preimage precision is negative"));
    }
    Ok(())
}

pub fn verify_plan(doc: &PlanDoc) -> Result<VerifyReport> {
    let par = check_instance(&doc.instance, &doc.c_valuation)?;
    let rows = check_stages(&par, &doc.stages)?;
    let work = field("work_prec", "work_prec", &doc.work_prec)?;
    if work < int(rows.len() as i64 + 1) {
        return Err(fail("work_prec", "does not resolve the recorded stages"));
    }
    let tb = tail_bound(&par, &rows);
    if field("tail_bound", "tail_bound", &doc.tail_bound)? != tb {
        return Err(fail(
            "tail_bound",
            format!("recorded {}, expected {}", doc.tail_bound, fmt_rat(&tb)),
        ));
    }
    let alpha = Evaluator::new(&par, &rows)?.alpha;
    if sha256_hex(alpha.to_string().as_bytes()) != doc.alpha_sha256 {
        return Err(fail(
            "alpha_sha256",
            "does not match the alpha implied by the stages",
        ));
    }
    if doc.verification.status != "pass" || doc.verification.stages_checked != rows.len() {
        return Err(fail("verification", "summary does not record a full pass"));
    }
    Ok(VerifyReport {
        kind: "plan",
        checks: rows.len(),
        lines: rows
            .iter()
            .map(|r| format!("stage {}: omega={} b={} ok", r.m, fmt_rat(&r.omega), r.b))
            .collect(),
    })
}

/// `(valuation, exponents)` of the unique weight-minimal term, plus the
/// valuation of everything else.
fn leading_split(loc: &str, f: &TruncatedSeries) -> Result<(Rat, Vec<Rat>, u32, ExtRat)> {
    let sorted = f.sorted_terms();
    let (w, e, c) = sorted
        .first()
        .cloned()
        .ok_or_else(|| fail(loc, "image has no terms"))?;
    if !f.precision().gt(&w) {
        return Err(fail(loc, "leading term not resolved by the precision"));
    }
    let rest = match sorted.get(1) {
        Some((w2, _, _)) if *w2 == w => return Err(fail(loc, "leading weight attained twice")),
        Some((w2, _, _)) => ExtRat::Finite(w2.clone()).min(f.precision().clone()),
        None => f.precision().clone(),
    };
    Ok((w, e, c, rest))
}

pub fn verify_certificate(doc: &CertificateDoc) -> Result<VerifyReport> {
    let par = check_instance(&doc.instance, &doc.c_valuation)?;
    let rows = check_stages(&par, &doc.stages)?;
    let row = doc
        .stage
        .checked_sub(1)
        .and_then(|i| rows.get(i))
        .ok_or_else(|| fail("stage", format!("stage {} not recorded", doc.stage)))?;
    let loc = format!("certificate stage {}", doc.stage);
    let q = field(&loc, "q", &doc.q)?;
    if q != row.omega {
        return Err(fail(&loc, "q differs from the stage's omega"));
    }
    let tate = Profile::tate(par.p, 3);
    let preimage = series(&loc, &doc.preimage, &tate)?;
    check_integral(&loc, &preimage)?;
    let eval = Evaluator::new(&par, &rows)?;
    let image = series(&loc, &doc.image, &eval.profile)?;
    let own = eval.eval(&preimage, &ExtRat::Infinite)?;
    let common = own.precision().clone().min(image.precision().clone());
    let bound = common
        .finite()
        .cloned()
        .ok_or_else(|| fail(&loc, "image precision must be finite"))?;
    if image.precision() > own.precision() || !image.agrees_below(&own, &bound) {
        return Err(fail(&loc, "recorded image differs from f(preimage)"));
    }
    let (v, e, c, tail) = leading_split(&loc, &image)?;
    if v.is_negative() || v >= par.v_s {
        return Err(fail(
            &loc,
            format!("condition 1: valuation {} outside [0, v_s)", fmt_rat(&v)),
        ));
    }
    if e[1] != q {
        return Err(fail(
            &loc,
            format!("condition 2: leading x-exponent {}", fmt_rat(&e[1])),
        ));
    }
    let one_s = Rat::one() + &par.v_s;
    if !tail.gt(&one_s) {
        return Err(fail(
            &loc,
            format!("condition 3: tail valuation {tail} not above 1 + v_s"),
        ));
    }
    let checks = &doc.checks;
    if field(&loc, "valuation", &checks.valuation)? != v
        || field(&loc, "upper", &checks.upper)? != par.v_s
        || field(&loc, "tail_bound", &checks.tail_bound)? != one_s
        || checks.tail_valuation != tail.to_string()
        || field(&loc, "leading.t", &doc.leading.t)? != e[0]
        || doc.leading.coeff != c
        || field(&loc, "leading.q", &doc.leading.q)? != q
    {
        return Err(fail(&loc, "recorded checks disagree with the image"));
    }
    Ok(VerifyReport {
        kind: "certificate",
        checks: rows.len() + 3,
        lines: vec![format!(
            "stage {}: ({}, s)-adapted, valuation {}, tail {}",
            doc.stage, doc.q, checks.valuation, checks.tail_valuation
        )],
    })
}

fn shift_series(f: &TruncatedSeries, k: u32) -> TruncatedSeries {
    let k = int(k as i64);
    let terms = f.terms().map(|(e, c)| {
        let mut e = e.clone();
        e[0] += &k;
        (e, c)
    });
    TruncatedSeries::from_terms(f.profile(), terms, f.precision() + &k)
}

pub fn verify_trace(doc: &TraceDoc) -> Result<VerifyReport> {
    let par = check_instance(&doc.instance, &doc.c_valuation)?;
    let rows = check_stages(&par, &doc.stages)?;
    let eval = Evaluator::new(&par, &rows)?;
    if sha256_hex(doc.beta.as_bytes()) != doc.beta_sha256 {
        return Err(fail(
            "beta_sha256",
            "hash does not match the recorded target",
        ));
    }
    let beta = series("beta", &doc.beta, &eval.profile)?;
    // least k >= 0 with v(t^k beta) >= v_s
    let v = beta.valuation();
    let mut k = 0u32;
    while !(&v + &int(k as i64)).ge(&par.v_s) {
        k += 1;
    }
    if doc.shift != k {
        return Err(fail(
            "shift",
            format!("recorded {}, expected {k}", doc.shift),
        ));
    }
    let cap = field("cap", "cap", &doc.cap)?;
    let cap_ext: ExtRat = cap.clone().into();
    let target = series("target", &doc.target, &eval.profile)?;
    if target != shift_series(&beta, k).truncated_to(&cap_ext) {
        return Err(fail("target", "is not the shifted beta"));
    }
    if cap != int(doc.steps as i64) + &par.v_s || doc.records.len() != doc.steps {
        return Err(fail("cap", "inconsistent with the step count"));
    }
    if field("work_prec", "work_prec", &doc.work_prec)? < cap {
        return Err(fail("work_prec", "below the certified precision"));
    }
    if !target.precision().ge(&cap) {
        return Err(fail("target", "precision below the cap"));
    }
    let tate = Profile::tate(par.p, 3);
    let mut beta_m = target.truncated_to(&cap_ext);
    let mut a = TruncatedSeries::exact_zero(&tate);
    let mut lines = Vec::with_capacity(doc.records.len());
    for (m, rec) in doc.records.iter().enumerate() {
        let loc = format!("step {m}");
        if rec.m != m {
            return Err(fail(&loc, format!("recorded index {}", rec.m)));
        }
        let lo = int(m as i64) + &par.v_s;
        if !beta_m.valuation().ge(&lo) {
            return Err(fail(
                &loc,
                format!("incoming residual below {}", fmt_rat(&lo)),
            ));
        }
        let sl = series(&loc, &rec.slice, &eval.profile)?;
        let hi = &lo + Rat::one();
        let own_slice = TruncatedSeries::from_terms(
            &eval.profile,
            beta_m
                .terms()
                .filter(|(e, _)| {
                    let w = eval.profile.weight(e);
                    w >= lo && w < hi
                })
                .map(|(e, c)| (e.clone(), c)),
            ExtRat::Infinite,
        );
        if sl != own_slice {
            return Err(fail(&loc, "slice differs from the band of the residual"));
        }
        let e = series(&loc, &rec.e, &tate)?;
        check_integral(&loc, &e)?;
        let inc = e.valuation();
        if !inc.ge(&int(m as i64)) || rec.increment_valuation != inc.to_string() {
            return Err(fail(
                &loc,
                format!(
                    "increment valuation {inc} (recorded {})",
                    rec.increment_valuation
                ),
            ));
        }
        let img = eval.eval(&e, &cap_ext)?;
        if img.precision() < &cap_ext {
            return Err(fail(&loc, "f(e) not resolved to the cap"));
        }
        let residual = series(&loc, &rec.residual, &eval.profile)?;
        let expected = beta_m.sub(&img)?;
        if !residual.precision().ge(&cap) || !residual.agrees_below(&expected, &cap) {
            return Err(fail(&loc, "residual differs from beta_m - f(e_m)"));
        }
        let bound = field(&loc, "bound", &rec.bound)?;
        if bound != hi {
            return Err(fail(
                &loc,
                format!("bound {} should be {}", rec.bound, fmt_rat(&hi)),
            ));
        }
        let rv = residual.valuation();
        if !rv.ge(&bound) {
            return Err(fail(
                &loc,
                format!("residual valuation {rv} below bound {}", rec.bound),
            ));
        }
        if rec.residual_valuation != rv.to_string() {
            return Err(fail(
                &loc,
                format!(
                    "recorded residual valuation {} but found {rv}",
                    rec.residual_valuation
                ),
            ));
        }
        a = a.add(&e)?;
        lines.push(format!(
            "step {m}: v(beta_{}) = {rv} >= {}",
            m + 1,
            rec.bound
        ));
        beta_m = residual;
    }
    let defect = eval
        .eval(&a, &cap_ext)?
        .sub(&target.truncated_to(&cap_ext))?;
    let fv = defect.valuation();
    if !fv.ge(&cap) || doc.final_residual_valuation != fv.to_string() {
        return Err(fail(
            "final",
            format!(
                "v(f(a_M) - beta) = {fv}, recorded {}",
                doc.final_residual_valuation
            ),
        ));
    }
    Ok(VerifyReport {
        kind: "trace",
        checks: rows.len() + doc.records.len() + 1,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valgroup::rat;

    #[test]
    fn canonical_points() {
        assert!(is_canonical_point(&rat(2, 3), &rat(1, 2), &rat(3, 4), 3));
        assert!(!is_canonical_point(&rat(5, 9), &rat(1, 2), &rat(3, 4), 3));
        assert!(is_canonical_point(&rat(1, 9), &int(0), &rat(1, 4), 3));
        assert!(!is_canonical_point(&rat(2, 9), &int(0), &rat(1, 4), 3));
        assert!(is_canonical_point(&rat(-4, 3), &rat(-3, 2), &rat(-5, 4), 3));
        assert!(!is_canonical_point(&int(-1), &rat(-3, 2), &rat(-5, 4), 3));
    }

    #[test]
    fn enumeration_order() {
        let k = |q: Rat| enumeration_key(&q, 3);
        assert!(k(int(0)) < k(int(1)));
        assert!(k(int(1)) < k(int(-1)));
        assert!(k(int(3)) < k(rat(1, 3)));
        assert!(k(rat(-2, 3)) < k(int(4)));
    }

    #[test]
    fn empty_and_unknown_documents() {
        assert!(matches!(verify_document(""), Err(Error::Format(_))));
        assert!(matches!(
            verify_document("{\"format\":\"nope\"}"),
            Err(Error::Format(_))
        ));
    }
}
