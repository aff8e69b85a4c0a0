//! Elements of the perfectoid Tate algebra `C<x1^{1/p^inf}, ..., xn^{1/p^inf}>`,
//! disk seminorms, and substitution homomorphisms into `C(y)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::{Exponents, Profile, TruncatedSeries};
use crate::valgroup::{fmt_rat, is_in_zp, zp_parts, ExtRat, Rat};

/// A truncated element of `R_n`; precision is measured in the Gauss norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TateElement {
    series: TruncatedSeries,
}

impl TateElement {
    /// Checks the profile is a Gauss profile and every variable exponent is a
    /// nonnegative element of `Z[1/p]`.
    pub fn new(series: TruncatedSeries) -> Result<Self> {
        let profile = series.profile();
        if profile.weights()[1..].iter().any(|w| !w.is_zero()) {
            return Err(Error::ProfileMismatch);
        }
        let p = profile.p();
        for (e, _) in series.terms() {
            for q in e.iter() {
                if !is_in_zp(q, p) {
                    return Err(Error::NotInValueGroup(fmt_rat(q)));
                }
            }
            if let Some(q) = e[1..].iter().find(|q| q.is_negative()) {
                return Err(Error::NegativeExponent(fmt_rat(q)));
            }
        }
        Ok(TateElement { series })
    }

    pub fn profile_for(p: u32, n: usize) -> Arc<Profile> {
        Profile::tate(p, n)
    }

    /// Exact `coeff * t^a * x^exps`.
    pub fn monomial(profile: &Arc<Profile>, coeff: u32, exponents: Exponents) -> Result<Self> {
        Self::new(TruncatedSeries::monomial(profile, coeff, exponents))
    }

    /// The variable `x_i`, `i` counted from 1.
    pub fn variable(profile: &Arc<Profile>, i: usize) -> Self {
        let mut e = profile.zero_exponents();
        e[i] = Rat::from_integer(1.into());
        TateElement {
            series: TruncatedSeries::monomial(profile, 1, e),
        }
    }

    /// A ground-field element as a constant.
    pub fn constant(profile: &Arc<Profile>, a: &TruncatedSeries) -> Self {
        let dim = profile.dim();
        TateElement {
            series: a.reprofile(
                profile,
                |e| {
                    let mut v = vec![Rat::zero(); dim];
                    v[0] = e[0].clone();
                    v
                },
                a.precision().clone(),
            ),
        }
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.series
    }

    pub fn into_series(self) -> TruncatedSeries {
        self.series
    }

    pub fn num_vars(&self) -> usize {
        self.series.profile().dim() - 1
    }

    /// Gauss valuation: the minimal coefficient valuation.
    pub fn gauss_valuation(&self) -> ExtRat {
        self.series.valuation()
    }

    /// Membership in `O_C<x^{1/p^inf}>`.
    pub fn is_integral(&self) -> bool {
        self.gauss_valuation().ge(&Rat::zero())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(TateElement {
            series: self.series.add(&other.series)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(TateElement {
            series: self.series.sub(&other.series)?,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Ok(TateElement {
            series: self.series.mul(&other.series)?,
        })
    }

    pub fn frobenius(&self, k: i64) -> Self {
        TateElement {
            series: self.series.frobenius(k),
        }
    }

    /// The surjection `R_n -> R_k` sending `x_i` to 0 for `i > k`.
    pub fn restrict(&self, k: usize) -> Self {
        let profile = Profile::tate(self.series.p(), k);
        let kept = self
            .series
            .filter_terms(|_, e| e[k + 1..].iter().all(Zero::is_zero));
        TateElement {
            series: kept.reprofile(
                &profile,
                |e| e[..=k].to_vec(),
                self.series.precision().clone(),
            ),
        }
    }
}

fn disk_weight(e: &[Rat], rho: &[Rat]) -> Rat {
    let mut w = e[0].clone();
    for (q, r) in e[1..].iter().zip(rho) {
        if !q.is_zero() && !r.is_zero() {
            w += q * r;
        }
    }
    w
}

/// Additive seminorm at the disk around the origin with radius values `rho`:
/// the minimum over terms of `v(a) + sum q_i rho_i`.
///
/// Unknown terms have Gauss weight at least the precision, hence disk weight
/// at least the precision too, so the minimum is exact only below it.
pub fn disk_seminorm(f: &TateElement, rho: &[Rat]) -> Result<ExtRat> {
    check_radii(f, rho)?;
    let min = f.series.terms().map(|(e, _)| disk_weight(e, rho)).min();
    let prec = f.series.precision();
    match min {
        Some(m) if prec.gt(&m) => Ok(ExtRat::Finite(m)),
        None if prec.is_infinite() => Ok(ExtRat::Infinite),
        _ => Err(Error::IndeterminateFromPrecision(prec.clone())),
    }
}

fn check_radii(f: &TateElement, rho: &[Rat]) -> Result<()> {
    if rho.len() != f.num_vars() {
        return Err(Error::Config(format!(
            "{} radii for {} variables",
            rho.len(),
            f.num_vars()
        )));
    }
    if rho.iter().any(Signed::is_negative) {
        return Err(Error::Config("radius values must be >= 0".into()));
    }
    Ok(())
}

/// The terms of disk weight `<= v_eps`, i.e. those with `|a_m| r^m >= eps`.
pub fn finite_approx(f: &TateElement, rho: &[Rat], v_eps: &Rat) -> Result<TateElement> {
    check_radii(f, rho)?;
    let kept = f
        .series
        .filter_terms(|_, e| disk_weight(e, rho) <= *v_eps)
        .with_precision(ExtRat::Infinite);
    Ok(TateElement { series: kept })
}

/// Lower bound `|f|_x >= eps` at a Type II disk point.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeIIBound {
    /// `v_eps`, the disk weight of the weight-minimal term `a_M x^M`.
    pub bound: Rat,
    pub term: Exponents,
    pub seminorm: Rat,
}

/// Picks the weight-minimal term `a_M x^M`, sets `eps = |a_M| r^M`, and
/// certifies `|f|_x >= eps` additively as `seminorm <= bound`.
pub fn type_ii_lower_bound(f: &TateElement, rho: &[Rat]) -> Result<TypeIIBound> {
    check_radii(f, rho)?;
    let p = f.series.p();
    if let Some(r) = rho.iter().find(|r| !is_in_zp(r, p)) {
        return Err(Error::NotTypeII(fmt_rat(r)));
    }
    let (bound, term) = f
        .series
        .terms()
        .map(|(e, _)| (disk_weight(e, rho), e.clone()))
        .min()
        .ok_or(Error::Unresolved)?;
    if !f.series.precision().gt(&bound) {
        return Err(Error::Unresolved);
    }
    let f_eps = finite_approx(f, rho, &bound)?;
    // the approximation contains a_M x^M, so it cannot vanish at x
    let approx_norm = disk_seminorm(&f_eps, rho)?;
    let rest = f.sub(&f_eps)?;
    let rest_norm = match disk_seminorm(&rest, rho) {
        Ok(v) => v,
        Err(Error::IndeterminateFromPrecision(prec)) => prec,
        Err(e) => return Err(e),
    };
    if !rest_norm.gt(&bound) || !approx_norm.ge(&bound) {
        return Err(Error::Unresolved);
    }
    let seminorm = disk_seminorm(f, rho)?;
    match seminorm {
        ExtRat::Finite(s) if s <= bound => Ok(TypeIIBound {
            bound,
            term,
            seminorm: s,
        }),
        _ => Err(Error::Unresolved),
    }
}

/// A continuous homomorphism `R_n -> C(y)` given by the images of the variables.
#[derive(Clone, Debug)]
pub struct SubstitutionMap {
    images: Vec<TruncatedSeries>,
    target: Arc<Profile>,
}

impl SubstitutionMap {
    pub fn new(images: Vec<TruncatedSeries>) -> Result<Self> {
        let target = images
            .first()
            .map(|s| s.profile().clone())
            .ok_or_else(|| Error::Config("substitution needs at least one image".into()))?;
        for img in &images {
            if img.profile() != &target {
                return Err(Error::ProfileMismatch);
            }
            if !img.valuation().ge(&Rat::zero()) {
                return Err(Error::Config(format!(
                    "image has negative valuation {}",
                    img.valuation()
                )));
            }
        }
        Ok(SubstitutionMap { images, target })
    }

    pub fn images(&self) -> &[TruncatedSeries] {
        &self.images
    }

    pub fn target_profile(&self) -> &Arc<Profile> {
        &self.target
    }

    /// Evaluates `f` monomial by monomial; the result has precision
    /// `min(target, propagated)`.
    pub fn apply(&self, f: &TateElement, target: &ExtRat) -> Result<TruncatedSeries> {
        if f.num_vars() != self.images.len() {
            return Err(Error::ProfileMismatch);
        }
        let p = f.series.p();
        if p != self.target.p() {
            return Err(Error::ProfileMismatch);
        }
        let mut roots: HashMap<(usize, u32), TruncatedSeries> = HashMap::new();
        // f's own precision: unknown terms have coefficient valuation >= prec
        // and all images have valuation >= 0.
        let mut acc = TruncatedSeries::zero(
            &self.target,
            f.series.precision().clone().min(target.clone()),
        );
        for (e, c) in f.series.terms() {
            let a = &e[0];
            // images have valuation >= 0, so the whole term lies at or above `a`
            if !target.gt(a) {
                continue;
            }
            let cap = match target {
                ExtRat::Finite(t) => ExtRat::Finite(t - a),
                ExtRat::Infinite => ExtRat::Infinite,
            };
            let mut value = TruncatedSeries::one(&self.target);
            for (i, q) in e[1..].iter().enumerate() {
                if q.is_zero() {
                    continue;
                }
                let piece = self.image_power(i, q, &cap, &mut roots)?;
                value = value.mul(&piece)?.truncated_to(&cap);
            }
            let mut t_a = self.target.zero_exponents();
            t_a[0] = a.clone();
            let term = TruncatedSeries::monomial(&self.target, c, t_a).mul(&value)?;
            acc = acc.add(&term.truncated_to(target))?;
        }
        Ok(acc)
    }

    /// Like [`apply`](Self::apply) but fails unless the full `target` is reached.
    pub fn apply_exact_to(&self, f: &TateElement, target: &ExtRat) -> Result<TruncatedSeries> {
        let out = self.apply(f, target)?;
        if out.precision() < target {
            return Err(Error::PrecisionUnderflow {
                needed: Box::new(target.clone()),
                available: Box::new(out.precision().clone()),
            });
        }
        Ok(out)
    }

    /// `image_i ^ q` for `q = k / p^m`: the `p^m`-th root by inverse Frobenius,
    /// memoized per call, then the `k`-th power.
    fn image_power(
        &self,
        i: usize,
        q: &Rat,
        cap: &ExtRat,
        roots: &mut HashMap<(usize, u32), TruncatedSeries>,
    ) -> Result<TruncatedSeries> {
        let p = self.target.p();
        let (k, m) = zp_parts(q, p).ok_or_else(|| Error::NotInValueGroup(fmt_rat(q)))?;
        let root = roots
            .entry((i, m))
            .or_insert_with(|| self.images[i].frobenius(-(m as i64)));
        if let Some((e, c)) = root.as_exact_monomial() {
            let kr = Rat::from_integer(k.clone());
            let exps: Exponents = e.iter().map(|x| x * &kr).collect();
            let coeff = pow_mod(c, &k, p);
            return Ok(TruncatedSeries::monomial(&self.target, coeff, exps));
        }
        let k = k
            .to_u64()
            .ok_or_else(|| Error::Config(format!("exponent numerator {k} too large")))?;
        root.truncated_to(cap).pow(k, cap)
    }
}

fn pow_mod(c: u32, k: &BigInt, p: u32) -> u32 {
    let p64 = p as u64;
    // Fermat: c^(p-1) = 1
    let e = (k % BigInt::from(p - 1)).to_u64().unwrap_or(0);
    let mut r = 1u64;
    let mut b = c as u64 % p64;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p64;
        }
        b = b * b % p64;
        e >>= 1;
    }
    r as u32
}
