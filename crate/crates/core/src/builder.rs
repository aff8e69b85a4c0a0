//! Construction of the image `alpha` of `x3` and of adapted elements.
//!
//! Stage `m` contributes `alpha_m = (e_m x^{omega_m})^{p^{b_m}}` with
//! `e_m = t^{vE_m}`. All quantities are additive: a stage's base weight is
//! `w_m = vE_m + omega_m * gamma_x`, and `alpha_m` has weight `p^{b_m} w_m`.
//!
//! The recursion for `m >= 2` picks, in order,
//! * `vEps_m`, the least value making every `eps_m alpha_j` divisible by `f(W_j)`;
//! * `b_m`, the least integer with `p^{b_m} w_m > m`,
//!   `vEps_m / p^{b_m} + w_m < vS`, and `p^{b_m - b_j} w_m > 1 + vS` for `j < m`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fields::{choose_c_valuation, is_odd_prime, GroundField, ResidueField};
use crate::series::{Leading, Profile, TruncatedSeries};
use crate::tate::{SubstitutionMap, TateElement};
use crate::valgroup::{
    fmt_rat, int, is_in_zp, p_pow, rat, smallest_zp_point, ExtRat, OmegaEnumeration, Rat,
};

/// Upper limit on plan length; extension past it is `StageUnavailable`.
pub const MAX_STAGES: usize = 96;

/// The parameters `(p, gamma_x, vS)`: the residue field lives at radius
/// value `gamma_x`, and `vS = -log s` for the adaptedness constant `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub p: u32,
    pub gamma_x: Rat,
    pub v_s: Rat,
}

impl Default for Instance {
    fn default() -> Self {
        Instance {
            p: 3,
            gamma_x: rat(1, 2),
            v_s: rat(1, 4),
        }
    }
}

impl Instance {
    pub fn new(p: u32, gamma_x: Rat, v_s: Rat) -> Result<Self> {
        let inst = Instance { p, gamma_x, v_s };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_odd_prime(self.p) {
            return Err(Error::Config(format!("p = {} is not an odd prime", self.p)));
        }
        if !self.gamma_x.is_positive() || is_in_zp(&self.gamma_x, self.p) {
            return Err(Error::Config(format!(
                "gamma_x = {} must be positive and outside Z[1/{}]",
                fmt_rat(&self.gamma_x),
                self.p
            )));
        }
        if !self.v_s.is_positive() || self.v_s >= Rat::one() {
            return Err(Error::Config(format!(
                "v_s = {} must lie in (0, 1)",
                fmt_rat(&self.v_s)
            )));
        }
        Ok(())
    }

    pub fn residue_field(&self) -> Result<ResidueField> {
        ResidueField::new(GroundField::new(self.p)?, self.gamma_x.clone())
    }

    /// `v(c)`, with `c x^{-1}` of weight in `(0, vS)`.
    pub fn c_valuation(&self) -> Rat {
        choose_c_valuation(&self.gamma_x, &self.v_s, self.p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageOrigin {
    /// Next unused value of the fixed enumeration of `Z[1/p]`.
    Enumeration,
    /// Appended because some exponent was requested.
    Demand,
}

impl fmt::Display for StageOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageOrigin::Enumeration => "enumeration",
            StageOrigin::Demand => "demand",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    /// 1-based stage index.
    pub m: usize,
    pub omega: Rat,
    pub origin: StageOrigin,
    pub v_e: Rat,
    pub b: u32,
    pub v_eps: Rat,
}

impl Stage {
    /// `vE + omega * gamma_x`, the weight of `e x^omega`.
    pub fn base_weight(&self, gamma_x: &Rat) -> Rat {
        &self.v_e + &self.omega * gamma_x
    }

    /// Weight of `alpha_m`.
    pub fn weight(&self, p: u32, gamma_x: &Rat) -> Rat {
        p_pow(p, self.b as i64) * self.base_weight(gamma_x)
    }
}

/// Weight of `f(W_j)`: `x^{omega p^b}` for `omega >= 0`, `(c x^{-1})^{-omega p^b}`
/// otherwise.
pub fn threshold(omega: &Rat, b: u32, inst: &Instance, v_c: &Rat) -> Rat {
    let pb = p_pow(inst.p, b as i64);
    if omega.is_positive() {
        omega * pb * &inst.gamma_x
    } else if omega.is_negative() {
        -omega * pb * (v_c - &inst.gamma_x)
    } else {
        Rat::zero()
    }
}

#[derive(Clone, Debug)]
pub struct AlphaPlan {
    instance: Instance,
    residue: ResidueField,
    v_c: Rat,
    work_prec: Rat,
    stages: Vec<Stage>,
    used: BTreeSet<Rat>,
    enumeration: OmegaEnumeration,
    max_stages: usize,
}

/// Builds the first `stages` stages from the enumeration.
pub fn build_plan(instance: &Instance, stages: usize, work_prec: Rat) -> Result<AlphaPlan> {
    instance.validate()?;
    if stages == 0 {
        return Err(Error::Config("need at least one stage".into()));
    }
    let needed = int(stages as i64 + 1);
    if work_prec < needed {
        let max = (work_prec.floor().to_integer() - num_bigint::BigInt::one())
            .max(num_bigint::BigInt::zero());
        return Err(Error::PrecisionExhausted(format!(
            "work precision {} resolves at most {} stages",
            fmt_rat(&work_prec),
            max
        )));
    }
    let mut plan = AlphaPlan {
        instance: instance.clone(),
        residue: instance.residue_field()?,
        v_c: instance.c_valuation(),
        work_prec,
        stages: Vec::new(),
        used: BTreeSet::new(),
        enumeration: OmegaEnumeration::new(instance.p),
        max_stages: MAX_STAGES.max(stages),
    };
    for _ in 0..stages {
        plan.push_enumeration()?;
    }
    plan.self_check()?;
    Ok(plan)
}

impl AlphaPlan {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn residue(&self) -> &ResidueField {
        &self.residue
    }

    pub fn v_c(&self) -> &Rat {
        &self.v_c
    }

    pub fn c(&self) -> TruncatedSeries {
        self.residue.ground().power(self.v_c.clone())
    }

    pub fn work_prec(&self) -> &Rat {
        &self.work_prec
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn set_max_stages(&mut self, n: usize) {
        self.max_stages = n;
    }

    /// Appends the next enumeration value not already present.
    pub fn push_enumeration(&mut self) -> Result<usize> {
        let omega = loop {
            let q = self.enumeration.next().expect("infinite enumeration");
            if !self.used.contains(&q) {
                break q;
            }
        };
        self.push_stage(omega, StageOrigin::Enumeration)
    }

    /// Index of the stage with `omega = q`, appending a demand stage if absent.
    pub fn stage_for(&mut self, q: &Rat) -> Result<usize> {
        if !is_in_zp(q, self.instance.p) {
            return Err(Error::NotInValueGroup(fmt_rat(q)));
        }
        if let Some(i) = self.stages.iter().position(|s| &s.omega == q) {
            return Ok(i);
        }
        self.push_stage(q.clone(), StageOrigin::Demand)
    }

    fn push_stage(&mut self, omega: Rat, origin: StageOrigin) -> Result<usize> {
        if self.stages.len() >= self.max_stages {
            return Err(Error::StageUnavailable(format!(
                "omega = {} would need stage {} beyond the limit {}",
                fmt_rat(&omega),
                self.stages.len() + 1,
                self.max_stages
            )));
        }
        let stage = self.next_stage(omega, origin);
        self.used.insert(stage.omega.clone());
        self.stages.push(stage);
        Ok(self.stages.len() - 1)
    }

    fn next_stage(&self, omega: Rat, origin: StageOrigin) -> Stage {
        let inst = &self.instance;
        let m = self.stages.len() + 1;
        let shift = -(&omega * &inst.gamma_x);
        let v_e = smallest_zp_point(&shift, &(&shift + &inst.v_s), inst.p);
        let mut stage = Stage {
            m,
            omega,
            origin,
            v_e,
            b: 0,
            v_eps: Rat::zero(),
        };
        let Some(last) = self.stages.last() else {
            return stage;
        };
        let w = stage.base_weight(&inst.gamma_x);
        stage.v_eps = self
            .stages
            .iter()
            .map(|j| threshold(&j.omega, j.b, inst, &self.v_c) - j.weight(inst.p, &inst.gamma_x))
            .fold(Rat::zero(), Rat::max);
        let m_rat = int(m as i64);
        let one_s = Rat::one() + &inst.v_s;
        let mut b = last.b + 1;
        loop {
            let pb = p_pow(inst.p, b as i64);
            let big = &pb * &w > m_rat;
            let band = &stage.v_eps / &pb + &w < inst.v_s;
            let gap = p_pow(inst.p, (b - last.b) as i64) * &w > one_s;
            if big && band && gap {
                break;
            }
            b += 1;
        }
        stage.b = b;
        stage
    }

    /// Re-evaluates every recursion constraint exactly.
    pub fn self_check(&self) -> Result<()> {
        let inst = &self.instance;
        let fail = |m: usize, reason: String| Error::AdaptednessFailed { stage: m, reason };
        for (i, s) in self.stages.iter().enumerate() {
            let w = s.base_weight(&inst.gamma_x);
            if !(w.is_positive() && w < inst.v_s) {
                return Err(fail(
                    s.m,
                    format!("base weight {} outside (0, vS)", fmt_rat(&w)),
                ));
            }
            if i == 0 {
                if s.b != 0 || !s.v_eps.is_zero() {
                    return Err(fail(1, "first stage must have b = 0 and eps = 1".into()));
                }
                continue;
            }
            let pb = p_pow(inst.p, s.b as i64);
            if &pb * &w <= int(s.m as i64) {
                return Err(fail(s.m, "stage weight not above m".into()));
            }
            let lead = &s.v_eps / &pb + &w;
            if !(lead.is_positive() && lead < inst.v_s) {
                return Err(fail(
                    s.m,
                    format!("scaled leading weight {} outside (0, vS)", fmt_rat(&lead)),
                ));
            }
            for j in &self.stages[..i] {
                let need = threshold(&j.omega, j.b, inst, &self.v_c);
                if &s.v_eps + j.weight(inst.p, &inst.gamma_x) < need {
                    return Err(fail(s.m, format!("eps does not divide stage {}", j.m)));
                }
                if s.b <= j.b || p_pow(inst.p, (s.b - j.b) as i64) * &w <= Rat::one() + &inst.v_s {
                    return Err(fail(s.m, format!("gap to stage {} too small", j.m)));
                }
            }
        }
        Ok(())
    }

    /// Every future stage weighs more than this: the precision of `alpha`.
    pub fn tail_bound(&self) -> Rat {
        let last = self.stages.last().expect("nonempty plan");
        p_pow(self.instance.p, last.b as i64) * (Rat::one() + &self.instance.v_s)
    }

    /// `sum_m alpha_m` over the recorded stages, known below [`tail_bound`](Self::tail_bound).
    pub fn alpha(&self) -> TruncatedSeries {
        let inst = &self.instance;
        let terms = self.stages.iter().map(|s| {
            let pb = p_pow(inst.p, s.b as i64);
            (vec![&s.v_e * &pb, &s.omega * &pb], 1)
        });
        TruncatedSeries::from_terms(self.residue.profile(), terms, self.tail_bound().into())
    }

    /// `x1 -> x`, `x2 -> c x^{-1}`, `x3 -> alpha`.
    pub fn substitution(&self) -> Result<SubstitutionMap> {
        let cx = self.residue.monomial(1, self.v_c.clone(), -Rat::one());
        SubstitutionMap::new(vec![self.residue.x(), cx, self.alpha()])
    }

    /// Precision of `f(a_k)`: `(vEps_k + tail_bound) / p^{b_k}`.
    pub fn image_precision(&self, k: usize) -> Rat {
        let s = &self.stages[k];
        (&s.v_eps + self.tail_bound()) / p_pow(self.instance.p, s.b as i64)
    }

    /// Appends enumeration stages until `f(a_k)` is known to at least `target`
    /// and strictly beyond `1 + vS`.
    pub fn ensure_image_precision(&mut self, k: usize, target: &Rat) -> Result<()> {
        let one_s = Rat::one() + &self.instance.v_s;
        loop {
            let prec = self.image_precision(k);
            if &prec >= target && prec > one_s {
                return Ok(());
            }
            self.push_enumeration().map_err(|e| match e {
                Error::StageUnavailable(msg) => Error::StageUnavailable(format!(
                    "stage {} needs image precision {}: {msg}",
                    k + 1,
                    fmt_rat(target)
                )),
                other => other,
            })?;
        }
    }

    /// Valuation of `d_j = eps_k alpha_j / f(W_j)` for `j < k`.
    pub fn d_valuation(&self, k: usize, j: usize) -> Rat {
        let inst = &self.instance;
        let sj = &self.stages[j];
        &self.stages[k].v_eps + sj.weight(inst.p, &inst.gamma_x)
            - threshold(&sj.omega, sj.b, inst, &self.v_c)
    }

    /// `a_k` with `a_k^{p^{b_k}} = eps_k x3 - sum_{j<k} d_j W_j`.
    pub fn preimage(&self, k: usize) -> Result<TateElement> {
        let inst = &self.instance;
        let profile = Profile::tate(inst.p, 3);
        let s = &self.stages[k];
        let mut terms = vec![(vec![s.v_eps.clone(), int(0), int(0), int(1)], 1)];
        for (j, sj) in self.stages[..k].iter().enumerate() {
            let vd = self.d_valuation(k, j);
            if vd.is_negative() {
                return Err(Error::AdaptednessFailed {
                    stage: s.m,
                    reason: format!("d for stage {} has valuation {}", sj.m, fmt_rat(&vd)),
                });
            }
            let pb = p_pow(inst.p, sj.b as i64);
            let mut e = vec![vd, int(0), int(0), int(0)];
            if sj.omega.is_positive() {
                e[1] = &sj.omega * &pb;
            } else if sj.omega.is_negative() {
                e[2] = -&sj.omega * &pb;
            }
            terms.push((e, inst.p - 1));
        }
        let root = TruncatedSeries::from_terms(&profile, terms, ExtRat::Infinite);
        TateElement::new(root.frobenius(-(s.b as i64)))
    }

    /// Extends the plan as needed and certifies stage `k` (0-based).
    pub fn certify(&mut self, k: usize) -> Result<AdaptedCertificate> {
        self.ensure_image_precision(k, &Rat::zero())?;
        self.certificate_at(k)
    }

    fn certificate_at(&self, k: usize) -> Result<AdaptedCertificate> {
        let inst = &self.instance;
        let s = &self.stages[k];
        let fail = |reason: String| Error::AdaptednessFailed { stage: s.m, reason };
        let preimage = self.preimage(k)?;
        if !preimage.is_integral() {
            return Err(fail("preimage is not integral".into()));
        }
        let image = self.substitution()?.apply(&preimage, &ExtRat::Infinite)?;
        let (valuation, exps, coeff) = match image.valuation_and_leading()? {
            Leading::Term {
                valuation,
                exponents,
                coeff,
            } => (valuation, exponents, coeff),
            Leading::Zero { .. } => return Err(fail("image has no resolved leading term".into())),
        };
        if valuation.is_negative() || valuation >= inst.v_s {
            return Err(fail(format!(
                "|f(a)| outside (s, 1]: valuation {}",
                fmt_rat(&valuation)
            )));
        }
        if exps[1] != s.omega {
            return Err(fail(format!(
                "leading x-exponent {} differs from {}",
                fmt_rat(&exps[1]),
                fmt_rat(&s.omega)
            )));
        }
        let pb = p_pow(inst.p, s.b as i64);
        let expected_t = &s.v_eps / &pb + &s.v_e;
        if exps[0] != expected_t || coeff != 1 {
            return Err(fail(
                "leading term differs from eps^(1/p^b) e x^omega".into(),
            ));
        }
        let lead = TruncatedSeries::monomial(image.profile(), coeff, exps.clone());
        let tail_valuation = image.sub(&lead)?.valuation();
        let one_s = Rat::one() + &inst.v_s;
        if !tail_valuation.gt(&one_s) {
            return Err(fail(format!(
                "tail valuation {tail_valuation} not above 1 + vS"
            )));
        }
        Ok(AdaptedCertificate {
            stage: s.m,
            q: s.omega.clone(),
            v_s: inst.v_s.clone(),
            preimage,
            image,
            leading_t: exps[0].clone(),
            leading_coeff: coeff,
            valuation,
            tail_valuation,
            stages_used: self.stages.len(),
        })
    }
}

/// `f(a)` is `(q, s)`-adapted for the integral `a = preimage`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedCertificate {
    pub stage: usize,
    pub q: Rat,
    pub v_s: Rat,
    pub preimage: TateElement,
    pub image: TruncatedSeries,
    pub leading_t: Rat,
    pub leading_coeff: u32,
    /// `v(f(a))`, in `[0, vS)`.
    pub valuation: Rat,
    /// `v(f(a) - leading term)`, above `1 + vS`.
    pub tail_valuation: ExtRat,
    /// Plan length the image was computed against.
    pub stages_used: usize,
}

/// Certificate for stage `m` (1-based) on a copy of `plan`, extended with
/// later stages of the same recursion when the image needs more precision.
pub fn build_adapted(plan: &AlphaPlan, m: usize) -> Result<AdaptedCertificate> {
    if m == 0 || m > plan.len() {
        return Err(Error::StageUnavailable(format!(
            "stage {m} not in a plan of {} stages",
            plan.len()
        )));
    }
    let mut local = plan.clone();
    local.certify(m - 1)
}

/// Certificate for exponent `q`, appending a demand stage if needed.
pub fn build_adapted_for(plan: &mut AlphaPlan, q: &Rat) -> Result<AdaptedCertificate> {
    let k = plan.stage_for(q)?;
    plan.certify(k)
}
