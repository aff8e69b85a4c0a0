//! Successive approximation of a preimage: given `beta` in `C(y)`, builds
//! `a_m` in `R_3` with `f(a_m) = beta - beta_m` and `v(beta_m) >= m + vS`.
//!
//! Step `m` takes the terms of `beta_m` in the band `[m + vS, m + 1 + vS)`.
//! Each such `b x^q` is cancelled by `d t^m a_q`, where `f(a_q)` is
//! `(q, s)`-adapted with leading term `c x^q` and `d = b / (c t^m)`; the tail
//! of `f(a_q)` lands above `m + 1 + vS`.

use std::collections::HashMap;

use num_traits::{One, Signed};

use crate::builder::{AdaptedCertificate, AlphaPlan};
use crate::error::{Error, Result};
use crate::series::{Profile, TruncatedSeries};
use crate::tate::TateElement;
use crate::valgroup::{ceil_int, fmt_rat, int, ExtRat, Rat};

/// Smallest `k >= 0` with `v(t^k beta) >= vS`, and the shifted element.
pub fn normalize_target(beta: &TruncatedSeries, v_s: &Rat) -> Result<(u32, TruncatedSeries)> {
    let v = beta.valuation();
    if beta.is_empty() && !beta.precision().ge(v_s) {
        return Err(Error::Unresolved);
    }
    let k = match &v {
        ExtRat::Finite(v) if v < v_s => ceil_int(&(v_s - v)),
        _ => 0.into(),
    };
    let k: u32 = k
        .try_into()
        .map_err(|_| Error::Config("normalizing shift too large".into()))?;
    let shift = int(k as i64);
    let shifted = beta.reprofile(
        beta.profile(),
        |e| {
            let mut e = e.clone();
            e[0] += &shift;
            e
        },
        beta.precision() + &shift,
    );
    Ok((k, shifted))
}

/// The terms of weight in `[m + vS, m + 1 + vS)`, as an exact finite sum.
pub fn slice(beta: &TruncatedSeries, m: usize, v_s: &Rat) -> TruncatedSeries {
    let lo = int(m as i64) + v_s;
    let hi = &lo + Rat::one();
    beta.filter_terms(|w, _| *w >= lo && *w < hi)
        .with_precision(ExtRat::Infinite)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisionStep {
    pub m: usize,
    /// Terms of `beta_m` consumed by this step.
    pub slice: TruncatedSeries,
    /// `e_m`, so `a_{m+1} = a_m + e_m`.
    pub e: TateElement,
    /// `beta_{m+1} = beta_m - f(e_m)`.
    pub residual: TruncatedSeries,
    /// `m + 1 + vS`, certified lower bound for `v(beta_{m+1})`.
    pub bound: Rat,
    pub residual_valuation: ExtRat,
    /// Gauss valuation of `e_m`, at least `m`.
    pub increment_valuation: ExtRat,
}

#[derive(Clone, Debug)]
pub struct DivisionTrace {
    /// Normalized target.
    pub target: TruncatedSeries,
    pub steps: Vec<DivisionStep>,
    /// Plan after any on-demand extension; `f` is defined by it.
    pub plan: AlphaPlan,
    /// `a_M`.
    pub preimage: TateElement,
    /// Precision everything is certified to: `M + vS`.
    pub cap: Rat,
    pub final_residual_valuation: ExtRat,
}

struct Divider {
    plan: AlphaPlan,
    certificates: HashMap<Rat, (usize, AdaptedCertificate)>,
    cap: Rat,
    tate: std::sync::Arc<Profile>,
}

impl Divider {
    fn certificate(&mut self, q: &Rat) -> Result<(usize, &AdaptedCertificate)> {
        if !self.certificates.contains_key(q) {
            let k = self.plan.stage_for(q)?;
            let cert = self.plan.certify(k)?;
            self.certificates.insert(q.clone(), (k, cert));
        }
        let (k, cert) = &self.certificates[q];
        Ok((*k, cert))
    }

    fn step(
        &mut self,
        m: usize,
        beta_m: &TruncatedSeries,
    ) -> Result<(TruncatedSeries, TateElement, TruncatedSeries)> {
        let v_s = self.plan.instance().v_s.clone();
        let p = self.plan.instance().p;
        let sl = slice(beta_m, m, &v_s);
        let mut e = TateElement::new(TruncatedSeries::exact_zero(&self.tate))?;
        let need = &self.cap - int(m as i64);
        let tate = self.tate.clone();
        for (exps, coeff) in sl.terms() {
            let (k, cert) = self.certificate(&exps[1])?;
            let v_d = &exps[0] - &cert.leading_t - int(m as i64);
            if !v_d.is_positive() {
                return Err(Error::ContractViolation {
                    step: m,
                    reason: format!(
                        "quotient for x^{} has valuation {}",
                        fmt_rat(&exps[1]),
                        fmt_rat(&v_d)
                    ),
                });
            }
            let c_inv = mod_inv(cert.leading_coeff, p);
            let d_coeff = (coeff as u64 * c_inv as u64 % p as u64) as u32;
            let shift = TruncatedSeries::monomial(
                &tate,
                d_coeff,
                vec![v_d + int(m as i64), int(0), int(0), int(0)],
            );
            let piece = TateElement::new(shift)?.mul(&cert.preimage)?;
            e = e.add(&piece)?;
            self.plan.ensure_image_precision(k, &need)?;
        }
        let image = if e.series().is_empty() {
            TruncatedSeries::exact_zero(beta_m.profile())
        } else {
            self.plan
                .substitution()?
                .apply_exact_to(&e, &self.cap.clone().into())?
        };
        let residual = beta_m.sub(&image)?;
        Ok((sl, e, residual))
    }
}

fn mod_inv(c: u32, p: u32) -> u32 {
    let (mut r, mut b, mut e) = (1u64, c as u64 % p as u64, p as u64 - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

/// Runs `steps` certified division steps on a normalized target.
pub fn run_division(
    beta: &TruncatedSeries,
    plan: &AlphaPlan,
    steps: usize,
) -> Result<DivisionTrace> {
    let v_s = plan.instance().v_s.clone();
    if beta.profile() != plan.residue().profile() {
        return Err(Error::ProfileMismatch);
    }
    let cap = int(steps as i64) + &v_s;
    if plan.work_prec() < &cap {
        return Err(Error::PrecisionExhausted(format!(
            "{steps} steps need work precision {}, have {}",
            fmt_rat(&cap),
            fmt_rat(plan.work_prec())
        )));
    }
    if !beta.precision().ge(&cap) {
        return Err(Error::InsufficientPrecision {
            needed: Box::new(cap.into()),
            available: Box::new(beta.precision().clone()),
        });
    }
    if !beta.valuation().ge(&v_s) {
        return Err(Error::ContractViolation {
            step: 0,
            reason: format!("target valuation {} below vS", beta.valuation()),
        });
    }
    let tate = Profile::tate(plan.instance().p, 3);
    let target = beta.truncated_to(&cap.clone().into());
    let mut div = Divider {
        plan: plan.clone(),
        certificates: HashMap::new(),
        cap: cap.clone(),
        tate: tate.clone(),
    };
    let mut a = TateElement::new(TruncatedSeries::exact_zero(&tate))?;
    let mut beta_m = target.clone();
    let mut records = Vec::with_capacity(steps);
    for m in 0..steps {
        let (sl, e, residual) = div.step(m, &beta_m)?;
        let bound = int(m as i64 + 1) + &v_s;
        let residual_valuation = residual.valuation();
        if !residual_valuation.ge(&bound) {
            return Err(Error::ContractViolation {
                step: m,
                reason: format!(
                    "residual valuation {residual_valuation} below {}",
                    fmt_rat(&bound)
                ),
            });
        }
        let increment_valuation = e.gauss_valuation();
        if !increment_valuation.ge(&int(m as i64)) {
            return Err(Error::ContractViolation {
                step: m,
                reason: format!("increment valuation {increment_valuation} below {m}"),
            });
        }
        a = a.add(&e)?;
        records.push(DivisionStep {
            m,
            slice: sl,
            e,
            residual: residual.clone(),
            bound,
            residual_valuation,
            increment_valuation,
        });
        beta_m = residual;
    }
    let image = div
        .plan
        .substitution()?
        .apply_exact_to(&a, &cap.clone().into())?;
    let defect = image.sub(&target)?;
    let final_residual_valuation = defect.valuation();
    if !final_residual_valuation.ge(&cap) || defect.add(&beta_m)?.terms().next().is_some() {
        return Err(Error::ContractViolation {
            step: steps,
            reason: format!("f(a_M) - beta has valuation {final_residual_valuation}"),
        });
    }
    let trace = DivisionTrace {
        target,
        steps: records,
        plan: div.plan,
        preimage: a,
        cap,
        final_residual_valuation,
    };
    trace.check_consistency()?;
    Ok(trace)
}

/// Normalizes `beta`, then divides; returns the shift `k` with the trace.
pub fn divide(
    beta: &TruncatedSeries,
    plan: &AlphaPlan,
    steps: usize,
) -> Result<(u32, DivisionTrace)> {
    let (k, normalized) = normalize_target(beta, &plan.instance().v_s)?;
    Ok((k, run_division(&normalized, plan, steps)?))
}

impl DivisionTrace {
    /// `f(a_m) + beta_m = beta` below the cap for every recorded step.
    pub fn check_consistency(&self) -> Result<()> {
        let map = self.plan.substitution()?;
        let cap: ExtRat = self.cap.clone().into();
        let tate = Profile::tate(self.plan.instance().p, 3);
        let mut a = TateElement::new(TruncatedSeries::exact_zero(&tate))?;
        for step in &self.steps {
            a = a.add(&step.e)?;
            let lhs = map.apply_exact_to(&a, &cap)?.add(&step.residual)?;
            if !lhs.agrees_below(&self.target, &self.cap) {
                return Err(Error::ContractViolation {
                    step: step.m,
                    reason: "f(a_m) + beta_m differs from beta".into(),
                });
            }
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.steps.iter().all(|s| s.e.series().is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_plan, Instance};
    use crate::valgroup::rat;

    fn plan() -> AlphaPlan {
        build_plan(&Instance::default(), 4, int(26)).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let plan = plan();
        let k = plan.residue();
        let vs = rat(1, 4);
        let b = k
            .monomial(1, int(0), rat(1, 3))
            .with_precision(int(10).into());
        let (shift, nb) = normalize_target(&b, &vs).unwrap();
        assert_eq!(shift, 1);
        assert_eq!(nb.valuation(), ExtRat::Finite(rat(7, 6)));
        assert_eq!(nb.precision(), &ExtRat::Finite(int(11)));
        assert_eq!(
            normalize_target(&k.monomial(1, int(2), int(0)), &vs)
                .unwrap()
                .0,
            0
        );
        let z = TruncatedSeries::zero(k.profile(), rat(1, 8).into());
        assert!(matches!(normalize_target(&z, &vs), Err(Error::Unresolved)));
    }

    #[test]
    fn slice_is_half_open() {
        let plan = plan();
        let k = plan.residue();
        let beta = k
            .monomial(1, rat(1, 4), int(0))
            .add(&k.monomial(2, rat(5, 4), int(0)))
            .unwrap();
        let s0 = slice(&beta, 0, &rat(1, 4));
        assert_eq!(s0, k.monomial(1, rat(1, 4), int(0)));
        let s1 = slice(&beta, 1, &rat(1, 4));
        assert_eq!(s1, k.monomial(2, rat(5, 4), int(0)));
        assert!(slice(&TruncatedSeries::exact_zero(k.profile()), 0, &rat(1, 4)).is_empty());
    }

    #[test]
    fn zero_target() {
        let plan = plan();
        let z = TruncatedSeries::exact_zero(plan.residue().profile());
        let tr = run_division(&z, &plan, 5).unwrap();
        assert!(tr.is_trivial());
        assert!(tr.preimage.series().is_empty());
        let empty = run_division(&z, &plan, 0).unwrap();
        assert!(empty.steps.is_empty());
    }

    #[test]
    fn single_monomial_first_band() {
        let plan = plan();
        let k = plan.residue();
        // weight 1/3 + 1/6 = 1/2 in [1/4, 5/4)
        let beta = k.monomial(2, rat(1, 3), rat(1, 3));
        let tr = run_division(&beta, &plan, 6).unwrap();
        let first = &tr.steps[0];
        assert_eq!(first.slice, beta);
        assert!(first.residual_valuation.gt(&rat(5, 4)));
        tr.check_consistency().unwrap();
    }

    #[test]
    fn round_trip_builder_image() {
        let mut plan = plan();
        let cert = plan.certify(2).unwrap();
        let beta = cert.image.truncated_to(&int(12).into());
        let (shift, tr) = divide(&beta, &plan, 8).unwrap();
        assert_eq!(shift, 1);
        assert!(tr.final_residual_valuation.ge(&rat(33, 4)));
        for s in &tr.steps {
            assert!(s.residual_valuation.ge(&s.bound));
        }
        tr.check_consistency().unwrap();
    }

    #[test]
    fn insufficient_target_precision() {
        let plan = plan();
        let beta = plan
            .residue()
            .monomial(1, int(1), int(0))
            .with_precision(int(3).into());
        assert!(matches!(
            run_division(&beta, &plan, 8),
            Err(Error::InsufficientPrecision { .. })
        ));
    }
}
