//! Seeded generators for property suites and self-tests.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::series::{Exponents, Profile, TruncatedSeries};
use crate::tate::TateElement;
use crate::valgroup::{p_pow, Rat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `i / p^k` with `|i| <= max_num`, `k <= max_k`.
pub fn exponent<R: Rng>(rng: &mut R, p: u32, max_num: i64, max_k: u32, nonneg: bool) -> Rat {
    let lo = if nonneg { 0 } else { -max_num };
    let i = rng.gen_range(lo..=max_num);
    let k = rng.gen_range(0..=max_k);
    Rat::from_integer(BigInt::from(i)) * p_pow(p, -(k as i64))
}

fn coeff<R: Rng>(rng: &mut R, p: u32) -> u32 {
    rng.gen_range(1..p)
}

/// Up to `max_terms` terms of weight in `[0, precision)`; `t` exponents are
/// nonnegative, variable exponents signed unless `nonneg_vars`.
pub fn series<R: Rng>(
    rng: &mut R,
    profile: &Arc<Profile>,
    max_terms: usize,
    precision: i64,
    nonneg_vars: bool,
) -> TruncatedSeries {
    let p = profile.p();
    let n = rng.gen_range(0..=max_terms);
    let mut terms: Vec<(Exponents, u32)> = Vec::with_capacity(n);
    while terms.len() < n {
        let mut e = profile.zero_exponents();
        for q in e.iter_mut().skip(1) {
            *q = exponent(rng, p, 4, 1, nonneg_vars);
        }
        let base = profile.weight(&e);
        // t-exponent in Z[1/p] with the weight in [0, precision)
        let k = rng.gen_range(0..=2u32);
        let scale = p_pow(p, k as i64);
        let first = (-&base * &scale).ceil();
        let last = ((Rat::from_integer(precision.into()) - &base) * &scale).ceil()
            - Rat::from_integer(1.into());
        if last < first {
            continue;
        }
        let span: i64 = (&last - &first).to_integer().try_into().unwrap_or(i64::MAX);
        let j = rng.gen_range(0..=span);
        e[0] = (first + Rat::from_integer(j.into())) / &scale;
        if profile.weight(&e) < Rat::from_integer(precision.into()) {
            terms.push((e, coeff(rng, p)));
        }
    }
    TruncatedSeries::from_terms(profile, terms, Rat::from_integer(precision.into()).into())
}

/// A Tate element in `n` variables with integral coefficients.
pub fn tate<R: Rng>(
    rng: &mut R,
    p: u32,
    n: usize,
    max_terms: usize,
    precision: i64,
) -> TateElement {
    let profile = Profile::tate(p, n);
    TateElement::new(series(rng, &profile, max_terms, precision, true))
        .expect("nonnegative exponents")
}

/// A nonzero target in `C(y)` with valuation at least `v_s`, known to `precision`.
pub fn target<R: Rng>(
    rng: &mut R,
    profile: &Arc<Profile>,
    v_s: &Rat,
    max_terms: usize,
    precision: i64,
) -> TruncatedSeries {
    loop {
        let s = series(rng, profile, max_terms, precision, false);
        let kept = s.filter_terms(|w, _| w >= v_s);
        if !kept.is_empty() {
            return kept;
        }
    }
}
