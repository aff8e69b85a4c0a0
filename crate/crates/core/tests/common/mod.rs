#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use hahn_core::series::{Exponents, Profile, TruncatedSeries};
use hahn_core::valgroup::{p_pow, ExtRat, Rat};
use num_bigint::BigInt;
use proptest::prelude::*;

/// Minimal stored weight, or the precision when nothing is stored.
pub fn oracle_valuation(f: &TruncatedSeries) -> ExtRat {
    let prof = f.profile();
    f.terms()
        .map(|(e, _)| prof.weight(e))
        .min()
        .map(ExtRat::Finite)
        .unwrap_or_else(|| f.precision().clone())
}

fn ext_add(a: &ExtRat, b: &ExtRat) -> ExtRat {
    match (a, b) {
        (ExtRat::Finite(x), ExtRat::Finite(y)) => ExtRat::Finite(x + y),
        _ => ExtRat::Infinite,
    }
}

/// Every pair of terms, no early exit, then truncation at the contracted
/// product precision.
pub fn schoolbook_mul(f: &TruncatedSeries, g: &TruncatedSeries) -> TruncatedSeries {
    let p = f.p() as u64;
    let prec = ext_add(f.precision(), &oracle_valuation(g))
        .min(ext_add(g.precision(), &oracle_valuation(f)));
    let mut acc: BTreeMap<Exponents, u64> = BTreeMap::new();
    for (ea, ca) in f.terms() {
        for (eb, cb) in g.terms() {
            let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *acc.entry(e).or_insert(0) += ca as u64 * cb as u64;
        }
    }
    let prof = f.profile().clone();
    let terms: Vec<(Exponents, u32)> = acc
        .into_iter()
        .map(|(e, c)| (e, (c % p) as u32))
        .filter(|(e, c)| *c != 0 && prec.gt(&prof.weight(e)))
        .collect();
    TruncatedSeries::from_terms(&prof, terms, prec)
}

pub fn ground3() -> Arc<Profile> {
    Profile::ground(3)
}

pub fn residue3() -> Arc<Profile> {
    Profile::residue(3, Rat::new(1.into(), 2.into())).unwrap()
}

fn zp(num: i64, k: u32) -> Rat {
    Rat::from_integer(BigInt::from(num)) * p_pow(3, -(k as i64))
}

/// Series over `profile` with up to 12 terms, weights in `[0, prec)`, prec <= 20.
pub fn series_in(
    profile: Arc<Profile>,
    nonneg_vars: bool,
) -> impl Strategy<Value = TruncatedSeries> {
    let dim = profile.dim();
    let lo = if nonneg_vars { 0 } else { -6 };
    let term = (
        prop::collection::vec((lo..=6i64, 0..=1u32), dim - 1),
        0..=60i64,
        0..=2u32,
        1..3u32,
    );
    (prop::collection::vec(term, 0..=12), 1..=20i64).prop_map(move |(raw, prec)| {
        let mut terms = Vec::new();
        for (vars, a, k, c) in raw {
            let mut e = vec![zp(a, k)];
            e.extend(vars.into_iter().map(|(n, kk)| zp(n, kk)));
            // shift the t-exponent so the weight is nonnegative
            let w = profile.weight(&e);
            if w < Rat::from_integer(0.into()) {
                let lift = (-w).ceil();
                e[0] += lift;
            }
            terms.push((e, c));
        }
        TruncatedSeries::from_terms(&profile, terms, Rat::from_integer(prec.into()).into())
    })
}

pub fn ground_series() -> impl Strategy<Value = TruncatedSeries> {
    series_in(ground3(), false)
}

pub fn residue_series() -> impl Strategy<Value = TruncatedSeries> {
    series_in(residue3(), false)
}

pub fn tate_series(n: usize) -> impl Strategy<Value = TruncatedSeries> {
    series_in(Profile::tate(3, n), true)
}
