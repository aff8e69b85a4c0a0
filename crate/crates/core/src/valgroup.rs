//! Exact rational exponents and additive valuations.
//!
//! Every valuation in the crate is additive, `v = -log|.|`, normalized so the
//! uniformizer `t` has valuation 1. Norm inequalities therefore flip direction:
//! `|a| < |b|` is `v(a) > v(b)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::error::Error;

/// Exact rational number in lowest terms with positive denominator.
pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `p^k` as an exact rational, `k` may be negative.
pub fn p_pow(p: u32, k: i64) -> Rat {
    let base = num_traits::pow(BigInt::from(p), k.unsigned_abs() as usize);
    if k >= 0 {
        Rat::from_integer(base)
    } else {
        Rat::new(BigInt::one(), base)
    }
}

/// Parses `num/den` or `num`.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let r = Rat::from_str(s).map_err(|_| Error::Parse(format!("malformed rational `{s}`")))?;
    Ok(r)
}

/// Renders `num/den`, omitting the denominator when it is 1.
pub fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

/// Whether `n` is `p^k` for some `k >= 0`.
fn is_p_power(n: &BigInt, p: u32) -> bool {
    if !n.is_positive() {
        return false;
    }
    let p = BigInt::from(p);
    let mut n = n.clone();
    while n.is_multiple_of(&p) {
        n /= &p;
    }
    n.is_one()
}

/// True iff the reduced denominator of `q` is a power of `p`, i.e. `q` lies in `Z[1/p]`.
pub fn is_in_zp(q: &Rat, p: u32) -> bool {
    is_p_power(q.denom(), p)
}

/// For `q` in `Z[1/p]`, returns `(i, m)` with `q = i / p^m` in reduced form.
pub fn zp_parts(q: &Rat, p: u32) -> Option<(BigInt, u32)> {
    if !is_in_zp(q, p) {
        return None;
    }
    let pb = BigInt::from(p);
    let mut d = q.denom().clone();
    let mut m = 0u32;
    while !d.is_one() {
        d /= &pb;
        m += 1;
    }
    Some((q.numer().clone(), m))
}

/// Smallest integer `>= x`.
pub fn ceil_int(x: &Rat) -> BigInt {
    x.ceil().to_integer()
}

/// The point of `Z[1/p]` in the open interval `(lo, hi)` with the smallest
/// denominator, ties broken by the smallest numerator.
///
/// Panics if `lo >= hi`.
pub fn smallest_zp_point(lo: &Rat, hi: &Rat, p: u32) -> Rat {
    assert!(lo < hi, "empty interval");
    let mut k: i64 = 0;
    loop {
        let scale = p_pow(p, k);
        let i = (lo * &scale).floor() + Rat::one();
        let cand = i / &scale;
        if &cand < hi {
            return cand;
        }
        k += 1;
    }
}

/// A rational extended by `+inf`.
///
/// Used both as a precision bound (`Infinite` meaning exact) and as a
/// valuation (`Infinite` is the valuation of exact zero).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rat),
    Infinite,
}

impl ExtRat {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinite)
    }

    /// `self > r`
    pub fn gt(&self, r: &Rat) -> bool {
        match self {
            ExtRat::Finite(x) => x > r,
            ExtRat::Infinite => true,
        }
    }

    /// `self >= r`
    pub fn ge(&self, r: &Rat) -> bool {
        match self {
            ExtRat::Finite(x) => x >= r,
            ExtRat::Infinite => true,
        }
    }

    pub fn scale(&self, k: &Rat) -> ExtRat {
        match self {
            ExtRat::Finite(x) => ExtRat::Finite(x * k),
            ExtRat::Infinite => ExtRat::Infinite,
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinite) => Ordering::Less,
            (ExtRat::Infinite, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinite, ExtRat::Infinite) => Ordering::Equal,
        }
    }
}

impl Add<&Rat> for &ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: &Rat) -> ExtRat {
        match self {
            ExtRat::Finite(a) => ExtRat::Finite(a + rhs),
            ExtRat::Infinite => ExtRat::Infinite,
        }
    }
}

impl Add<&ExtRat> for &ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: &ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinite,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => write!(f, "{r}"),
            ExtRat::Infinite => f.write_str("exact"),
        }
    }
}

/// Height used to order `Z[1/p]`: `max(|i|, p^m)` for `q = i/p^m` reduced.
pub fn zp_height(q: &Rat, p: u32) -> Option<BigInt> {
    let (i, m) = zp_parts(q, p)?;
    let pm = num_traits::pow(BigInt::from(p), m as usize);
    Some(i.abs().max(pm))
}

/// The fixed enumeration `omega: N+ -> Z[1/p]`.
///
/// Reduced fractions `i/p^m` are listed by increasing height
/// `max(|i|, p^m)`; within a height by smaller `m`, then smaller `|i|`, then
/// the positive sign first. `omega(1) = 0`.
#[derive(Clone, Debug)]
pub struct OmegaEnumeration {
    p: u32,
    height: u64,
    pending: std::vec::IntoIter<Rat>,
}

impl OmegaEnumeration {
    pub fn new(p: u32) -> Self {
        OmegaEnumeration {
            p,
            height: 0,
            pending: Vec::new().into_iter(),
        }
    }

    fn level(&self, h: u64) -> Vec<Rat> {
        let p = self.p as u64;
        let mut out = Vec::new();
        let mut pm: u64 = 1;
        let mut m: u32 = 0;
        while pm <= h {
            let den = BigInt::from(pm);
            let reduced = |i: i64| m == 0 || i.rem_euclid(p as i64) != 0;
            let mut push = |i: i64| {
                if reduced(i) {
                    out.push(Rat::new(BigInt::from(i), den.clone()));
                }
            };
            if pm == h {
                push(0);
                for a in 1..=h as i64 {
                    push(a);
                    push(-a);
                }
            } else {
                push(h as i64);
                push(-(h as i64));
            }
            pm *= p;
            m += 1;
        }
        out
    }
}

impl Iterator for OmegaEnumeration {
    type Item = Rat;

    fn next(&mut self) -> Option<Rat> {
        loop {
            if let Some(q) = self.pending.next() {
                return Some(q);
            }
            self.height += 1;
            self.pending = self.level(self.height).into_iter();
        }
    }
}

/// `omega(m)` for `m >= 1`.
pub fn omega(m: usize, p: u32) -> Rat {
    assert!(m >= 1, "omega is indexed from 1");
    OmegaEnumeration::new(p)
        .nth(m - 1)
        .expect("infinite enumeration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zp_membership() {
        assert!(!is_in_zp(&rat(1, 2), 3));
        assert!(is_in_zp(&rat(5, 9), 3));
        assert!(is_in_zp(&int(7), 3));
        assert!(is_in_zp(&rat(-4, 27), 3));
        assert!(!is_in_zp(&rat(1, 6), 3));
    }

    #[test]
    fn omega_prefix() {
        let first: Vec<Rat> = OmegaEnumeration::new(3).take(11).collect();
        let want = [
            int(0),
            int(1),
            int(-1),
            int(2),
            int(-2),
            int(3),
            int(-3),
            rat(1, 3),
            rat(-1, 3),
            rat(2, 3),
            rat(-2, 3),
        ];
        assert_eq!(first, want);
        assert_eq!(omega(1, 3), int(0));
    }

    #[test]
    fn smallest_point_examples() {
        assert_eq!(smallest_zp_point(&rat(1, 2), &rat(3, 4), 3), rat(2, 3));
        assert_eq!(smallest_zp_point(&int(0), &rat(1, 4), 3), rat(1, 9));
        assert_eq!(smallest_zp_point(&rat(-1, 2), &rat(-1, 4), 3), rat(-1, 3));
        let hi = rat(1, 2) + p_pow(3, -6);
        let q = smallest_zp_point(&rat(1, 2), &hi, 3);
        assert!(q > rat(1, 2) && q < hi);
    }

    #[test]
    fn ext_rat_order() {
        assert!(ExtRat::Infinite > ExtRat::Finite(int(1_000_000)));
        assert!(ExtRat::Finite(int(1)) < ExtRat::Finite(int(2)));
        assert!(ExtRat::Infinite.gt(&int(5)));
        assert_eq!(&ExtRat::Finite(int(1)) + &int(2), ExtRat::Finite(int(3)));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "3", "-1/3", "22/7"] {
            assert_eq!(fmt_rat(&parse_rat(s).unwrap()), s);
        }
        assert!(parse_rat("1/").is_err());
        assert!(parse_rat("abc").is_err());
    }
}
