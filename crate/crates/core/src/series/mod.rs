//! Truncated generalized power series with `Z[1/p]` exponents over `F_p`.
//!
//! A [`TruncatedSeries`] stores finitely many terms `c * t^a * x1^q1 * ...`
//! and a precision bound `P`. It stands for every series whose terms of
//! weight `< P` are exactly the stored ones; everything else has weight
//! `>= P`. The weight of a monomial is the dot product of its exponent vector
//! with the [`Profile`] weights, so the valuation of a nonzero series is the
//! minimal weight of its terms.

pub mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::valgroup::{is_in_zp, p_pow, ExtRat, Rat};

pub use text::parse_series;

/// Exponent vector: slot 0 is the uniformizer `t`, slots `1..` the variables.
pub type Exponents = Vec<Rat>;

/// Additive weights turning exponent vectors into valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    p: u32,
    /// `weights[0] == 1` always.
    weights: Vec<Rat>,
    /// Variable names for slots `1..`.
    names: Vec<String>,
}

impl Profile {
    pub fn new(p: u32, var_weights: Vec<Rat>, names: Vec<String>) -> Result<Arc<Profile>> {
        if var_weights.len() != names.len() {
            return Err(Error::Config("weight and name counts differ".into()));
        }
        if var_weights.iter().any(|w| *w < Rat::zero()) {
            return Err(Error::Config("profile weights must be >= 0".into()));
        }
        if names.iter().any(|n| n == "t" || n.is_empty()) {
            return Err(Error::Config("invalid variable name".into()));
        }
        let mut weights = vec![Rat::one()];
        weights.extend(var_weights);
        Ok(Arc::new(Profile { p, weights, names }))
    }

    /// Profile of the ground field: `t` alone.
    pub fn ground(p: u32) -> Arc<Profile> {
        Profile::new(p, vec![], vec![]).expect("valid profile")
    }

    /// Profile of the residue field at the disk of radius value `gamma`.
    pub fn residue(p: u32, gamma: Rat) -> Result<Arc<Profile>> {
        Profile::new(p, vec![gamma], vec!["x".into()])
    }

    /// Gauss-norm profile of the Tate algebra in `n` variables `x1..xn`.
    pub fn tate(p: u32, n: usize) -> Arc<Profile> {
        Profile::new(
            p,
            vec![Rat::zero(); n],
            (1..=n).map(|i| format!("x{i}")).collect(),
        )
        .expect("valid profile")
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of exponent slots, `t` included.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn weight(&self, e: &[Rat]) -> Rat {
        debug_assert_eq!(e.len(), self.weights.len());
        let mut w = e[0].clone();
        for (a, b) in e[1..].iter().zip(&self.weights[1..]) {
            if !a.is_zero() && !b.is_zero() {
                w += a * b;
            }
        }
        w
    }

    /// A variable weight outside `Z[1/p]`: leading terms are expected to be unique.
    pub fn is_type_iii(&self) -> bool {
        self.weights[1..].iter().any(|w| !is_in_zp(w, self.p))
    }

    pub fn zero_exponents(&self) -> Exponents {
        vec![Rat::zero(); self.dim()]
    }
}

/// Result of [`TruncatedSeries::valuation_and_leading`].
#[derive(Clone, Debug, PartialEq)]
pub enum Leading {
    /// No stored term: the series has valuation `>= lower_bound`.
    Zero { lower_bound: ExtRat },
    Term {
        valuation: Rat,
        exponents: Exponents,
        coeff: u32,
    },
}

#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    profile: Arc<Profile>,
    terms: BTreeMap<Exponents, u32>,
    precision: ExtRat,
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p is prime, a != 0 mod p
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.profile == other.profile
            && self.precision == other.precision
            && self.terms == other.terms
    }
}

impl TruncatedSeries {
    pub fn zero(profile: &Arc<Profile>, precision: ExtRat) -> Self {
        TruncatedSeries {
            profile: profile.clone(),
            terms: BTreeMap::new(),
            precision,
        }
    }

    pub fn exact_zero(profile: &Arc<Profile>) -> Self {
        Self::zero(profile, ExtRat::Infinite)
    }

    pub fn one(profile: &Arc<Profile>) -> Self {
        Self::monomial(profile, 1, profile.zero_exponents())
    }

    /// Exact single term `coeff * t^e0 * x^e1 ...`.
    pub fn monomial(profile: &Arc<Profile>, coeff: u32, exponents: Exponents) -> Self {
        Self::from_terms(profile, [(exponents, coeff)], ExtRat::Infinite)
    }

    /// `t^a` over any profile.
    pub fn uniformizer_power(profile: &Arc<Profile>, a: Rat) -> Self {
        let mut e = profile.zero_exponents();
        e[0] = a;
        Self::monomial(profile, 1, e)
    }

    /// Builds a series from raw terms; duplicate exponents are summed, zero
    /// coefficients and terms at or above `precision` are dropped.
    pub fn from_terms<I>(profile: &Arc<Profile>, terms: I, precision: ExtRat) -> Self
    where
        I: IntoIterator<Item = (Exponents, u32)>,
    {
        let p = profile.p as u64;
        let mut map: BTreeMap<Exponents, u32> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), profile.dim(), "exponent length");
            let c = (c as u64 % p) as u32;
            if c == 0 {
                continue;
            }
            let entry = map.entry(e).or_insert(0);
            *entry = ((*entry as u64 + c as u64) % p) as u32;
        }
        map.retain(|e, c| *c != 0 && !precision.le_rat(&profile.weight(e)));
        TruncatedSeries {
            profile: profile.clone(),
            terms: map,
            precision,
        }
    }

    pub fn profile(&self) -> &Arc<Profile> {
        &self.profile
    }

    pub fn p(&self) -> u32 {
        self.profile.p
    }

    pub fn precision(&self) -> &ExtRat {
        &self.precision
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, u32)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// No stored terms (the series may still be nonzero above its precision).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.precision.is_infinite()
    }

    pub fn is_exact(&self) -> bool {
        self.precision.is_infinite()
    }

    pub fn coeff(&self, e: &[Rat]) -> u32 {
        self.terms.get(e).copied().unwrap_or(0)
    }

    pub fn weight(&self, e: &[Rat]) -> Rat {
        self.profile.weight(e)
    }

    /// Terms with their weights, ordered by `(weight, exponents)`.
    pub fn sorted_terms(&self) -> Vec<(Rat, Exponents, u32)> {
        let mut v: Vec<(Rat, Exponents, u32)> = self
            .terms
            .iter()
            .map(|(e, c)| (self.profile.weight(e), e.clone(), *c))
            .collect();
        v.sort();
        v
    }

    fn check_profile(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.profile, &other.profile) || self.profile == other.profile {
            Ok(())
        } else {
            Err(Error::ProfileMismatch)
        }
    }

    /// Lower bound on the valuation: the minimal stored weight, or the
    /// precision when nothing is stored. Exact whenever a term is stored.
    pub fn valuation(&self) -> ExtRat {
        self.terms
            .keys()
            .map(|e| self.profile.weight(e))
            .min()
            .map(ExtRat::Finite)
            .unwrap_or_else(|| self.precision.clone())
    }

    /// Valuation and the minimizing term.
    ///
    /// Under a Type III profile a tie for the minimal weight is an error; over
    /// other profiles the first tied term in exponent order is returned.
    pub fn valuation_and_leading(&self) -> Result<Leading> {
        let mut best: Option<(Rat, &Exponents, u32)> = None;
        let mut tied = false;
        for (e, c) in &self.terms {
            let w = self.profile.weight(e);
            match &best {
                Some((bw, _, _)) if w > *bw => {}
                Some((bw, _, _)) if w == *bw => tied = true,
                _ => {
                    best = Some((w, e, *c));
                    tied = false;
                }
            }
        }
        match best {
            None => Ok(Leading::Zero {
                lower_bound: self.precision.clone(),
            }),
            Some((w, _, _)) if tied && self.profile.is_type_iii() => {
                Err(Error::AmbiguousLeading(w.to_string()))
            }
            Some((valuation, e, coeff)) => Ok(Leading::Term {
                valuation,
                exponents: e.clone(),
                coeff,
            }),
        }
    }

    /// Number of stored terms attaining the minimal weight.
    pub fn leading_multiplicity(&self) -> usize {
        let v = self.valuation();
        self.terms
            .keys()
            .filter(|e| ExtRat::Finite(self.profile.weight(e)) == v)
            .count()
    }

    pub fn neg(&self) -> Self {
        let p = self.profile.p;
        TruncatedSeries {
            profile: self.profile.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), p - c)).collect(),
            precision: self.precision.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_profile(other)?;
        let precision = self.precision.clone().min(other.precision.clone());
        let terms = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .map(|(e, c)| (e.clone(), *c));
        Ok(Self::from_terms(&self.profile, terms, precision))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by `c` in `F_p`.
    pub fn scale(&self, c: u32) -> Self {
        let p = self.profile.p as u64;
        let terms = self
            .terms
            .iter()
            .map(|(e, k)| (e.clone(), ((*k as u64 * c as u64) % p) as u32));
        Self::from_terms(&self.profile, terms, self.precision.clone())
    }

    /// Precision of a product: `min(prec f + val g, prec g + val f)`.
    pub fn product_precision(&self, other: &Self) -> ExtRat {
        let a = &self.precision + &other.valuation();
        let b = &other.precision + &self.valuation();
        a.min(b)
    }

    /// Sparse convolution, truncated at the contracted product precision.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_profile(other)?;
        let precision = self.product_precision(other);
        let p = self.profile.p as u64;
        let lhs = self.sorted_terms();
        let rhs = other.sorted_terms();
        let mut out: BTreeMap<Exponents, u64> = BTreeMap::new();
        let rhs_min = match rhs.first() {
            Some(t) => t.0.clone(),
            None => Rat::zero(),
        };
        for (wa, ea, ca) in &lhs {
            if !precision.gt(&(wa + &rhs_min)) {
                break;
            }
            for (wb, eb, cb) in &rhs {
                if !precision.gt(&(wa + wb)) {
                    break;
                }
                let e: Exponents = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let slot = out.entry(e).or_insert(0);
                *slot = (*slot + *ca as u64 * *cb as u64) % p;
            }
        }
        Ok(Self::from_terms(
            &self.profile,
            out.into_iter().map(|(e, c)| (e, c as u32)),
            precision,
        ))
    }

    /// `self^k` for `k >= 0` by repeated squaring, each product truncated at `cap`.
    pub fn pow(&self, k: u64, cap: &ExtRat) -> Result<Self> {
        let mut result = Self::one(&self.profile);
        let mut base = self.truncated_to(cap);
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?.truncated_to(cap);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?.truncated_to(cap);
            }
        }
        Ok(result)
    }

    /// Single stored term and exact precision.
    pub fn as_exact_monomial(&self) -> Option<(&Exponents, u32)> {
        if self.is_exact() && self.terms.len() == 1 {
            self.terms.iter().next().map(|(e, c)| (e, *c))
        } else {
            None
        }
    }

    /// Inverse to precision `target`, by leading-term extraction and a
    /// geometric series in the tail.
    ///
    /// The contracted precision of `1/f` is `prec f - 2 val f`; asking for
    /// more is an error. Exact monomials invert exactly regardless of `target`.
    pub fn invert(&self, target: &ExtRat) -> Result<Self> {
        let p = self.profile.p as u64;
        let (v, lead_e, lead_c) = match self.valuation_and_leading()? {
            Leading::Zero { .. } => return Err(Error::NotAUnit),
            Leading::Term {
                valuation,
                exponents,
                coeff,
            } => (valuation, exponents, coeff),
        };
        if self.leading_multiplicity() > 1 {
            return Err(Error::NotAUnit);
        }
        let inv_c = mod_inv(lead_c as u64, p) as u32;
        let inv_lead = Self::monomial(&self.profile, inv_c, lead_e.iter().map(|x| -x).collect());
        if self.as_exact_monomial().is_some() {
            return Ok(inv_lead);
        }
        let available = &self.precision + &(-Rat::from_integer(2.into()) * &v);
        if target > &available || target.is_infinite() {
            return Err(Error::InsufficientPrecision {
                needed: Box::new(target.clone()),
                available: Box::new(available),
            });
        }
        let target = target.clone();
        let relative = &target + &v;
        // f / lead = 1 + h with val h > 0
        let h = inv_lead.mul(self)?.sub(&Self::one(&self.profile))?;
        let minus_h = h.neg().truncated_to(&relative);
        let mut sum = Self::one(&self.profile).truncated_to(&relative);
        let mut power = Self::one(&self.profile);
        loop {
            power = power.mul(&minus_h)?.truncated_to(&relative);
            if power.is_empty() {
                break;
            }
            sum = sum.add(&power)?;
        }
        let out = inv_lead.mul(&sum)?;
        Ok(out.truncated_to(&target))
    }

    /// Frobenius `k` times: exponents and precision scale by `p^k`.
    /// Coefficients are fixed since Frobenius is the identity on `F_p`.
    pub fn frobenius(&self, k: i64) -> Self {
        if k == 0 {
            return self.clone();
        }
        let scale = p_pow(self.profile.p, k);
        TruncatedSeries {
            profile: self.profile.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().map(|x| x * &scale).collect(), *c))
                .collect(),
            precision: self.precision.scale(&scale),
        }
    }

    /// Lowers the precision to `new_prec`; raising it is an error.
    pub fn truncate(&self, new_prec: &ExtRat) -> Result<Self> {
        if new_prec > &self.precision {
            return Err(Error::PrecisionIncrease {
                from: Box::new(self.precision.clone()),
                to: Box::new(new_prec.clone()),
            });
        }
        Ok(self.truncated_to(new_prec))
    }

    /// Precision `min(prec, cap)`; never fails.
    pub fn truncated_to(&self, cap: &ExtRat) -> Self {
        if cap >= &self.precision {
            return self.clone();
        }
        let mut terms = self.terms.clone();
        terms.retain(|e, _| cap.gt(&self.profile.weight(e)));
        TruncatedSeries {
            profile: self.profile.clone(),
            terms,
            precision: cap.clone(),
        }
    }

    /// Keeps the terms whose weight satisfies `keep`; precision unchanged.
    pub fn filter_terms(&self, mut keep: impl FnMut(&Rat, &Exponents) -> bool) -> Self {
        let mut terms = self.terms.clone();
        terms.retain(|e, _| keep(&self.profile.weight(e), e));
        TruncatedSeries {
            profile: self.profile.clone(),
            terms,
            precision: self.precision.clone(),
        }
    }

    /// Same series with a different precision, for callers that certify it.
    pub fn with_precision(&self, precision: ExtRat) -> Self {
        Self::from_terms(
            &self.profile,
            self.terms.iter().map(|(e, c)| (e.clone(), *c)),
            precision,
        )
    }

    /// Moves the terms to another profile through an exponent map.
    pub fn reprofile(
        &self,
        profile: &Arc<Profile>,
        map: impl Fn(&Exponents) -> Exponents,
        precision: ExtRat,
    ) -> Self {
        Self::from_terms(
            profile,
            self.terms.iter().map(|(e, c)| (map(e), *c)),
            precision,
        )
    }

    /// Every term of weight `< bound` agrees, and both are known below `bound`.
    pub fn agrees_below(&self, other: &Self, bound: &Rat) -> bool {
        if !self.precision.ge(bound) || !other.precision.ge(bound) {
            return false;
        }
        let low = |s: &Self| -> BTreeMap<Exponents, u32> {
            s.terms
                .iter()
                .filter(|(e, _)| s.profile.weight(e) < *bound)
                .map(|(e, c)| (e.clone(), *c))
                .collect()
        };
        low(self) == low(other)
    }
}

impl ExtRat {
    /// `self <= r`
    fn le_rat(&self, r: &Rat) -> bool {
        !self.gt(r)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::render(self))
    }
}
