//! Line-oriented text form of a series.
//!
//! ```text
//! 1 t^1/9
//! 2 t^0 x^1/3
//! O(26)
//! ```
//!
//! One term per line, `t` always printed, variables printed only with a
//! nonzero exponent; the last line is the precision, `O(exact)` for exact
//! series. Terms are ordered by `(weight, exponent vector)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;

use super::{Profile, TruncatedSeries};
use crate::error::{Error, Result};
use crate::valgroup::{fmt_rat, parse_rat, ExtRat};

pub(super) fn render(s: &TruncatedSeries) -> String {
    let mut out = String::new();
    let names = s.profile.names();
    for (_, e, c) in s.sorted_terms() {
        out.push_str(&format!("{c} t^{}", fmt_rat(&e[0])));
        for (name, q) in names.iter().zip(&e[1..]) {
            if !q.is_zero() {
                out.push_str(&format!(" {name}^{}", fmt_rat(q)));
            }
        }
        out.push('\n');
    }
    out.push_str(&format!("O({})\n", s.precision));
    out
}

/// Parses the text form against `profile`; rejects anything `render` would
/// not produce up to term order and whitespace.
pub fn parse_series(input: &str, profile: &Arc<Profile>) -> Result<TruncatedSeries> {
    let lines: Vec<&str> = input
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let (last, body) = lines
        .split_last()
        .ok_or_else(|| Error::Format("empty series".into()))?;
    let precision = parse_precision(last)?;
    let p = profile.p();
    let mut seen = BTreeSet::new();
    let mut terms = Vec::with_capacity(body.len());
    for line in body {
        let mut tokens = line.split_whitespace();
        let coeff: u32 = tokens
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad coefficient in `{line}`")))?;
        if coeff == 0 || coeff >= p {
            return Err(Error::Format(format!("coefficient {coeff} outside 1..{p}")));
        }
        let mut e = profile.zero_exponents();
        let mut given = vec![false; e.len()];
        for tok in tokens {
            let (name, q) = tok
                .split_once('^')
                .ok_or_else(|| Error::Format(format!("bad monomial factor `{tok}`")))?;
            let slot = if name == "t" {
                0
            } else {
                1 + profile
                    .names()
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Format(format!("unknown variable `{name}`")))?
            };
            if given[slot] {
                return Err(Error::Format(format!(
                    "repeated variable `{name}` in `{line}`"
                )));
            }
            given[slot] = true;
            e[slot] = parse_rat(q)?;
        }
        if !precision.gt(&profile.weight(&e)) {
            return Err(Error::Format(format!(
                "term `{line}` at or above the precision"
            )));
        }
        if !seen.insert(e.clone()) {
            return Err(Error::Format(format!("duplicate monomial `{line}`")));
        }
        terms.push((e, coeff));
    }
    Ok(TruncatedSeries::from_terms(profile, terms, precision))
}

fn parse_precision(line: &str) -> Result<ExtRat> {
    let inner = line
        .strip_prefix("O(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Format(format!("expected `O(<rat>)`, got `{line}`")))?;
    if inner.trim() == "exact" {
        Ok(ExtRat::Infinite)
    } else {
        Ok(ExtRat::Finite(parse_rat(inner)?))
    }
}
