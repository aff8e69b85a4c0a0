//! The ground field `C` (completed perfection of `F_p((t))`) and the residue
//! field `C(y)` at the disk of radius value `gamma_x` around the origin.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::series::{Profile, TruncatedSeries};
use crate::valgroup::{fmt_rat, is_in_zp, smallest_zp_point, ExtRat, Rat};

pub fn is_odd_prime(p: u32) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// True iff `v` is the valuation of some nonzero element of `C`, i.e. `v` is in `Z[1/p]`.
pub fn value_in_ground_group(v: &Rat, p: u32) -> bool {
    is_in_zp(v, p)
}

#[derive(Clone, Debug)]
pub struct GroundField {
    p: u32,
    profile: Arc<Profile>,
}

impl GroundField {
    pub fn new(p: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::Config(format!("p = {p} is not an odd prime")));
        }
        Ok(GroundField {
            p,
            profile: Profile::ground(p),
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn profile(&self) -> &Arc<Profile> {
        &self.profile
    }

    /// The uniformizer `t`, valuation 1.
    pub fn uniformizer(&self) -> TruncatedSeries {
        self.power(Rat::one())
    }

    /// `t^a`
    pub fn power(&self, a: Rat) -> TruncatedSeries {
        TruncatedSeries::uniformizer_power(&self.profile, a)
    }

    /// `a / b` to the contracted precision of `1/b`, capped at `target`.
    pub fn divide(
        &self,
        a: &TruncatedSeries,
        b: &TruncatedSeries,
        target: &ExtRat,
    ) -> Result<TruncatedSeries> {
        let vb = b.valuation();
        let vb = vb.finite().ok_or(Error::NotAUnit)?;
        // a * (1/b): need 1/b to precision target - val a
        let need = match a.valuation() {
            ExtRat::Finite(va) => match target {
                ExtRat::Finite(t) => ExtRat::Finite(t - va),
                ExtRat::Infinite => ExtRat::Infinite,
            },
            ExtRat::Infinite => return Ok(a.clone()),
        };
        let avail = b.precision() + &(-Rat::from_integer(2.into()) * vb);
        let inv = b.invert(&need.min(avail))?;
        Ok(a.mul(&inv)?.truncated_to(target))
    }
}

#[derive(Clone, Debug)]
pub struct ResidueField {
    ground: GroundField,
    gamma_x: Rat,
    profile: Arc<Profile>,
}

impl ResidueField {
    pub fn new(ground: GroundField, gamma_x: Rat) -> Result<Self> {
        if gamma_x <= Rat::zero() {
            return Err(Error::Config("gamma_x must be positive".into()));
        }
        if is_in_zp(&gamma_x, ground.p) {
            return Err(Error::Config(format!(
                "gamma_x = {} lies in Z[1/{}], the disk would be Type II",
                fmt_rat(&gamma_x),
                ground.p
            )));
        }
        let profile = Profile::residue(ground.p, gamma_x.clone())?;
        Ok(ResidueField {
            ground,
            gamma_x,
            profile,
        })
    }

    pub fn ground(&self) -> &GroundField {
        &self.ground
    }

    pub fn gamma_x(&self) -> &Rat {
        &self.gamma_x
    }

    pub fn profile(&self) -> &Arc<Profile> {
        &self.profile
    }

    /// `C -> C(y)`
    pub fn embed_ground(&self, a: &TruncatedSeries) -> Result<TruncatedSeries> {
        if a.profile() != self.ground.profile() {
            return Err(Error::ProfileMismatch);
        }
        Ok(a.reprofile(
            &self.profile,
            |e| vec![e[0].clone(), Rat::zero()],
            a.precision().clone(),
        ))
    }

    /// Exact `coeff * t^a * x^q`.
    pub fn monomial(&self, coeff: u32, a: Rat, q: Rat) -> TruncatedSeries {
        TruncatedSeries::monomial(&self.profile, coeff, vec![a, q])
    }

    pub fn x(&self) -> TruncatedSeries {
        self.monomial(1, Rat::zero(), Rat::one())
    }

    /// Whether two exponent pairs collide in weight. For rational `gamma_x`
    /// this happens exactly when `(q - q') * gamma_x` lies in `Z[1/p]`.
    pub fn weights_collide(&self, a: (&Rat, &Rat), b: (&Rat, &Rat)) -> bool {
        a.0 + a.1 * &self.gamma_x == b.0 + b.1 * &self.gamma_x
    }
}

/// Berkovich type of a disk point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointType {
    TypeI,
    TypeII,
    TypeIII,
}

impl fmt::Display for PointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointType::TypeI => "TypeI",
            PointType::TypeII => "TypeII",
            PointType::TypeIII => "TypeIII",
        })
    }
}

/// Additive radius `-log r`; `Point` is radius zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Radius {
    Point,
    Value(Rat),
}

impl Radius {
    pub fn parse(s: &str) -> Result<Radius> {
        match s.trim() {
            "point" | "inf" => Ok(Radius::Point),
            other => {
                let v = crate::valgroup::parse_rat(other)?;
                if v < Rat::zero() {
                    return Err(Error::Parse(format!("radius value {other} is negative")));
                }
                Ok(Radius::Value(v))
            }
        }
    }
}

/// A disk `{ |x_i - center_i| <= r_i }` inside the closed unit polydisk.
#[derive(Clone, Debug)]
pub struct DiskPoint {
    pub center: Vec<TruncatedSeries>,
    pub radii: Vec<Radius>,
}

/// Type I when every radius is the point sentinel, Type III when some finite
/// radius value lies outside the value group, Type II otherwise.
///
/// The center never changes the type of a disk point over `C`.
pub fn classify_disk_point(point: &DiskPoint, p: u32) -> PointType {
    let finite: Vec<&Rat> = point
        .radii
        .iter()
        .filter_map(|r| match r {
            Radius::Value(v) => Some(v),
            Radius::Point => None,
        })
        .collect();
    if finite.is_empty() {
        PointType::TypeI
    } else if finite.iter().all(|v| value_in_ground_group(v, p)) {
        PointType::TypeII
    } else {
        PointType::TypeIII
    }
}

/// Valuation of the constant `c` with `s < |c x^{-1}|_y < 1`: the
/// smallest-denominator point of `Z[1/p]` in `(gamma_x, gamma_x + v_s)`.
pub fn choose_c_valuation(gamma_x: &Rat, v_s: &Rat, p: u32) -> Rat {
    smallest_zp_point(gamma_x, &(gamma_x + v_s), p)
}

pub fn choose_c(ground: &GroundField, gamma_x: &Rat, v_s: &Rat) -> TruncatedSeries {
    ground.power(choose_c_valuation(gamma_x, v_s, ground.p()))
}
