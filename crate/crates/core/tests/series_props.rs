mod common;

use common::*;
use hahn_core::series::text::parse_series;
use hahn_core::valgroup::{ExtRat, Rat};
use hahn_core::Error;
use proptest::prelude::*;

fn min_ext(a: ExtRat, b: ExtRat) -> ExtRat {
    a.min(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mul_matches_schoolbook(f in ground_series(), g in ground_series()) {
        prop_assert_eq!(f.mul(&g).unwrap(), schoolbook_mul(&f, &g));
    }

    #[test]
    fn mul_matches_schoolbook_residue(f in residue_series(), g in residue_series()) {
        prop_assert_eq!(f.mul(&g).unwrap(), schoolbook_mul(&f, &g));
    }

    #[test]
    fn valuation_is_multiplicative(f in residue_series(), g in residue_series()) {
        prop_assume!(!f.is_empty() && !g.is_empty());
        let vf = f.valuation();
        let vg = g.valuation();
        prop_assert_eq!(f.mul(&g).unwrap().valuation(), &vf + &vg);
    }

    #[test]
    fn valuation_is_ultrametric(f in residue_series(), g in residue_series()) {
        let vf = f.valuation();
        let vg = g.valuation();
        let s = f.add(&g).unwrap().valuation();
        prop_assert!(s >= min_ext(vf.clone(), vg.clone()));
        if vf != vg {
            prop_assert_eq!(s, min_ext(vf, vg));
        }
    }

    #[test]
    fn ring_axioms(f in ground_series(), g in ground_series(), h in ground_series()) {
        let lhs = f.mul(&g.add(&h).unwrap()).unwrap();
        let rhs = f.mul(&g).unwrap().add(&f.mul(&h).unwrap()).unwrap();
        let bound = min_ext(lhs.precision().clone(), rhs.precision().clone());
        if let ExtRat::Finite(b) = bound {
            prop_assert!(lhs.agrees_below(&rhs, &b));
        }
        prop_assert_eq!(f.mul(&g).unwrap(), g.mul(&f).unwrap());
        prop_assert_eq!(f.add(&g).unwrap().add(&h).unwrap(), f.add(&g.add(&h).unwrap()).unwrap());
    }

    #[test]
    fn invert_round_trips(f in ground_series()) {
        prop_assume!(!f.is_empty());
        let v = f.valuation().finite().unwrap().clone();
        let p = f.precision().finite().unwrap().clone();
        let two = Rat::from_integer(2.into());
        let target = ExtRat::Finite(&p - &two * &v);
        let inv = f.invert(&target).unwrap();
        let one = f.mul(&inv).unwrap();
        let bound = &p - &v;
        prop_assert!(one.precision().ge(&bound));
        let unit = hahn_core::TruncatedSeries::one(f.profile()).with_precision(bound.clone().into());
        prop_assert!(one.agrees_below(&unit, &bound));
    }

    #[test]
    fn invert_refuses_more_than_contracted(f in ground_series()) {
        prop_assume!(f.len() > 1);
        let v = f.valuation().finite().unwrap().clone();
        let p = f.precision().finite().unwrap().clone();
        let two = Rat::from_integer(2.into());
        let too_much = ExtRat::Finite(&p - &two * &v + Rat::from_integer(1.into()));
        let refused = matches!(f.invert(&too_much), Err(Error::InsufficientPrecision { .. }));
        prop_assert!(refused);
    }

    #[test]
    fn frobenius_is_a_ring_map(f in residue_series(), g in residue_series(), k in -2i64..=2) {
        prop_assert_eq!(f.frobenius(k).frobenius(-k), f.clone());
        prop_assert_eq!(f.mul(&g).unwrap().frobenius(k), f.frobenius(k).mul(&g.frobenius(k)).unwrap());
        prop_assert_eq!(f.add(&g).unwrap().frobenius(k), f.frobenius(k).add(&g.frobenius(k)).unwrap());
    }

    #[test]
    fn truncation_never_raises(f in residue_series(), cap in 0i64..25) {
        let cap = ExtRat::Finite(Rat::from_integer(cap.into()));
        match f.truncate(&cap) {
            Ok(t) => prop_assert!(t.precision() <= f.precision()),
            Err(Error::PrecisionIncrease { .. }) => prop_assert!(&cap > f.precision()),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn text_round_trip(f in residue_series()) {
        let text = f.to_string();
        prop_assert_eq!(parse_series(&text, f.profile()).unwrap(), f);
    }
}
