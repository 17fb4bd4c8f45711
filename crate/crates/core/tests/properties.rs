use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use proptest::prelude::*;

use rankone::construction::{heights, ConstructionParams, StageParams};
use rankone::oracle::LabelArray;
use rankone::series::Word;
use rankone::weaktop::{corr, hadic_decompose, weak_discrepancy, CorrelationPanel};
use rankone::{adjoint, convolve, expand_occupancy, power, AdmissibleSeries, FormalElement};

fn element() -> impl Strategy<Value = FormalElement> {
    prop::collection::btree_map(-4i64..=4, (0i64..=12, 1i64..=12), 0..5).prop_map(|m| {
        let coeffs = m.into_iter().map(|(z, (n, d))| (z, BigRational::new(n.into(), d.into())));
        FormalElement::from_coeffs(coeffs, Word::identity()).unwrap()
    })
}

fn series() -> impl Strategy<Value = AdmissibleSeries> {
    (1i64..=6, prop::collection::vec(0i64..=6, 1..4)).prop_filter_map("admissible", |(c0, rest)| {
        let total: i64 = c0 + rest.iter().sum::<i64>();
        let den = total + 1;
        let coeffs: Vec<BigRational> = std::iter::once(c0)
            .chain(rest)
            .map(|c| BigRational::new(c.into(), den.into()))
            .collect();
        AdmissibleSeries::from_dense(&coeffs).ok()
    })
}

fn params() -> impl Strategy<Value = ConstructionParams> {
    (1u64..=3, prop::collection::vec(prop::collection::vec(0u64..=4, 2..=4), 2..=4))
        .prop_map(|(h1, stages)| {
            ConstructionParams::new(h1, stages.iter().map(|s| StageParams::from_u64(s)).collect())
        })
        .prop_filter("small window", |p| {
            heights(p).unwrap().last().unwrap() <= &BigUint::from(4000u32)
        })
}

proptest! {
    #[test]
    fn convolution_laws(a in element(), b in element(), c in element()) {
        prop_assert_eq!(convolve(&a, &b), convolve(&b, &a));
        prop_assert_eq!(convolve(&convolve(&a, &b), &c), convolve(&a, &convolve(&b, &c)));
        prop_assert_eq!(convolve(&a, &b).mass(), a.mass() * b.mass());
        prop_assert_eq!(convolve(&a, &FormalElement::identity()), a.clone());
        prop_assert!(convolve(&a, &FormalElement::zero()).is_zero());
    }

    #[test]
    fn adjoint_laws(a in element(), b in element()) {
        prop_assert_eq!(adjoint(&adjoint(&a)), a.clone());
        prop_assert_eq!(adjoint(&convolve(&a, &b)), convolve(&adjoint(&a), &adjoint(&b)));
        prop_assert_eq!(adjoint(&a).mass(), a.mass());
    }

    #[test]
    fn power_adds_exponents(p in series(), x in 0u32..5, y in 0u32..5) {
        let e = p.element(0);
        prop_assert_eq!(convolve(&power(&e, x), &power(&e, y)), power(&e, x + y));
        prop_assert_eq!(power(&e, x).mass(), num_traits::pow(p.mass(), x as usize));
    }

    #[test]
    fn heights_follow_recurrence(p in params(), extra in prop::collection::vec(0u64..50, 2..5)) {
        let hs = heights(&p).unwrap();
        for (j, s) in p.stages.iter().enumerate() {
            prop_assert_eq!(&hs[j + 1], &(&hs[j] * BigUint::from(s.r) + s.spacer_total()));
        }
        let mut longer = p.clone();
        longer.push_stage(StageParams::from_u64(&extra));
        prop_assert_eq!(&heights(&longer).unwrap()[..hs.len()], &hs[..]);
        prop_assert_eq!(ConstructionParams::from_json_str(&p.to_json_string()).unwrap(), p);
    }

    #[test]
    fn corr_matches_oracle(p in params(), base_pick in 0usize..8, m_pick in any::<i64>(), seed in any::<u64>()) {
        let top = p.tower_count();
        let base = 1 + base_pick % (top - 1);
        let occ = expand_occupancy(&p, base, top).unwrap();
        let arr = LabelArray::build(&p, base, top, 1 << 20).unwrap();
        let labels = arr.labels.iter().flatten().max().copied().unwrap() as u64 + 1;
        let a: Vec<u64> = (0..labels).filter(|b| (seed >> (b % 64)) & 1 == 1).collect();
        let a = if a.is_empty() { vec![0] } else { a };
        let b: Vec<u64> = (0..labels).filter(|b| (seed >> ((b + 7) % 64)) & 1 == 0).collect();
        let b = if b.is_empty() { vec![labels - 1] } else { b };
        let n = arr.len() as i64;
        let m = BigInt::from(m_pick.rem_euclid(2 * n - 1) - (n - 1));
        prop_assert_eq!(corr(&occ, &m, &a, &b).unwrap().count, arr.corr_count(&m, &a, &b));
        prop_assert_eq!(
            corr(&occ, &m, &a, &b).unwrap().count,
            corr(&occ, &-m.clone(), &b, &a).unwrap().count
        );
    }

    #[test]
    fn shifted_mass_is_conserved(p in params(), m_pick in any::<i64>(), a_pick in any::<u64>()) {
        let top = p.tower_count();
        let occ = expand_occupancy(&p, 1, top).unwrap();
        let arr = LabelArray::build(&p, 1, top, 1 << 20).unwrap();
        let labels = p.h1;
        let a = vec![a_pick % labels];
        let n = arr.len() as i64;
        let m = BigInt::from(m_pick.rem_euclid(2 * n + 1) - n);
        let landed: u128 = (0..labels).map(|b| corr(&occ, &m, &a, &[b]).unwrap().count).sum();
        prop_assert_eq!(landed + arr.lost(&m, &a), occ.copies());
    }

    #[test]
    fn point_mass_has_zero_discrepancy(p in params(), m_pick in any::<i64>()) {
        let top = p.tower_count();
        let occ = expand_occupancy(&p, 1, top).unwrap();
        let w = heights(&p).unwrap()[top - 1].clone();
        let quarter = i64::try_from(&w).unwrap() / 4;
        prop_assume!(quarter > 1);
        let m = m_pick.rem_euclid(2 * quarter - 1) - (quarter - 1);
        let panel = CorrelationPanel::default_for(&occ);
        let d = weak_discrepancy(&occ, &BigInt::from(m), &FormalElement::shift(m), &panel).unwrap();
        prop_assert_eq!(d.delta, 0.0);
    }

    #[test]
    fn hadic_values_reconstruct(m in -100_000i64..100_000, a_bound in 0u64..4, z_bound in 0u64..5) {
        let hs: Vec<BigUint> = [1u64, 4, 19, 83, 400, 1777].iter().map(|&h| BigUint::from(h)).collect();
        if let Some(d) = hadic_decompose(&BigInt::from(m), &hs, a_bound, z_bound) {
            prop_assert_eq!(d.value(&hs), BigInt::from(m));
            prop_assert!(d.terms.iter().all(|t| t.a.unsigned_abs() <= a_bound && t.a != 0));
            prop_assert!(d.z.magnitude() <= &BigUint::from(z_bound));
            prop_assert!(d.terms.windows(2).all(|w| w[0].stage > w[1].stage));
        }
    }
}
