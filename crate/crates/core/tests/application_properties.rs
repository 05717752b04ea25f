use cfrac_core::fraction::{BackendChoice, FractionOptions};
use cfrac_core::games::{check_failure_bound as game_bound, Strategy};
use cfrac_core::mbqc::{check_failure_bound as mbqc_bound, nu_tilde, BooleanFunction};
use cfrac_core::random::{random_deterministic, random_game, random_mbqc, random_ns_model, seeded};
use cfrac_core::SizeLimit;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mbqc_failure_bound(seed in any::<u64>()) {
        let (k, f) = random_mbqc(&mut seeded(seed)).unwrap();
        let r = mbqc_bound(&k, &f, &FractionOptions::with_backend(BackendChoice::Float), false).unwrap();
        prop_assert!(r.slack >= -1e-9, "{:?}", r);
        prop_assert!((0.0..=1.0).contains(&r.nu_tilde));
    }

    #[test]
    fn deterministic_resources_compute_affine_maps(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (k, _) = random_mbqc(&mut rng).unwrap();
        let det = random_deterministic(&mut rng, &k.resource().scenario().clone());
        let h = k.with_resource(det).unwrap().deterministic_function().unwrap().unwrap();
        prop_assert!(h.is_affine());
        prop_assert_eq!(nu_tilde(&h, false).unwrap(), 0.0);
    }

    #[test]
    fn affine_tables_are_recognised(m in 1usize..4, l in 1usize..3, cols in prop::collection::vec(0u32..4, 3), c in 0u32..4) {
        let mask = (1u32 << l) - 1;
        let f = BooleanFunction::from_fn(m, l, |i| {
            (0..m).filter(|b| (i >> b) & 1 == 1).fold(c & mask, |acc, b| acc ^ (cols[b] & mask))
        }).unwrap();
        prop_assert!(f.is_affine());
        prop_assert_eq!(nu_tilde(&f, false).unwrap(), 0.0);
        let homogeneous = nu_tilde(&f, true).unwrap();
        if c & mask == 0 {
            prop_assert_eq!(homogeneous, 0.0);
        } else {
            prop_assert!(homogeneous > 0.0);
        }
    }

    #[test]
    fn game_inequality_is_valid_and_bound_holds(seed in any::<u64>(), parties in 1usize..4) {
        let mut rng = seeded(seed);
        let cs = random_game(&mut rng, parties).unwrap();
        let k = cs.k_consistency(SizeLimit::default()).unwrap();
        let ineq = cs.bell_inequality(k).unwrap();
        prop_assert!(ineq.is_bell_inequality(SizeLimit::default()).unwrap());
        prop_assert!(ineq.is_tight(SizeLimit::default()).unwrap());
        prop_assert!(ineq.algebraic_bound() <= cs.num_formulae() as f64);
        let e = random_ns_model(&mut rng, parties).unwrap();
        let s = Strategy::from_model(&cs, &e).unwrap();
        let r = game_bound(&cs, &s, &FractionOptions::with_backend(BackendChoice::Float)).unwrap();
        prop_assert!(r.slack >= -1e-9, "{:?}", r);
        prop_assert!((ineq.evaluate(&e).unwrap() - r.success * r.n as f64).abs() <= 1e-9);
    }
}
