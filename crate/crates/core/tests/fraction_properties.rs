use cfrac_core::builtins;
use cfrac_core::empirical::{deterministic_model, mix};
use cfrac_core::fraction::{
    decompose, noncontextual_fraction, solve_dual, witnessing_inequality, BackendChoice,
    FractionOptions,
};
use cfrac_core::lp::Scalar;
use cfrac_core::morphisms::{translate, MeasurementTranslation};
use cfrac_core::quantum::{born_model, uniform_settings};
use cfrac_core::random::{random_ns_model, random_state, seeded};
use cfrac_core::scenario::{build_incidence_matrix, MeasurementScenario};
use cfrac_core::{BellInequality, SizeLimit};
use num_rational::BigRational;
use proptest::prelude::*;

fn float() -> FractionOptions {
    FractionOptions::with_backend(BackendChoice::Float)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_is_a_consistent_subdistribution(seed in any::<u64>(), parties in 1usize..4) {
        let e = random_ns_model(&mut seeded(seed), parties).unwrap();
        let r = noncontextual_fraction(&e, &float()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r.ncf));
        prop_assert!((r.ncf + r.cf - 1.0).abs() < 1e-15);
        prop_assert!((r.b_star.weight() - r.ncf).abs() < 1e-9);
        prop_assert!(r.b_star.iter().all(|(_, &w)| w >= -1e-12));
        let inc = build_incidence_matrix(e.scenario(), SizeLimit::default()).unwrap();
        let mut dense = vec![0.0; inc.cols()];
        for (&g, &w) in r.b_star.iter() {
            dense[g] = w;
        }
        let mb = inc.apply(&dense);
        for (x, v) in mb.iter().zip(e.to_vector()) {
            prop_assert!(*x <= v + 1e-9, "{} > {}", x, v);
        }
    }

    #[test]
    fn witness_matches_fraction(seed in any::<u64>(), parties in 2usize..4) {
        let e = random_ns_model(&mut seeded(seed), parties).unwrap();
        let r = noncontextual_fraction(&e, &float()).unwrap();
        let dual = solve_dual(&e, &float()).unwrap();
        prop_assert!((dual.value - r.ncf).abs() <= 1e-7);
        let w = witnessing_inequality(&e, &float()).unwrap();
        prop_assert!(w.inequality.local_maximum(SizeLimit::default()).unwrap() <= 1e-9);
        prop_assert!((w.normalized_violation(&e).unwrap() - r.cf).abs() <= 1e-7);
        if r.cf > 1e-7 {
            prop_assert!((w.inequality.algebraic_bound() - 1.0).abs() <= 1e-7);
        }
        let dec = decompose(&e, &r, SizeLimit::default()).unwrap();
        prop_assert!(dec.recombination_error(&e) <= 1e-7);
    }

    #[test]
    fn pr_box_mixed_with_a_vertex(k in 0i64..=64, g in 0usize..16) {
        let scn = MeasurementScenario::bell(2, 2, 2).unwrap();
        let d = deterministic_model(&scn, &scn.global_assignment(g));
        let e = mix(&builtins::pr_box(), &d, k as f64 / 64.0).unwrap();
        let r = noncontextual_fraction(&e, &FractionOptions::with_backend(BackendChoice::Rational)).unwrap();
        let ncf = r.exact_ncf.unwrap();
        let floor = <BigRational as Scalar>::from_ratio(64 - k, 64);
        // Convexity gives cf <= lambda; a vertex on the facet PR violates
        // leaves no room for more.
        prop_assert!(ncf >= floor);
        if BellInequality::chsh().evaluate(&d).unwrap() == 2.0 {
            prop_assert_eq!(ncf, floor);
        }
    }

    #[test]
    fn rotation_covariance(seed in any::<u64>(), phi1 in 0.0..std::f64::consts::PI, phi2 in 0.0..std::f64::consts::PI, turn in -3.0f64..3.0) {
        let state = random_state(&mut seeded(seed), 2);
        let rotated = born_model(&state, &uniform_settings(2, phi1 + turn, phi2 + turn)).unwrap();
        let moved = born_model(&state.rotate_z(-turn), &uniform_settings(2, phi1, phi2)).unwrap();
        for (a, b) in rotated.tables().iter().flatten().zip(moved.tables().iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let (x, y) = (noncontextual_fraction(&rotated, &float()).unwrap().cf, noncontextual_fraction(&moved, &float()).unwrap().cf);
        prop_assert!((x - y).abs() <= 1e-9);
    }

    #[test]
    fn relabelling_parties_preserves_fraction(seed in any::<u64>(), swap_settings in any::<bool>()) {
        let e = random_ns_model(&mut seeded(seed), 3).unwrap();
        let scn = e.scenario().clone();
        // Rotate the parties a -> b -> c -> a, optionally swapping settings.
        let map: Vec<usize> = (0..6).map(|x| {
            let (p, s) = (x / 2, x % 2);
            2 * ((p + 1) % 3) + if swap_settings { 1 - s } else { s }
        }).collect();
        let f = MeasurementTranslation::new(scn.clone(), scn, map).unwrap();
        let pulled = translate(&f, &e).unwrap();
        let (a, b) = (noncontextual_fraction(&e, &float()).unwrap().cf, noncontextual_fraction(&pulled, &float()).unwrap().cf);
        prop_assert!((a - b).abs() <= 1e-9);
    }
}
