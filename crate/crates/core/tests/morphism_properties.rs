use cfrac_core::empirical::{EmpiricalModel, SubDistribution};
use cfrac_core::fraction::{noncontextual_fraction, BackendChoice, FractionOptions};
use cfrac_core::lp::Scalar;
use cfrac_core::morphisms::{
    choice, coarse_grain, couple_subdistributions, deterministic_from_generator, product, translate,
};
use cfrac_core::random::{random_ns_model, random_outcome_map, random_translation, seeded};
use cfrac_core::scenario::MeasurementScenario;
use cfrac_core::{deterministic_model, SizeLimit};
use num_rational::BigRational;
use proptest::prelude::*;

fn cf(e: &EmpiricalModel) -> f64 {
    noncontextual_fraction(e, &FractionOptions::with_backend(BackendChoice::Float))
        .unwrap()
        .cf
}

fn rational_sub() -> impl Strategy<Value = SubDistribution<u8, BigRational>> {
    prop::collection::btree_map(any::<u8>(), 1i64..20, 1..8).prop_flat_map(|raw| {
        let total: i64 = raw.values().sum();
        (Just(raw), 1i64..=total).prop_map(move |(raw, keep)| {
            // Scale so the weight is keep / total <= 1.
            SubDistribution::from_pairs(
                raw.into_iter()
                    .map(|(k, v)| (k, BigRational::from_ratio(v * keep, total * total))),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coupling_weight_and_marginals(s in rational_sub(), t in rational_sub()) {
        let c = couple_subdistributions(&s, &t);
        let w = if s.weight() < t.weight() { s.weight() } else { t.weight() };
        prop_assert_eq!(c.weight(), w);
        let mut left = SubDistribution::<u8, BigRational>::new();
        let mut right = SubDistribution::<u8, BigRational>::new();
        for ((a, b), v) in c.iter() {
            left.add(*a, v.clone());
            right.add(*b, v.clone());
        }
        for (k, v) in left.iter() {
            prop_assert!(*v <= s.get(k));
        }
        for (k, v) in right.iter() {
            prop_assert!(*v <= t.get(k));
        }
        if s.weight() == t.weight() {
            prop_assert_eq!(left, s);
            prop_assert_eq!(right, t);
        }
    }

    #[test]
    fn translation_and_coarse_graining_do_not_raise_cf(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let e = random_ns_model(&mut rng, 3).unwrap();
        let base = cf(&e);
        for source in 1..=3 {
            let f = random_translation(&mut rng, source, 3).unwrap();
            prop_assert!(cf(&translate(&f, &e).unwrap()) <= base + 1e-9);
        }
        let (h, labels) = random_outcome_map(&mut rng, 2);
        prop_assert!(cf(&coarse_grain(&e, &h, &labels).unwrap()) <= base + 1e-9);
    }

    #[test]
    fn choice_and_product(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_ns_model(&mut rng, 2).unwrap();
        let b = random_ns_model(&mut rng, 2).unwrap();
        let (ca, cb) = (cf(&a), cf(&b));
        prop_assert!((cf(&choice(&a, &b).unwrap()) - ca.max(cb)).abs() <= 1e-9);
        let p = product(&a, &b, SizeLimit::default()).unwrap();
        prop_assert!((1.0 - cf(&p) - (1.0 - ca) * (1.0 - cb)).abs() <= 1e-9);
    }

    #[test]
    fn generator_builds_every_vertex(g in 0usize..64) {
        let scn = MeasurementScenario::bell(3, 2, 2).unwrap();
        let assignment = scn.global_assignment(g);
        let built = deterministic_from_generator(&scn, &assignment.outcomes, SizeLimit::default()).unwrap();
        prop_assert_eq!(built, deterministic_model(&scn, &assignment));
    }
}

#[test]
fn coupling_of_an_empty_side_is_empty() {
    let s = SubDistribution::from_pairs([(0u8, <BigRational as Scalar>::from_ratio(1, 2))]);
    let t = SubDistribution::<u8, BigRational>::new();
    assert!(couple_subdistributions(&s, &t).is_empty());
}
