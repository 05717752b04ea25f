//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cfrac_core::builtins;
use cfrac_core::empirical::{deterministic_model, mix, EmpiricalModel, SubDistribution};
use cfrac_core::fraction::{
    check_tightness, decompose, noncontextual_fraction, solve_dual, witnessing_inequality,
    BackendChoice, FractionOptions,
};
use cfrac_core::games::{check_failure_bound as game_bound, ConstraintSystem, Strategy};
use cfrac_core::lp::Scalar;
use cfrac_core::mbqc::{
    average_success, check_failure_bound as mbqc_bound, nu_tilde, BooleanFunction, L2Mbqc,
};
use cfrac_core::morphisms::{choice, coarse_grain, couple_subdistributions, product, translate};
use cfrac_core::quantum::{
    born_model, ghz_angle_check, ghz_state, sweep, sweep_maxima, uniform_settings, PureState,
};
use cfrac_core::random::{self, seeded};
use cfrac_core::scenario::{decode_mixed, MeasurementScenario};
use cfrac_core::{BellInequality, SizeLimit};
use num_rational::BigRational;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn opts(backend: BackendChoice) -> FractionOptions {
    FractionOptions::with_backend(backend)
}

fn cf(e: &EmpiricalModel) -> Result<f64, String> {
    noncontextual_fraction(e, &opts(BackendChoice::Auto))
        .map(|r| r.cf)
        .map_err(e2s)
}

fn ncf(e: &EmpiricalModel) -> Result<f64, String> {
    noncontextual_fraction(e, &opts(BackendChoice::Auto))
        .map(|r| r.ncf)
        .map_err(e2s)
}

fn criterion1() -> Outcome {
    let pr = builtins::pr_box();
    let exact = noncontextual_fraction(&pr, &opts(BackendChoice::Rational)).map_err(e2s)?;
    let one = <BigRational as Scalar>::one();
    let exact_cf = one - exact.exact_ncf.clone().ok_or("no exact value")?;
    ensure(exact_cf == <BigRational as Scalar>::one(), || {
        format!("rational cf = {exact_cf}")
    })?;
    let float = noncontextual_fraction(&pr.clone().into_float(), &opts(BackendChoice::Float))
        .map_err(e2s)?;
    ensure((float.cf - 1.0).abs() <= 1e-9, || {
        format!("float cf = {}", float.cf)
    })?;
    ensure(
        pr.is_strongly_contextual(0.0, SizeLimit::default())
            .map_err(e2s)?,
        || "not strongly contextual".into(),
    )?;
    Ok(format!(
        "rational cf = {exact_cf}, float cf = {:.12}",
        float.cf
    ))
}

fn criterion2() -> Outcome {
    let e = born_model(
        &PureState::from_selector("bell").map_err(e2s)?,
        &uniform_settings(2, 0.0, PI / 3.0),
    )
    .map_err(e2s)?;
    let value = cf(&e)?;
    ensure((value - 0.25).abs() <= 1e-6, || format!("cf = {value}"))?;
    let violation = BellInequality::chsh()
        .normalized_violation(&e)
        .map_err(e2s)?;
    let by_hand = (2.5 - 2.0) / 2.0;
    ensure((violation - by_hand).abs() <= 1e-6, || {
        format!("CHSH violation {violation}")
    })?;
    ensure((value - violation).abs() <= 1e-6, || {
        format!("cf {value} vs violation {violation}")
    })?;
    let table = builtins::chsh();
    let gap = e
        .tables()
        .iter()
        .flatten()
        .zip(table.tables().iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(gap <= 1e-9, || {
        format!("Born model differs from the tabulated one by {gap}")
    })?;
    Ok(format!(
        "cf = {value:.9}, normalised CHSH violation = {violation:.9}"
    ))
}

fn duality_gap(e: &EmpiricalModel, backend: BackendChoice) -> Result<f64, String> {
    let o = opts(backend);
    let primal = noncontextual_fraction(e, &o).map_err(e2s)?;
    let dual = solve_dual(e, &o).map_err(e2s)?;
    Ok((primal.ncf - dual.value).abs())
}

fn criterion3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for id in builtins::BUILTIN_IDS {
        let e = builtins::by_name(id).map_err(e2s)?;
        for backend in [BackendChoice::Rational, BackendChoice::Float] {
            worst = worst.max(duality_gap(&e, backend)?);
            count += 1;
        }
    }
    let mut rng = seeded(3);
    for parties in [2, 3] {
        for _ in 0..100 {
            let e = random::random_ns_model(&mut rng, parties).map_err(e2s)?;
            let gap = duality_gap(&e, BackendChoice::Float)?;
            ensure(gap <= 1e-7, || {
                format!("gap {gap} on a random ({parties},2,2) model")
            })?;
            worst = worst.max(gap);
            count += 1;
        }
    }
    ensure(worst <= 1e-7, || format!("worst gap {worst}"))?;
    Ok(format!(
        "{count} programs, worst |primal - dual| = {worst:.2e}"
    ))
}

/// Builtins that are contextual plus random models with visible contextuality.
fn contextual_corpus() -> Result<Vec<(String, EmpiricalModel)>, String> {
    let mut out: Vec<(String, EmpiricalModel)> = ["pr-box", "chsh", "ghz3-mermin"]
        .iter()
        .map(|id| Ok((id.to_string(), builtins::by_name(id).map_err(e2s)?)))
        .collect::<Result<_, String>>()?;
    out.push(("half PR".into(), half_pr()?));
    let mut rng = seeded(4);
    let mut i = 0;
    while out.len() < 60 {
        let parties = if i % 2 == 0 { 2 } else { 3 };
        let e = random::random_ns_model(&mut rng, parties).map_err(e2s)?;
        if cf(&e)? > 1e-4 {
            out.push((format!("random #{i} on ({parties},2,2)"), e));
        }
        i += 1;
    }
    Ok(out)
}

fn half_pr() -> Result<EmpiricalModel, String> {
    let scn = MeasurementScenario::bell(2, 2, 2).map_err(e2s)?;
    mix(
        &builtins::pr_box(),
        &deterministic_model(&scn, &scn.global_assignment(0)),
        0.5,
    )
    .map_err(e2s)
}

fn criterion4() -> Outcome {
    let lim = SizeLimit::default();
    let mut tight_checked = 0;
    let corpus = contextual_corpus()?;
    for (name, e) in &corpus {
        let o = opts(BackendChoice::Auto);
        let fr = noncontextual_fraction(e, &o).map_err(e2s)?;
        let w = witnessing_inequality(e, &o).map_err(e2s)?;
        let ineq = &w.inequality;
        ensure(ineq.bound() == 0.0, || {
            format!("{name}: R = {}", ineq.bound())
        })?;
        let norm = ineq.algebraic_bound();
        ensure((norm - 1.0).abs() <= 1e-7, || {
            format!("{name}: ||a|| = {norm}")
        })?;
        let local = ineq.local_maximum(lim).map_err(e2s)?;
        ensure(local <= 1e-9, || {
            format!("{name}: a deterministic model reaches {local}")
        })?;
        let viol = w.normalized_violation(e).map_err(e2s)?;
        ensure((viol - fr.cf).abs() <= 1e-7, || {
            format!("{name}: violation {viol} vs cf {}", fr.cf)
        })?;
        if fr.cf > 1e-9 && fr.cf < 1.0 - 1e-9 {
            let dec = decompose(e, &fr, lim).map_err(e2s)?;
            let t = check_tightness(ineq, &dec).map_err(e2s)?;
            ensure(t.holds, || {
                format!(
                    "{name}: parts evaluate to {} and {}",
                    t.noncontextual_value, t.strongly_contextual_value
                )
            })?;
            tight_checked += 1;
        }
    }
    Ok(format!(
        "{} contextual models, {tight_checked} with both parts checked",
        corpus.len()
    ))
}

fn criterion5() -> Outcome {
    let lim = SizeLimit::default();
    let mut worst: f64 = 0.0;
    let corpus = contextual_corpus()?;
    for (name, e) in &corpus {
        let fr = noncontextual_fraction(e, &opts(BackendChoice::Auto)).map_err(e2s)?;
        let dec = decompose(e, &fr, lim).map_err(e2s)?;
        let err = dec.recombination_error(e);
        ensure(err <= 1e-7, || format!("{name}: recombination error {err}"))?;
        worst = worst.max(err);
        if let Some(sc) = &dec.strongly_contextual {
            ensure(sc.is_strongly_contextual(1e-7, lim).map_err(e2s)?, || {
                format!("{name}: contextual part has a supported global assignment")
            })?;
        }
    }
    let half = half_pr()?;
    let value = cf(&half)?;
    ensure((value - 0.5).abs() <= 1e-6, || {
        format!("half PR cf = {value}")
    })?;
    Ok(format!(
        "{} models, worst recombination error {worst:.2e}, half PR cf = {value}",
        corpus.len()
    ))
}

fn criterion6() -> Outcome {
    let tol = 1e-6;
    let mut rng = seeded(6);
    let lim = SizeLimit::default();
    let mut worst = [0.0f64; 5];
    for case in 0..200 {
        let parties = 2 + case % 2;
        let e = random::random_ns_model(&mut rng, parties).map_err(e2s)?;
        let base = cf(&e)?;

        let source = rng.random_range(1..=parties);
        let f = random::random_translation(&mut rng, source, parties).map_err(e2s)?;
        let pulled = cf(&translate(&f, &e).map_err(e2s)?)?;
        worst[0] = worst[0].max(pulled - base);
        ensure(pulled <= base + tol, || {
            format!("case {case}: translation raised cf {base} -> {pulled}")
        })?;

        let (h, labels) = random::random_outcome_map(&mut rng, 2);
        let coarse = cf(&coarse_grain(&e, &h, &labels).map_err(e2s)?)?;
        worst[1] = worst[1].max(coarse - base);
        ensure(coarse <= base + tol, || {
            format!("case {case}: coarse-graining raised cf {base} -> {coarse}")
        })?;

        let other = random::random_ns_model(&mut rng, parties).map_err(e2s)?;
        let lambda: f64 = rng.random();
        let mixed = cf(&mix(&e, &other, lambda).map_err(e2s)?)?;
        let bound = lambda * base + (1.0 - lambda) * cf(&other)?;
        worst[2] = worst[2].max(mixed - bound);
        ensure(mixed <= bound + tol, || {
            format!("case {case}: mixing gives {mixed} > {bound}")
        })?;

        // A one- or two-party partner keeps the joint program small.
        let partner = random::random_ns_model(&mut rng, 1 + case % 2).map_err(e2s)?;
        let (n1, n2) = (ncf(&e)?, ncf(&partner)?);
        let chosen = ncf(&choice(&e, &partner).map_err(e2s)?)?;
        worst[3] = worst[3].max((chosen - n1.min(n2)).abs());
        ensure((chosen - n1.min(n2)).abs() <= tol, || {
            format!("case {case}: choice ncf {chosen} vs {}", n1.min(n2))
        })?;

        let a = random::random_ns_model(&mut rng, 2).map_err(e2s)?;
        let b = random::random_ns_model(&mut rng, 1 + case % 2).map_err(e2s)?;
        let prod = ncf(&product(&a, &b, lim).map_err(e2s)?)?;
        let expect = ncf(&a)? * ncf(&b)?;
        worst[4] = worst[4].max((prod - expect).abs());
        ensure((prod - expect).abs() <= tol, || {
            format!("case {case}: product ncf {prod} vs {expect}")
        })?;
    }
    Ok(format!(
        "200 cases; worst excess: translation {:.1e}, coarse-graining {:.1e}, mixing {:.1e}; worst gap: choice {:.1e}, product {:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

fn marginals<K1: Ord + Clone, K2: Ord + Clone, V: Scalar>(
    c: &SubDistribution<(K1, K2), V>,
) -> (SubDistribution<K1, V>, SubDistribution<K2, V>) {
    let mut left = SubDistribution::new();
    let mut right = SubDistribution::new();
    for ((k1, k2), v) in c.iter() {
        left.add(k1.clone(), v.clone());
        right.add(k2.clone(), v.clone());
    }
    (left, right)
}

fn criterion7() -> Outcome {
    let mut rng = seeded(7);
    let (mut equal_cases, mut worst) = (0, 0.0f64);
    for case in 0..500 {
        let (l1, l2) = (rng.random_range(1..8), rng.random_range(1..8));
        if case % 2 == 0 {
            let (w1, w2): (f64, f64) = (rng.random(), rng.random());
            let s = random::random_subdistribution(&mut rng, l1, w1);
            let t = random::random_subdistribution(&mut rng, l2, w2);
            let c = couple_subdistributions(&s, &t);
            let gap = (c.weight() - s.weight().min(t.weight())).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-12, || format!("case {case}: weight off by {gap}"))?;
            let (m1, m2) = marginals(&c);
            ensure(m1.iter().all(|(k, v)| *v <= s.get(k) + 1e-12), || {
                format!("case {case}: left marginal exceeds input")
            })?;
            ensure(m2.iter().all(|(k, v)| *v <= t.get(k) + 1e-12), || {
                format!("case {case}: right marginal exceeds input")
            })?;
        } else {
            let w = <BigRational as Scalar>::from_ratio(rng.random_range(1..=12), 12);
            let s = random::random_rational_subdistribution(&mut rng, l1, &w);
            let t = random::random_rational_subdistribution(&mut rng, l2, &w);
            let c = couple_subdistributions(&s, &t);
            ensure(c.weight() == w, || {
                format!("case {case}: weight {} vs {w}", c.weight())
            })?;
            let (m1, m2) = marginals(&c);
            ensure(m1 == s && m2 == t, || {
                format!("case {case}: marginals differ from inputs")
            })?;
            equal_cases += 1;
        }
    }
    Ok(format!("500 pairs, {equal_cases} equal-weight pairs with exact marginals, worst weight error {worst:.1e}"))
}

fn same_points(found: &[(f64, f64)], expected: &[(f64, f64)]) -> bool {
    let close =
        |a: &(f64, f64), b: &(f64, f64)| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9;
    found.len() == expected.len() && expected.iter().all(|p| found.iter().any(|q| close(p, q)))
}

fn with_swaps(pairs: &[(f64, f64)]) -> Vec<(f64, f64)> {
    pairs.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect()
}

fn criterion8() -> Outcome {
    let o = opts(BackendChoice::Float);
    let bell = PureState::from_selector("bell").map_err(e2s)?;
    let points = sweep(&bell, 8, &o).map_err(e2s)?;
    let max = sweep_maxima(&points, 1e-6);
    let target = 2f64.sqrt() - 1.0;
    ensure(max.iter().all(|p| (p.cf - target).abs() <= 1e-4), || {
        format!("Bell maxima {max:?}")
    })?;
    let found: Vec<(f64, f64)> = max.iter().map(|p| (p.phi1, p.phi2)).collect();
    let expected = with_swaps(&[(PI / 8.0, 5.0 * PI / 8.0), (7.0 * PI / 8.0, 3.0 * PI / 8.0)]);
    ensure(same_points(&found, &expected), || {
        format!("Bell maxima at {found:?}")
    })?;
    let p = (2f64.sqrt() + 2.0) / 8.0;
    for &(phi1, phi2) in &expected {
        let e = born_model(&bell, &uniform_settings(2, phi1, phi2)).map_err(e2s)?;
        for t in e.tables() {
            let pattern = [t[0], t[3]].iter().all(|x| (x - p).abs() <= 1e-9)
                && [t[1], t[2]].iter().all(|x| (x - (0.5 - p)).abs() <= 1e-9);
            let flipped = [t[1], t[2]].iter().all(|x| (x - p).abs() <= 1e-9)
                && [t[0], t[3]].iter().all(|x| (x - (0.5 - p)).abs() <= 1e-9);
            ensure(pattern || flipped, || {
                format!("table {t:?} at ({phi1}, {phi2})")
            })?;
        }
    }

    let ghz3 = ghz_state(3).map_err(e2s)?;
    let points = sweep(&ghz3, 6, &o).map_err(e2s)?;
    let max = sweep_maxima(&points, 1e-6);
    ensure(max.iter().all(|p| (p.cf - 1.0).abs() <= 1e-6), || {
        format!("GHZ(3) maxima {max:?}")
    })?;
    let found: Vec<(f64, f64)> = max.iter().map(|p| (p.phi1, p.phi2)).collect();
    let expected = with_swaps(&[
        (PI / 2.0, 0.0),
        (2.0 * PI / 3.0, PI / 6.0),
        (5.0 * PI / 6.0, PI / 3.0),
    ]);
    ensure(same_points(&found, &expected), || {
        format!("GHZ(3) maxima at {found:?}")
    })?;

    let ghz4 = ghz_state(4).map_err(e2s)?;
    let points = sweep(&ghz4, 8, &o).map_err(e2s)?;
    let max = sweep_maxima(&points, 1e-6);
    ensure(max.iter().all(|p| (p.cf - 1.0).abs() <= 1e-6), || {
        format!("GHZ(4) maxima {max:?}")
    })?;
    let found: Vec<(f64, f64)> = max.iter().map(|p| (p.phi1, p.phi2)).collect();
    let expected = with_swaps(&[
        (PI / 2.0, 0.0),
        (5.0 * PI / 8.0, PI / 8.0),
        (3.0 * PI / 4.0, PI / 4.0),
        (7.0 * PI / 8.0, 3.0 * PI / 8.0),
    ]);
    ensure(same_points(&found, &expected), || {
        format!("GHZ(4) maxima at {found:?}")
    })?;

    let mut checked = 0;
    for n in 3..=5 {
        for k in 0..n {
            let r = ghz_angle_check(n, k, &o).map_err(e2s)?;
            ensure(r.strongly_contextual, || {
                format!("GHZ({n}) at k = {k}: cf = {}", r.cf)
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "Bell, GHZ(3), GHZ(4) maxima as expected; {checked} GHZ angle pairs strongly contextual"
    ))
}

fn criterion9() -> Outcome {
    let or = BooleanFunction::from_hex(2, 1, "0111").map_err(e2s)?;
    let nu = nu_tilde(&or, false).map_err(e2s)?;
    ensure(nu == 0.25, || format!("nu(OR) = {nu}"))?;
    let gadget = L2Mbqc::or_gadget(builtins::ghz3_mermin()).map_err(e2s)?;
    let ps = average_success(&gadget, &or).map_err(e2s)?;
    ensure(ps == 1.0, || format!("OR gadget succeeds with {ps}"))?;

    let mut rng = seeded(9);
    let o = opts(BackendChoice::Float);
    let mut worst = f64::INFINITY;
    for case in 0..200 {
        let (k, f) = random::random_mbqc(&mut rng).map_err(e2s)?;
        let r = mbqc_bound(&k, &f, &o, false).map_err(e2s)?;
        worst = worst.min(r.slack);
        ensure(r.slack >= -1e-6, || {
            format!("case {case}: slack {} ({r:?})", r.slack)
        })?;
    }

    let mut affine = 0;
    for case in 0..200 {
        let (k, _) = random::random_mbqc(&mut rng).map_err(e2s)?;
        let scn = k.resource().scenario().clone();
        let det = random::random_deterministic(&mut rng, &scn);
        let k = k.with_resource(det).map_err(e2s)?;
        let h = k
            .deterministic_function()
            .map_err(e2s)?
            .ok_or_else(|| format!("case {case}: deterministic resource gave random output"))?;
        ensure(h.is_affine(), || {
            format!("case {case}: induced map {} is not affine", h.to_hex())
        })?;
        affine += 1;
    }
    Ok(format!("nu(OR) = 1/4, gadget success 1, worst slack over 200 cases {worst:.2e}, {affine} deterministic resources give affine maps"))
}

fn criterion10() -> Outcome {
    let lim = SizeLimit::default();
    let cs = ConstraintSystem::chsh_game();
    let k = cs.k_consistency(lim).map_err(e2s)?;
    ensure(k == 3, || format!("k = {k}"))?;
    let o = opts(BackendChoice::Auto);
    for g in 0..16 {
        let s = Strategy::deterministic(&cs, &decode_mixed(g, 2, 4)).map_err(e2s)?;
        let r = game_bound(&cs, &s, &o).map_err(e2s)?;
        ensure(r.failure >= 0.25 - 1e-12 && r.holds, || {
            format!("assignment {g}: {r:?}")
        })?;
    }
    let variant = ConstraintSystem::from_xor(
        &["a1", "a2", "b1", "b2"],
        &["a1+b1=0", "a1+b2=1", "a2+b1=1", "a2+b2=1"],
    )
    .map_err(e2s)?;
    let e = born_model(
        &PureState::from_selector("bell").map_err(e2s)?,
        &uniform_settings(2, PI / 8.0, 5.0 * PI / 8.0),
    )
    .map_err(e2s)?;
    let s = Strategy::from_model(&variant, &e).map_err(e2s)?;
    let r = game_bound(&variant, &s, &opts(BackendChoice::Float)).map_err(e2s)?;
    let pf = (2.0 - 2f64.sqrt()) / 4.0;
    ensure(r.k == 3, || format!("variant k = {}", r.k))?;
    ensure((r.failure - pf).abs() <= 1e-6, || {
        format!("p_F = {}", r.failure)
    })?;
    ensure((r.ncf - (2.0 - 2f64.sqrt())).abs() <= 1e-6, || {
        format!("NCF = {}", r.ncf)
    })?;
    ensure(r.slack >= -1e-6 && r.slack <= 1e-6, || {
        format!("slack = {}", r.slack)
    })?;
    Ok(format!(
        "k = 3, deterministic p_F >= 1/4, quantum p_F = {:.6}, NCF = {:.6}, slack = {:.1e}",
        r.failure, r.ncf, r.slack
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 10] = [
        (
            "PR box is maximally contextual",
            criterion1,
            Some(Duration::from_secs(1)),
        ),
        ("CHSH model cf", criterion2, Some(Duration::from_secs(1))),
        ("strong duality", criterion3, Some(Duration::from_secs(30))),
        ("witnessing inequality", criterion4, None),
        ("decomposition", criterion5, None),
        ("monotonicity", criterion6, Some(Duration::from_secs(120))),
        ("coupling", criterion7, None),
        ("quantum sweeps", criterion8, Some(Duration::from_secs(300))),
        ("MBQC bound", criterion9, None),
        ("game bound", criterion10, None),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(_), Some(b)) if elapsed > *b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!(
                "PASS criterion {:>2} ({name}, {elapsed:.2?}): {detail}",
                i + 1
            ),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}, {elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
