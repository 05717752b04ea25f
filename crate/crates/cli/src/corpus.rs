//! Seeded property corpora. Case `i` draws from the generator seeded with
//! `seed + i`, so results do not depend on scheduling.

use std::process::ExitCode;

use cfrac_core::fraction::{
    contextual_fraction, noncontextual_fraction, solve_dual, FractionOptions,
};
use cfrac_core::games::{check_failure_bound as game_bound, Strategy};
use cfrac_core::mbqc::check_failure_bound as mbqc_bound;
use cfrac_core::morphisms::{coarse_grain, translate};
use cfrac_core::random::{
    random_game, random_mbqc, random_ns_model, random_outcome_map, random_translation, seeded,
};
use cfrac_core::Result;
use clap::ValueEnum;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::output::{CliError, Printer};
use crate::GlobalArgs;

/// Violations at or below this count as passes.
const TOLERANCE: f64 = 1e-6;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Kind {
    /// Primal and dual optima of the fraction programs agree.
    Duality,
    /// Translations and coarse-grainings never raise the contextual fraction.
    Monotonicity,
    /// MBQC failure never falls below NCF times the distance to affine maps.
    Mbqc,
    /// Game failure never falls below NCF times (n - k) / n.
    Game,
}

/// How far case `seed` is from satisfying the property; `<= 0` is a pass.
fn violation(kind: Kind, seed: u64, opts: &FractionOptions) -> Result<f64> {
    let mut rng = seeded(seed);
    match kind {
        Kind::Duality => {
            let parties = rng.random_range(1..=3);
            let e = random_ns_model(&mut rng, parties)?;
            let primal = noncontextual_fraction(&e, opts)?.ncf;
            Ok((primal - solve_dual(&e, opts)?.value).abs())
        }
        Kind::Monotonicity => {
            let e = random_ns_model(&mut rng, 3)?;
            let base = contextual_fraction(&e, opts)?;
            let source = rng.random_range(1..=3);
            let f = random_translation(&mut rng, source, 3)?;
            let (h, labels) = random_outcome_map(&mut rng, 2);
            let moved = contextual_fraction(&translate(&f, &e)?, opts)?;
            let coarse = contextual_fraction(&coarse_grain(&e, &h, &labels)?, opts)?;
            Ok(moved.max(coarse) - base)
        }
        Kind::Mbqc => {
            let (k, f) = random_mbqc(&mut rng)?;
            Ok(-mbqc_bound(&k, &f, opts, false)?.slack)
        }
        Kind::Game => {
            let parties = rng.random_range(1..=3);
            let cs = random_game(&mut rng, parties)?;
            let e = random_ns_model(&mut rng, parties)?;
            let s = Strategy::from_model(&cs, &e)?;
            Ok(-game_bound(&cs, &s, opts)?.slack)
        }
    }
}

pub fn cmd_corpus(
    g: &GlobalArgs,
    out: &Printer,
    kind: Kind,
    cases: usize,
    seed: u64,
) -> std::result::Result<ExitCode, CliError> {
    let opts = g.fraction_options();
    let results = (0..cases as u64)
        .into_par_iter()
        .map(|i| violation(kind, seed.wrapping_add(i), &opts))
        .collect::<Result<Vec<f64>>>()?;
    let failures: Vec<usize> = (0..cases).filter(|&i| results[i] > TOLERANCE).collect();
    let worst = results.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.print(&json!({
        "kind": format!("{kind:?}").to_lowercase(),
        "cases": cases,
        "seed": seed,
        "passed": cases - failures.len(),
        "failures": failures,
        "worst_violation": if cases == 0 { json!(null) } else { out.num(worst) },
    }));
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
