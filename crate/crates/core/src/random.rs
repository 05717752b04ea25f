//! Seeded generators for property corpora.
//!
//! Everything here is driven by a caller-supplied RNG; [`seeded`] gives the
//! reproducible ChaCha stream used by the test suites and the CLI.

use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::builtins;
use crate::empirical::{deterministic_model, mix, EmpiricalModel, SubDistribution};
use crate::error::Result;
use crate::games::ConstraintSystem;
use crate::lp::Scalar;
use crate::mbqc::{BitMatrix, BooleanFunction, L2Mbqc};
use crate::morphisms::MeasurementTranslation;
use crate::quantum::{born_model, PureState};
use crate::scenario::{decode_mixed, MeasurementScenario};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalised complex Gaussian amplitudes, i.e. a Haar-random pure state.
pub fn random_state<R: Rng>(rng: &mut R, qubits: usize) -> PureState {
    let amps = (0..1usize << qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps).expect("nonzero with probability one")
}

/// Random state measured at random equatorial angles on `(n, 2, 2)`.
pub fn random_born_model<R: Rng>(rng: &mut R, parties: usize) -> Result<EmpiricalModel> {
    let state = random_state(rng, parties);
    let settings: Vec<[f64; 2]> = (0..parties)
        .map(|_| [rng.random::<f64>() * TAU, rng.random::<f64>() * TAU])
        .collect();
    born_model(&state, &settings)
}

pub fn random_deterministic<R: Rng>(rng: &mut R, scn: &MeasurementScenario) -> EmpiricalModel {
    let g = rng.random_range(0..scn.num_global_assignments() as usize);
    deterministic_model(scn, &scn.global_assignment(g)).into_float()
}

/// PR box on the first two parties, a fixed answer for the third.
pub fn pr_times_local<R: Rng>(rng: &mut R) -> EmpiricalModel {
    let scn = MeasurementScenario::bell(3, 2, 2).expect("valid");
    let answers = [rng.random_range(0..2usize), rng.random_range(0..2usize)];
    let tables = (0..8)
        .map(|c| {
            let (x, y, z) = (c >> 2, (c >> 1) & 1, c & 1);
            (0..8)
                .map(|s| {
                    let (a, b, o) = (s >> 2, (s >> 1) & 1, s & 1);
                    if (a ^ b) == (x & y) && o == answers[z] {
                        0.5
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    EmpiricalModel::new(scn, tables).expect("valid")
}

fn random_component<R: Rng>(
    rng: &mut R,
    scn: &MeasurementScenario,
    parties: usize,
) -> Result<EmpiricalModel> {
    Ok(match rng.random_range(0..4) {
        0 => random_deterministic(rng, scn),
        1 => random_born_model(rng, parties)?,
        2 => match parties {
            2 => builtins::pr_box().into_float(),
            3 if rng.random_bool(0.5) => builtins::ghz3_mermin().into_float(),
            3 => pr_times_local(rng),
            _ => random_born_model(rng, parties)?,
        },
        _ => {
            let size = scn.context_size(0);
            EmpiricalModel::new(
                scn.clone(),
                vec![vec![1.0 / size as f64; size]; scn.num_contexts()],
            )?
        }
    })
}

/// Convex combination of `weights.len()` models with the given weights.
pub fn mixture(models: &[EmpiricalModel], weights: &[f64]) -> Result<EmpiricalModel> {
    let mut acc = models[0].clone();
    let mut total = weights[0];
    for (e, &w) in models.iter().zip(weights).skip(1) {
        let lambda = if total + w > 0.0 {
            total / (total + w)
        } else {
            1.0
        };
        acc = mix(&acc, e, lambda)?;
        total += w;
    }
    Ok(acc)
}

/// Dirichlet(1, ..., 1) weights.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// A no-signalling float model on `(parties, 2, 2)`: a random mixture of
/// one to three deterministic, quantum, box and uniform components.
pub fn random_ns_model<R: Rng>(rng: &mut R, parties: usize) -> Result<EmpiricalModel> {
    let scn = MeasurementScenario::bell(parties, 2, 2)?;
    let count = rng.random_range(1..=3);
    let models = (0..count)
        .map(|_| random_component(rng, &scn, parties))
        .collect::<Result<Vec<_>>>()?;
    mixture(&models, &random_weights(rng, count))
}

/// Context-preserving translation from `(source_parties, 2, 2)` into
/// `(target_parties, 2, 2)`: an injective party map with an arbitrary
/// setting map per party.
pub fn random_translation<R: Rng>(
    rng: &mut R,
    source_parties: usize,
    target_parties: usize,
) -> Result<MeasurementTranslation> {
    assert!(source_parties <= target_parties);
    let source = MeasurementScenario::bell(source_parties, 2, 2)?;
    let target = MeasurementScenario::bell(target_parties, 2, 2)?;
    let mut parties: Vec<usize> = (0..target_parties).collect();
    parties.shuffle(rng);
    let mut map = Vec::with_capacity(2 * source_parties);
    for &p in &parties[..source_parties] {
        let settings = [rng.random_range(0..2), rng.random_range(0..2)];
        map.extend(settings.iter().map(|s| 2 * p + s));
    }
    MeasurementTranslation::new(source, target, map)
}

/// A surjection from `k` outcomes onto `1..=k` fresh labels.
pub fn random_outcome_map<R: Rng>(rng: &mut R, k: usize) -> (Vec<usize>, Vec<String>) {
    let new_k = rng.random_range(1..=k);
    let mut h: Vec<usize> = (0..k)
        .map(|o| {
            if o < new_k {
                o
            } else {
                rng.random_range(0..new_k)
            }
        })
        .collect();
    h.shuffle(rng);
    (h, (0..new_k).map(|o| o.to_string()).collect())
}

/// Float subdistribution on keys `0..len` with total weight `weight`.
pub fn random_subdistribution<R: Rng>(
    rng: &mut R,
    len: usize,
    weight: f64,
) -> SubDistribution<usize> {
    let w = random_weights(rng, len);
    SubDistribution::from_pairs(w.into_iter().enumerate().map(|(k, p)| (k, p * weight)))
}

/// Rational subdistribution with small denominators, scaled to `weight`.
pub fn random_rational_subdistribution<R: Rng>(
    rng: &mut R,
    len: usize,
    weight: &BigRational,
) -> SubDistribution<usize, BigRational> {
    let mut raw: Vec<i64> = (0..len).map(|_| rng.random_range(0..12)).collect();
    if raw.iter().all(|&r| r == 0) {
        raw[0] = 1;
    }
    let total: i64 = raw.iter().sum();
    SubDistribution::from_pairs(raw.into_iter().enumerate().filter(|&(_, r)| r > 0).map(
        |(k, r)| {
            (
                k,
                <BigRational as Scalar>::from_ratio(r, total) * weight.clone(),
            )
        },
    ))
}

fn random_bits<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> BitMatrix {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(0..2u8)).collect())
        .collect()
}

/// Random control on a random resource, paired with a random target function.
pub fn random_mbqc<R: Rng>(rng: &mut R) -> Result<(L2Mbqc, BooleanFunction)> {
    let m = rng.random_range(1..=3);
    let l = rng.random_range(1..=2);
    let n = rng.random_range(1..=3);
    let q = random_bits(rng, n, m);
    let mut t = random_bits(rng, n, n);
    for (j, row) in t.iter_mut().enumerate() {
        row[j..].fill(0);
    }
    let z = random_bits(rng, l, n);
    let resource = random_ns_model(rng, n)?;
    let k = L2Mbqc::new(m, l, q, t, z, resource)?;
    let table = (0..1usize << m)
        .map(|_| rng.random_range(0..1u32 << l))
        .collect();
    let f = BooleanFunction::new(m, l, table)?;
    Ok((k, f))
}

/// A game on the `(parties, 2, 2)` Bell scenario: one random formula per
/// context, sometimes a second one on the same variables. Formulae are never
/// empty or tautological.
pub fn random_game<R: Rng>(rng: &mut R, parties: usize) -> Result<ConstraintSystem> {
    let scn = MeasurementScenario::bell(parties, 2, 2)?;
    let names = scn.measurements().to_vec();
    let size = 1usize << parties;
    let mut formulae = Vec::new();
    let mut extra = Vec::new();
    for ctx in scn.contexts() {
        let vars: Vec<String> = ctx.iter().map(|&m| names[m].clone()).collect();
        formulae.push((vars.clone(), random_satisfying(rng, size, parties)));
        if rng.random_bool(0.25) {
            extra.push((vars, random_satisfying(rng, size, parties)));
        }
    }
    formulae.extend(extra);
    ConstraintSystem::new(names, scn.outcomes().to_vec(), formulae)
}

/// A nonempty proper subset of the `size` assignments to `width` bits.
fn random_satisfying<R: Rng>(rng: &mut R, size: usize, width: usize) -> Vec<Vec<usize>> {
    let count = rng.random_range(1..size);
    let mut all: Vec<usize> = (0..size).collect();
    all.shuffle(rng);
    all[..count]
        .iter()
        .map(|&s| decode_mixed(s, 2, width))
        .collect()
}
