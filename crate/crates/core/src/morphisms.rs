//! Operations on empirical models and the subdistribution coupling.
//!
//! Every operation maps exact models to exact models; float models are
//! revalidated at the quantum tolerance.

use std::collections::BTreeSet;

use num_rational::BigRational;

use crate::empirical::{EmpiricalModel, SubDistribution, EPS_QUANTUM};
use crate::error::{Error, Result, SizeLimit};
use crate::lp::Scalar;
use crate::scenario::{decode_mixed, encode_mixed, MeasurementScenario};

/// Validates transformed tables in the representation the input carried.
fn rebuild(
    scenario: MeasurementScenario,
    e_exact: Option<Vec<Vec<BigRational>>>,
    e_float: Vec<Vec<f64>>,
) -> Result<EmpiricalModel> {
    match e_exact {
        Some(t) => EmpiricalModel::from_rational(scenario, t),
        None => EmpiricalModel::with_tolerance(scenario, e_float, EPS_QUANTUM),
    }
}

/// A context-preserving map `f: X -> X'` from a source to a target scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTranslation {
    source: MeasurementScenario,
    target: MeasurementScenario,
    map: Vec<usize>,
    /// First target context containing the image of each source context.
    cover: Vec<usize>,
}

impl MeasurementTranslation {
    pub fn new(
        source: MeasurementScenario,
        target: MeasurementScenario,
        map: Vec<usize>,
    ) -> Result<Self> {
        if source.outcomes() != target.outcomes() {
            return Err(Error::OutcomeMismatch);
        }
        if map.len() != source.num_measurements() {
            return Err(Error::DomainMismatch(format!(
                "map has {} entries for {} measurements",
                map.len(),
                source.num_measurements()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&x| x >= target.num_measurements()) {
            return Err(Error::DomainMismatch(format!(
                "no target measurement {bad}"
            )));
        }
        let mut cover = Vec::with_capacity(source.num_contexts());
        for (ci, ctx) in source.contexts().iter().enumerate() {
            let image: BTreeSet<usize> = ctx.iter().map(|&x| map[x]).collect();
            let found = target
                .contexts()
                .iter()
                .position(|c| image.iter().all(|x| c.contains(x)))
                .ok_or(Error::NotContextPreserving(ci))?;
            cover.push(found);
        }
        Ok(Self {
            source,
            target,
            map,
            cover,
        })
    }

    pub fn source(&self) -> &MeasurementScenario {
        &self.source
    }

    pub fn target(&self) -> &MeasurementScenario {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }
}

fn pull_back<T: Scalar>(f: &MeasurementTranslation, tables: &[Vec<T>]) -> Vec<Vec<T>> {
    let (src, tgt) = (&f.source, &f.target);
    let k = src.num_outcomes();
    (0..src.num_contexts())
        .map(|c| {
            let cov = f.cover[c];
            let tctx = tgt.context(cov);
            // Position of f(x) inside the covering target context.
            let pos: Vec<usize> = src
                .context(c)
                .iter()
                .map(|&x| tctx.iter().position(|&y| y == f.map[x]).expect("covered"))
                .collect();
            let mut out = vec![T::zero(); src.context_size(c)];
            for (ti, p) in tables[cov].iter().enumerate() {
                let t = decode_mixed(ti, k, tctx.len());
                let s: Vec<usize> = pos.iter().map(|&i| t[i]).collect();
                let si = encode_mixed(&s, k);
                out[si] = out[si].clone() + p.clone();
            }
            out
        })
        .collect()
}

/// Pulls `e` (on the target scenario) back along `f` to the source scenario.
pub fn translate(f: &MeasurementTranslation, e: &EmpiricalModel) -> Result<EmpiricalModel> {
    if e.scenario() != &f.target {
        return Err(Error::ScenarioMismatch);
    }
    let exact = e.exact_tables().map(|t| pull_back(f, t));
    rebuild(f.source.clone(), exact, pull_back(f, e.tables()))
}

fn push_outcomes<T: Scalar>(
    scn: &MeasurementScenario,
    h: &[usize],
    new_k: usize,
    tables: &[Vec<T>],
) -> Vec<Vec<T>> {
    let k = scn.num_outcomes();
    (0..scn.num_contexts())
        .map(|c| {
            let len = scn.context(c).len();
            let mut out = vec![T::zero(); new_k.pow(len as u32)];
            for (si, p) in tables[c].iter().enumerate() {
                let s: Vec<usize> = decode_mixed(si, k, len).iter().map(|&o| h[o]).collect();
                let ti = encode_mixed(&s, new_k);
                out[ti] = out[ti].clone() + p.clone();
            }
            out
        })
        .collect()
}

/// Coarse-grains outcomes along `h` (source outcome index to index into
/// `outcomes`). An injective `h` into a larger set lifts the model.
pub fn coarse_grain<S: AsRef<str>>(
    e: &EmpiricalModel,
    h: &[usize],
    outcomes: &[S],
) -> Result<EmpiricalModel> {
    let scn = e.scenario();
    if h.len() != scn.num_outcomes() {
        return Err(Error::DomainMismatch(format!(
            "outcome map has {} entries for {} outcomes",
            h.len(),
            scn.num_outcomes()
        )));
    }
    if let Some(&bad) = h.iter().find(|&&o| o >= outcomes.len()) {
        return Err(Error::DomainMismatch(format!("no target outcome {bad}")));
    }
    let labels: Vec<String> = outcomes.iter().map(|o| o.as_ref().to_owned()).collect();
    let new_scn = MeasurementScenario::from_indices(
        scn.measurements().to_vec(),
        labels,
        scn.contexts().to_vec(),
    )?;
    let k = outcomes.len();
    let exact = e.exact_tables().map(|t| push_outcomes(scn, h, k, t));
    rebuild(new_scn, exact, push_outcomes(scn, h, k, e.tables()))
}

/// Labels for a disjoint union; prefixed only when the two sets collide.
fn disjoint_labels(x1: &[String], x2: &[String]) -> Vec<String> {
    let collide = x1.iter().any(|a| x2.contains(a));
    if collide {
        x1.iter()
            .map(|a| format!("1.{a}"))
            .chain(x2.iter().map(|b| format!("2.{b}")))
            .collect()
    } else {
        x1.iter().chain(x2).cloned().collect()
    }
}

/// `e1 & e2`: both context families side by side on disjoint measurements.
pub fn choice(e1: &EmpiricalModel, e2: &EmpiricalModel) -> Result<EmpiricalModel> {
    let (s1, s2) = (e1.scenario(), e2.scenario());
    if s1.outcomes() != s2.outcomes() {
        return Err(Error::OutcomeMismatch);
    }
    let shift = s1.num_measurements();
    let contexts: Vec<Vec<usize>> = s1
        .contexts()
        .iter()
        .cloned()
        .chain(
            s2.contexts()
                .iter()
                .map(|c| c.iter().map(|x| x + shift).collect()),
        )
        .collect();
    let scn = MeasurementScenario::from_indices(
        disjoint_labels(s1.measurements(), s2.measurements()),
        s1.outcomes().to_vec(),
        contexts,
    )?;
    let exact = match (e1.exact_tables(), e2.exact_tables()) {
        (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
        _ => None,
    };
    let float = e1.tables().iter().chain(e2.tables()).cloned().collect();
    rebuild(scn, exact, float)
}

fn outer<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ta in a {
        for tb in b {
            out.push(
                ta.iter()
                    .flat_map(|p| tb.iter().map(move |q| p.clone() * q.clone()))
                    .collect(),
            );
        }
    }
    out
}

/// `e1 (x) e2`: independent joint use, with contexts `C u C'`.
pub fn product(
    e1: &EmpiricalModel,
    e2: &EmpiricalModel,
    limit: SizeLimit,
) -> Result<EmpiricalModel> {
    let (s1, s2) = (e1.scenario(), e2.scenario());
    if s1.outcomes() != s2.outcomes() {
        return Err(Error::OutcomeMismatch);
    }
    limit.check_assignments(
        "global assignments of the product",
        s1.num_global_assignments()
            .saturating_mul(s2.num_global_assignments()),
    )?;
    let shift = s1.num_measurements();
    let mut contexts = Vec::with_capacity(s1.num_contexts() * s2.num_contexts());
    for c1 in s1.contexts() {
        for c2 in s2.contexts() {
            contexts.push(
                c1.iter()
                    .copied()
                    .chain(c2.iter().map(|x| x + shift))
                    .collect(),
            );
        }
    }
    let scn = MeasurementScenario::from_indices(
        disjoint_labels(s1.measurements(), s2.measurements()),
        s1.outcomes().to_vec(),
        contexts,
    )?;
    let exact = match (e1.exact_tables(), e2.exact_tables()) {
        (Some(a), Some(b)) => Some(outer(a, b)),
        _ => None,
    };
    rebuild(scn, exact, outer(e1.tables(), e2.tables()))
}

/// Monotone coupling of two subdistributions.
///
/// The heavier input is first scaled down to the lighter weight. Keys are
/// laid out as consecutive intervals of `[0, w)` in key order and each pair
/// receives the length of the overlap of its two intervals. With equal
/// weights the marginals reproduce the inputs; otherwise they are dominated
/// by them. The result has weight `min(|bS|, |bT|)`.
pub fn couple_subdistributions<K1, K2, V>(
    bs: &SubDistribution<K1, V>,
    bt: &SubDistribution<K2, V>,
) -> SubDistribution<(K1, K2), V>
where
    K1: Ord + Clone,
    K2: Ord + Clone,
    V: Scalar,
{
    let (ws, wt) = (bs.weight(), bt.weight());
    if !ws.is_pos(0.0) || !wt.is_pos(0.0) {
        return SubDistribution::new();
    }
    let (bs, bt) = if ws > wt {
        (bs.scaled(&(wt.clone() / ws)), bt.clone())
    } else if wt > ws {
        (bs.clone(), bt.scaled(&(ws.clone() / wt)))
    } else {
        (bs.clone(), bt.clone())
    };
    let s: Vec<(&K1, &V)> = bs.iter().collect();
    let t: Vec<(&K2, &V)> = bt.iter().collect();
    let mut out = SubDistribution::new();
    let (mut i, mut j) = (0, 0);
    let mut cur = V::zero();
    let mut rs = s[0].1.clone();
    let mut rt = t[0].1.clone();
    loop {
        let hi = if rs < rt { rs.clone() } else { rt.clone() };
        let piece = hi.clone() - cur.clone();
        if piece.is_pos(0.0) {
            out.add((s[i].0.clone(), t[j].0.clone()), piece);
        }
        cur = hi;
        let (adv_s, adv_t) = (rs <= rt, rt <= rs);
        if adv_s {
            i += 1;
            if i == s.len() {
                break;
            }
            rs = rs + s[i].1.clone();
        }
        if adv_t {
            j += 1;
            if j == t.len() {
                break;
            }
            rt = rt + t[j].1.clone();
        }
    }
    out
}

/// The trivial model: one measurement `*` with the single outcome `*`.
pub fn generator() -> EmpiricalModel {
    let scn = MeasurementScenario::new(&["*"], &["*"], &[vec!["*"]]).expect("valid");
    EmpiricalModel::from_rational(scn, vec![vec![<BigRational as Scalar>::one()]]).expect("valid")
}

/// A deterministic single-context model assembled only from the generator,
/// coarse-graining, choice and product, then pulled back along `f` onto
/// `target` (each target context must map into the single joint context,
/// which every map into it does).
///
/// `values[x]` is the outcome index assigned to target measurement `x`.
pub fn deterministic_from_generator(
    target: &MeasurementScenario,
    values: &[usize],
    limit: SizeLimit,
) -> Result<EmpiricalModel> {
    let outcomes = target.outcomes();
    if values.len() != target.num_measurements() {
        return Err(Error::DomainMismatch(
            "one value per measurement is required".into(),
        ));
    }
    let g = generator();
    let mut joint: Option<EmpiricalModel> = None;
    for &v in values {
        if v >= outcomes.len() {
            return Err(Error::DomainMismatch(format!("no outcome {v}")));
        }
        let point = coarse_grain(&g, &[v], outcomes)?;
        joint = Some(match joint {
            None => point,
            Some(acc) => product(&acc, &point, limit)?,
        });
    }
    let joint = joint.ok_or_else(|| Error::InvalidScenario("no measurements".into()))?;
    let f = MeasurementTranslation::new(
        target.clone(),
        joint.scenario().clone(),
        (0..values.len()).collect(),
    )?;
    translate(&f, &joint)
}
