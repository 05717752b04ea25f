//! Empirical models: one probability table per context.
//!
//! Tables are indexed by the canonical local-assignment order of the context
//! (see [`crate::scenario`]). A model may additionally carry exact rational
//! tables, which downstream LP code uses to select the exact backend.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::{Error, Result, SizeLimit};
use crate::lp::Scalar;
use crate::scenario::{decode_mixed, encode_mixed, GlobalAssignment, MeasurementScenario};

/// Validation tolerance for hand-entered tables.
pub const EPS_EXACT_INPUT: f64 = 1e-9;
/// Validation tolerance for tables produced by floating-point Born rule.
pub const EPS_QUANTUM: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalModel {
    scenario: MeasurementScenario,
    tables: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<BigRational>>>,
}

impl EmpiricalModel {
    /// Validated constructor at the hand-entry tolerance.
    pub fn new(scenario: MeasurementScenario, tables: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(scenario, tables, EPS_EXACT_INPUT)
    }

    /// Validated constructor: shapes, normalization, nonnegativity and
    /// compatible marginals, all within `eps`. Entries in `[-eps, 0)` are
    /// clamped to zero.
    pub fn with_tolerance(
        scenario: MeasurementScenario,
        mut tables: Vec<Vec<f64>>,
        eps: f64,
    ) -> Result<Self> {
        check_shapes(&scenario, &tables)?;
        for (c, table) in tables.iter_mut().enumerate() {
            for (i, p) in table.iter_mut().enumerate() {
                if !p.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "context {c}: entry {i} is not finite"
                    )));
                }
                if *p < -eps {
                    return Err(Error::InvalidModel(format!(
                        "context {c}: entry {i} is negative ({p})"
                    )));
                }
                if *p < 0.0 {
                    log::warn!("context {c}: clamping entry {i} = {p:e} to zero");
                    *p = 0.0;
                }
            }
            let sum: f64 = table.iter().sum();
            if (sum - 1.0).abs() > eps {
                return Err(Error::InvalidModel(format!(
                    "context {c}: table sums to {sum}"
                )));
            }
        }
        let model = Self {
            scenario,
            tables,
            exact: None,
        };
        let report = model.check_no_signalling(eps);
        if !report.passes {
            return Err(Error::InvalidModel(report.describe()));
        }
        Ok(model)
    }

    /// Exact constructor; every check is exact.
    pub fn from_rational(
        scenario: MeasurementScenario,
        exact: Vec<Vec<BigRational>>,
    ) -> Result<Self> {
        check_shapes(&scenario, &exact)?;
        let one = <BigRational as Scalar>::one();
        for (c, table) in exact.iter().enumerate() {
            if let Some(i) = table.iter().position(|p| p.is_neg(0.0)) {
                return Err(Error::InvalidModel(format!(
                    "context {c}: entry {i} is negative"
                )));
            }
            let sum = table
                .iter()
                .fold(<BigRational as Scalar>::zero(), |a, p| a + p.clone());
            if sum != one {
                return Err(Error::InvalidModel(format!(
                    "context {c}: table sums to {sum}"
                )));
            }
        }
        let model = Self {
            tables: exact
                .iter()
                .map(|t| t.iter().map(Scalar::to_f64).collect())
                .collect(),
            scenario,
            exact: Some(exact),
        };
        let report = model.check_no_signalling(0.0);
        if !report.passes {
            return Err(Error::InvalidModel(report.describe()));
        }
        Ok(model)
    }

    /// No validation at all; for deliberately broken test inputs.
    pub fn new_unchecked(scenario: MeasurementScenario, tables: Vec<Vec<f64>>) -> Self {
        Self {
            scenario,
            tables,
            exact: None,
        }
    }

    /// Rebuilds a model from its flattened vector.
    pub fn from_vector(scenario: MeasurementScenario, v: &[f64], eps: f64) -> Result<Self> {
        if v.len() != scenario.num_local_assignments() {
            return Err(Error::InvalidModel(format!(
                "vector has {} entries, scenario has {} local assignments",
                v.len(),
                scenario.num_local_assignments()
            )));
        }
        let tables = split_blocks(&scenario, v);
        Self::with_tolerance(scenario, tables, eps)
    }

    pub fn from_rational_vector(scenario: MeasurementScenario, v: &[BigRational]) -> Result<Self> {
        if v.len() != scenario.num_local_assignments() {
            return Err(Error::InvalidModel(
                "vector length does not match scenario".into(),
            ));
        }
        let tables = split_blocks(&scenario, v);
        Self::from_rational(scenario, tables)
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub fn table(&self, context: usize) -> &[f64] {
        &self.tables[context]
    }

    pub fn exact_tables(&self) -> Option<&[Vec<BigRational>]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Drops the exact tables, keeping the float view.
    pub fn into_float(mut self) -> Self {
        self.exact = None;
        self
    }

    /// `e_C(s)` for outcome indices `s` listed in context order.
    pub fn prob(&self, context: usize, outcomes: &[usize]) -> f64 {
        self.tables[context][self.scenario.local_index(outcomes)]
    }

    /// The flattened model vector in canonical local-assignment order.
    pub fn to_vector(&self) -> Vec<f64> {
        self.tables.iter().flatten().copied().collect()
    }

    pub fn to_rational_vector(&self) -> Option<Vec<BigRational>> {
        self.exact
            .as_ref()
            .map(|t| t.iter().flatten().cloned().collect())
    }

    /// Compares marginals of every pair of overlapping contexts.
    ///
    /// Works on unnormalized tables too; only the marginal agreement is
    /// judged.
    pub fn check_no_signalling(&self, eps: f64) -> NoSignallingReport {
        let scn = &self.scenario;
        let k = scn.num_outcomes();
        let mut worst = NoSignallingReport {
            passes: true,
            max_violation: 0.0,
            worst_pair: None,
            overlap: Vec::new(),
        };
        for c1 in 0..scn.num_contexts() {
            for c2 in (c1 + 1)..scn.num_contexts() {
                let overlap: Vec<usize> = scn
                    .context(c1)
                    .iter()
                    .copied()
                    .filter(|x| scn.context(c2).contains(x))
                    .collect();
                if overlap.is_empty() {
                    continue;
                }
                let violation = match &self.exact {
                    Some(ex) => {
                        let m1 = marginalize(scn.context(c1), &ex[c1], k, &overlap)
                            .expect("overlap is a subset");
                        let m2 = marginalize(scn.context(c2), &ex[c2], k, &overlap)
                            .expect("overlap is a subset");
                        m1.iter()
                            .zip(&m2)
                            .map(|(a, b)| (a.clone() - b.clone()).abs_val().to_f64())
                            .fold(0.0, f64::max)
                    }
                    None => {
                        let m1 = marginalize(scn.context(c1), &self.tables[c1], k, &overlap)
                            .expect("overlap is a subset");
                        let m2 = marginalize(scn.context(c2), &self.tables[c2], k, &overlap)
                            .expect("overlap is a subset");
                        m1.iter()
                            .zip(&m2)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max)
                    }
                };
                if worst.worst_pair.is_none() || violation > worst.max_violation {
                    worst.max_violation = violation;
                    worst.worst_pair = Some((c1, c2));
                    worst.overlap = overlap;
                }
            }
        }
        worst.passes = worst.max_violation <= eps;
        worst
    }

    /// True iff no global assignment is supported (probability above `eps`)
    /// in every context.
    pub fn is_strongly_contextual(&self, eps: f64, limit: SizeLimit) -> Result<bool> {
        let scn = &self.scenario;
        limit.check_assignments("global assignments", scn.num_global_assignments())?;
        let n = scn.num_global_assignments() as usize;
        let supported = (0..n).any(|gi| {
            let g = scn.global_assignment(gi);
            (0..scn.num_contexts()).all(|c| self.prob(c, &g.restrict(scn.context(c))) > eps)
        });
        Ok(!supported)
    }
}

fn check_shapes<T>(scenario: &MeasurementScenario, tables: &[Vec<T>]) -> Result<()> {
    if tables.len() != scenario.num_contexts() {
        return Err(Error::InvalidModel(format!(
            "{} tables for {} contexts",
            tables.len(),
            scenario.num_contexts()
        )));
    }
    for (c, t) in tables.iter().enumerate() {
        if t.len() != scenario.context_size(c) {
            return Err(Error::InvalidModel(format!(
                "context {c}: table has {} entries, expected {}",
                t.len(),
                scenario.context_size(c)
            )));
        }
    }
    Ok(())
}

fn split_blocks<T: Clone>(scenario: &MeasurementScenario, v: &[T]) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(scenario.num_contexts());
    let mut at = 0;
    for c in 0..scenario.num_contexts() {
        let size = scenario.context_size(c);
        out.push(v[at..at + size].to_vec());
        at += size;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoSignallingReport {
    pub passes: bool,
    /// Largest absolute marginal discrepancy over all overlapping pairs.
    pub max_violation: f64,
    /// Context pair attaining `max_violation`.
    pub worst_pair: Option<(usize, usize)>,
    /// Measurements shared by the worst pair.
    pub overlap: Vec<usize>,
}

impl NoSignallingReport {
    pub fn describe(&self) -> String {
        match self.worst_pair {
            Some((a, b)) => format!(
                "marginals of contexts {a} and {b} differ by {:.3e} on measurements {:?}",
                self.max_violation, self.overlap
            ),
            None => "no overlapping contexts".into(),
        }
    }
}

/// Marginal of a table over measurements `vars` onto the subset `onto`.
pub fn marginalize<T: Scalar>(
    vars: &[usize],
    table: &[T],
    num_outcomes: usize,
    onto: &[usize],
) -> Result<Vec<T>> {
    let pos: Vec<usize> = onto
        .iter()
        .map(|u| {
            vars.iter()
                .position(|v| v == u)
                .ok_or_else(|| Error::DomainMismatch(format!("measurement {u} is not in {vars:?}")))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![T::zero(); num_outcomes.pow(onto.len() as u32)];
    for (idx, p) in table.iter().enumerate() {
        let s = decode_mixed(idx, num_outcomes, vars.len());
        let t: Vec<usize> = pos.iter().map(|&i| s[i]).collect();
        let j = encode_mixed(&t, num_outcomes);
        out[j] = out[j].clone() + p.clone();
    }
    Ok(out)
}

/// The point-mass model of a global assignment (exact).
pub fn deterministic_model(scenario: &MeasurementScenario, g: &GlobalAssignment) -> EmpiricalModel {
    let zero = <BigRational as Scalar>::zero();
    let one = <BigRational as Scalar>::one();
    let exact: Vec<Vec<BigRational>> = (0..scenario.num_contexts())
        .map(|c| {
            let mut t = vec![zero.clone(); scenario.context_size(c)];
            t[scenario.local_index(&g.restrict(scenario.context(c)))] = one.clone();
            t
        })
        .collect();
    EmpiricalModel {
        tables: exact
            .iter()
            .map(|t| t.iter().map(Scalar::to_f64).collect())
            .collect(),
        scenario: scenario.clone(),
        exact: Some(exact),
    }
}

/// `lambda * e1 + (1 - lambda) * e2`, exact when both inputs are.
pub fn mix(e1: &EmpiricalModel, e2: &EmpiricalModel, lambda: f64) -> Result<EmpiricalModel> {
    if e1.scenario != e2.scenario {
        return Err(Error::ScenarioMismatch);
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::PreconditionViolated(format!(
            "mixing weight {lambda} outside [0,1]"
        )));
    }
    if let (Some(x1), Some(x2)) = (&e1.exact, &e2.exact) {
        let l = <BigRational as Scalar>::from_f64(lambda).expect("finite");
        let r = <BigRational as Scalar>::one() - l.clone();
        let exact: Vec<Vec<BigRational>> = x1
            .iter()
            .zip(x2)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| l.clone() * p.clone() + r.clone() * q.clone())
                    .collect()
            })
            .collect();
        return EmpiricalModel::from_rational(e1.scenario.clone(), exact);
    }
    let tables = e1
        .tables
        .iter()
        .zip(&e2.tables)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
                .collect()
        })
        .collect();
    EmpiricalModel::with_tolerance(e1.scenario.clone(), tables, EPS_QUANTUM)
}

/// A nonnegative weighting of finitely many keys with total at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct SubDistribution<K: Ord, V = f64> {
    weights: BTreeMap<K, V>,
}

impl<K: Ord, V> Default for SubDistribution<K, V> {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone, V: Scalar> SubDistribution<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from pairs, summing repeated keys and dropping zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        let mut d = Self::new();
        for (k, v) in pairs {
            d.add(k, v);
        }
        d
    }

    pub fn add(&mut self, key: K, value: V) {
        if value.is_zero_tol(0.0) {
            return;
        }
        let entry = self.weights.entry(key).or_insert_with(V::zero);
        *entry = entry.clone() + value;
    }

    pub fn get(&self, key: &K) -> V {
        self.weights.get(key).cloned().unwrap_or_else(V::zero)
    }

    pub fn weight(&self) -> V {
        self.weights.values().fold(V::zero(), |a, v| a + v.clone())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.weights.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.weights.keys()
    }

    pub fn scaled(&self, factor: &V) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * factor.clone()))
                .collect(),
        }
    }

    /// Nonnegative entries and total weight at most `1 + eps`.
    pub fn is_valid(&self, eps: f64) -> bool {
        self.weights.values().all(|v| !v.is_neg(eps)) && !(self.weight() - V::one()).is_pos(eps)
    }

    /// Push-forward along `f`.
    pub fn map_keys<K2: Ord + Clone>(&self, f: impl Fn(&K) -> K2) -> SubDistribution<K2, V> {
        SubDistribution::from_pairs(self.weights.iter().map(|(k, v)| (f(k), v.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    fn bell() -> MeasurementScenario {
        MeasurementScenario::bell(2, 2, 2).unwrap()
    }

    #[test]
    fn marginalize_identity_and_pr() {
        let pr = builtins::pr_box();
        let t = pr.table(0);
        assert_eq!(marginalize(&[0, 2], t, 2, &[0, 2]).unwrap(), t.to_vec());
        assert_eq!(marginalize(&[0, 2], t, 2, &[0]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(
            marginalize(&[0, 2], t, 2, &[1]),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn marginalize_product_table() {
        let p = [0.2, 0.8];
        let q = [0.6, 0.1, 0.3];
        let table: Vec<f64> = p
            .iter()
            .flat_map(|a| q.iter().map(move |b| a * b))
            .collect();
        // Pad to a common outcome set of size 3.
        let mut t3 = vec![0.0; 9];
        for s in 0..2 {
            for t in 0..3 {
                t3[s * 3 + t] = table[s * 3 + t];
            }
        }
        let m = marginalize(&[0, 1], &t3, 3, &[0]).unwrap();
        assert!((m[0] - 0.2).abs() < 1e-15 && (m[1] - 0.8).abs() < 1e-15 && m[2] == 0.0);
        let m = marginalize(&[0, 1], &t3, 3, &[1]).unwrap();
        for (a, b) in m.iter().zip(q) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn no_signalling_reports() {
        assert!(builtins::pr_box().check_no_signalling(1e-12).passes);
        let g = bell().global_assignment(5);
        assert!(
            deterministic_model(&bell(), &g)
                .check_no_signalling(0.0)
                .passes
        );

        let mut tables = builtins::chsh().tables().to_vec();
        tables[1][0] += 0.05;
        let broken = EmpiricalModel::new_unchecked(bell(), tables);
        let rep = broken.check_no_signalling(1e-9);
        assert!(!rep.passes);
        assert!((rep.max_violation - 0.05).abs() < 1e-12);
        let (a, b) = rep.worst_pair.unwrap();
        assert!(a == 1 || b == 1);
        assert_eq!(rep.overlap.len(), 1);
    }

    #[test]
    fn vectors() {
        let v = builtins::pr_box().to_vector();
        assert_eq!(v.len(), 16);
        assert_eq!(v.iter().filter(|&&x| x == 0.5).count(), 8);

        let scn = bell();
        let inc = crate::scenario::build_incidence_matrix(&scn, SizeLimit::default()).unwrap();
        for gi in [0, 6, 15] {
            let v = deterministic_model(&scn, &scn.global_assignment(gi)).to_vector();
            let col: Vec<f64> = (0..16).map(|r| inc.entry(r, gi) as f64).collect();
            assert_eq!(v, col);
        }
    }

    #[test]
    fn deterministic_point_masses() {
        let scn = bell();
        let zero = deterministic_model(
            &scn,
            &GlobalAssignment {
                outcomes: vec![0; 4],
            },
        );
        for c in 0..4 {
            assert_eq!(zero.table(c), &[1.0, 0.0, 0.0, 0.0]);
        }
        // a1=0, a2=1, b1=0, b2=1
        let g = GlobalAssignment {
            outcomes: vec![0, 1, 0, 1],
        };
        let e = deterministic_model(&scn, &g);
        assert_eq!(e.prob(0, &[0, 0]), 1.0);
        assert_eq!(e.prob(1, &[0, 1]), 1.0);
        assert_eq!(e.prob(2, &[1, 0]), 1.0);
        assert_eq!(e.prob(3, &[1, 1]), 1.0);
    }

    #[test]
    fn mixing() {
        let pr = builtins::pr_box();
        let uni = builtins::uniform_n2();
        assert_eq!(mix(&pr, &uni, 1.0).unwrap(), pr);
        let half = mix(&pr, &uni, 0.5).unwrap();
        assert_eq!(half.table(0), &[0.375, 0.125, 0.125, 0.375]);
        assert_eq!(half.table(3), &[0.125, 0.375, 0.375, 0.125]);
        let det = deterministic_model(
            &bell(),
            &GlobalAssignment {
                outcomes: vec![0; 4],
            },
        );
        let m = mix(&pr, &det, 0.5).unwrap();
        assert_eq!(m.table(0), &[0.75, 0.0, 0.0, 0.25]);
        let lin: Vec<f64> = pr
            .to_vector()
            .iter()
            .zip(det.to_vector())
            .map(|(a, b)| 0.5 * a + 0.5 * b)
            .collect();
        assert_eq!(m.to_vector(), lin);
        let other = builtins::ghz3_mermin();
        assert_eq!(mix(&pr, &other, 0.5), Err(Error::ScenarioMismatch));
    }

    #[test]
    fn strong_contextuality_support_search() {
        let lim = SizeLimit::default();
        assert!(builtins::pr_box()
            .is_strongly_contextual(1e-9, lim)
            .unwrap());
        assert!(!builtins::chsh().is_strongly_contextual(1e-9, lim).unwrap());
        assert!(builtins::ghz3_mermin()
            .is_strongly_contextual(1e-9, lim)
            .unwrap());
        let det = deterministic_model(&bell(), &bell().global_assignment(9));
        assert!(!det.is_strongly_contextual(1e-9, lim).unwrap());
    }

    #[test]
    fn validation() {
        let scn = bell();
        let mut t = builtins::chsh().tables().to_vec();
        t[0][1] = -1e-12;
        t[0][0] += 1e-12;
        let e = EmpiricalModel::new(scn.clone(), t).unwrap();
        assert_eq!(e.table(0)[1], 0.0);

        let mut t = builtins::chsh().tables().to_vec();
        t[0][1] = -0.01;
        t[0][0] += 0.01;
        assert!(EmpiricalModel::new(scn.clone(), t).is_err());

        let mut t = builtins::chsh().tables().to_vec();
        t[2][0] += 0.05;
        assert!(EmpiricalModel::new(scn.clone(), t).is_err());

        assert!(EmpiricalModel::new(scn, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn subdistribution_basics() {
        let d = SubDistribution::from_pairs([("a", 0.25), ("b", 0.5), ("a", 0.125), ("c", 0.0)]);
        assert_eq!(d.len(), 2);
        assert_eq!(d.get(&"a"), 0.375);
        assert_eq!(d.weight(), 0.875);
        assert!(d.is_valid(0.0));
        assert!(!d.scaled(&2.0).is_valid(1e-9));
    }
}
