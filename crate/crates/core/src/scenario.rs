//! Measurement scenarios, assignment enumeration and the incidence matrix.
//!
//! A scenario is a triple of measurement labels, outcome labels, and a family
//! of contexts (sets of jointly performable measurements). Contexts are kept
//! as sorted index lists so that each context's measurements appear in the
//! declared measurement order.
//!
//! Canonical orders used throughout the crate:
//!
//! - local assignments: contexts in declared order, then outcomes
//!   lexicographically with the first measurement of the context most
//!   significant;
//! - global assignments: lexicographic over the declared measurement order,
//!   first measurement most significant.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{checked_pow, Error, Result, SizeLimit};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementScenario {
    measurements: Vec<String>,
    outcomes: Vec<String>,
    contexts: Vec<Vec<usize>>,
}

impl MeasurementScenario {
    /// Builds a scenario from labels. Context members are looked up by label.
    pub fn new<S: AsRef<str>>(
        measurements: &[S],
        outcomes: &[S],
        contexts: &[Vec<S>],
    ) -> Result<Self> {
        let measurements: Vec<String> =
            measurements.iter().map(|m| m.as_ref().to_owned()).collect();
        let outcomes: Vec<String> = outcomes.iter().map(|o| o.as_ref().to_owned()).collect();
        let mut idx_contexts = Vec::with_capacity(contexts.len());
        for ctx in contexts {
            let mut members = Vec::with_capacity(ctx.len());
            for label in ctx {
                let label = label.as_ref();
                let pos = measurements
                    .iter()
                    .position(|m| m == label)
                    .ok_or_else(|| {
                        Error::InvalidScenario(format!("unknown measurement {label:?} in context"))
                    })?;
                members.push(pos);
            }
            idx_contexts.push(members);
        }
        Self::from_indices(measurements, outcomes, idx_contexts)
    }

    /// Builds a scenario from measurement indices. Each context is sorted into
    /// declared measurement order.
    pub fn from_indices(
        measurements: Vec<String>,
        outcomes: Vec<String>,
        contexts: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidScenario("outcome set is empty".into()));
        }
        if measurements.is_empty() {
            return Err(Error::InvalidScenario("measurement set is empty".into()));
        }
        if contexts.is_empty() {
            return Err(Error::InvalidScenario("no contexts".into()));
        }
        check_distinct("measurement", &measurements)?;
        check_distinct("outcome", &outcomes)?;

        let mut seen_contexts = BTreeSet::new();
        let mut covered = vec![false; measurements.len()];
        let mut sorted_contexts = Vec::with_capacity(contexts.len());
        for (ci, mut ctx) in contexts.into_iter().enumerate() {
            if ctx.is_empty() {
                return Err(Error::InvalidScenario(format!("context {ci} is empty")));
            }
            ctx.sort_unstable();
            if ctx.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidScenario(format!(
                    "context {ci} repeats a measurement"
                )));
            }
            if let Some(&bad) = ctx.iter().find(|&&x| x >= measurements.len()) {
                return Err(Error::InvalidScenario(format!(
                    "context {ci} references measurement {bad}"
                )));
            }
            if !seen_contexts.insert(ctx.clone()) {
                return Err(Error::InvalidScenario(format!(
                    "context {ci} is a duplicate"
                )));
            }
            for &x in &ctx {
                covered[x] = true;
            }
            sorted_contexts.push(ctx);
        }
        if let Some(x) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidScenario(format!(
                "measurement {:?} belongs to no context",
                measurements[x]
            )));
        }
        Ok(Self {
            measurements,
            outcomes,
            contexts: sorted_contexts,
        })
    }

    /// The `(n, k, d)` Bell scenario: `n` parties, `k` settings each, `d`
    /// outcomes. Parties are named `a`, `b`, ... and settings numbered from 1;
    /// outcomes are `"0"`, `"1"`, .... Contexts pick one setting per party and
    /// are listed in mixed-radix order with the first party most significant.
    pub fn bell(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        if parties == 0 || settings == 0 || outcomes == 0 {
            return Err(Error::InvalidScenario(
                "bell scenario dimensions must be positive".into(),
            ));
        }
        let count = checked_pow(settings, parties);
        if count > 1 << 24 {
            return Err(Error::SizeLimitExceeded {
                what: "bell scenario contexts",
                size: count,
                limit: 1 << 24,
            });
        }
        let measurements = (0..parties)
            .flat_map(|p| (0..settings).map(move |k| format!("{}{}", party_name(p), k + 1)))
            .collect();
        let outcome_labels = (0..outcomes).map(|o| o.to_string()).collect();
        let contexts = (0..count as usize)
            .map(|c| {
                decode_mixed(c, settings, parties)
                    .into_iter()
                    .enumerate()
                    .map(|(p, k)| p * settings + k)
                    .collect()
            })
            .collect();
        Self::from_indices(measurements, outcome_labels, contexts)
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn context(&self, i: usize) -> &[usize] {
        &self.contexts[i]
    }

    pub fn num_measurements(&self) -> usize {
        self.measurements.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    /// `|O|^|C|` for context `i`.
    pub fn context_size(&self, i: usize) -> usize {
        self.outcomes.len().pow(self.contexts[i].len() as u32)
    }

    /// Number of local assignments `m`.
    pub fn num_local_assignments(&self) -> usize {
        (0..self.contexts.len()).map(|i| self.context_size(i)).sum()
    }

    /// Number of global assignments `n = |O|^|X|`, saturating.
    pub fn num_global_assignments(&self) -> u128 {
        checked_pow(self.outcomes.len(), self.measurements.len())
    }

    /// Row offset of each context block in the local-assignment order.
    pub fn context_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.contexts.len());
        let mut acc = 0;
        for i in 0..self.contexts.len() {
            offsets.push(acc);
            acc += self.context_size(i);
        }
        offsets
    }

    pub fn measurement_index(&self, label: &str) -> Option<usize> {
        self.measurements.iter().position(|m| m == label)
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }

    /// Index of the context with exactly these members, if any.
    pub fn find_context(&self, members: &[usize]) -> Option<usize> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        self.contexts.iter().position(|c| *c == sorted)
    }

    /// Index of an assignment of outcomes to the members of context `i`.
    pub fn local_index(&self, outcomes: &[usize]) -> usize {
        encode_mixed(outcomes, self.outcomes.len())
    }

    /// Outcomes for the `idx`-th assignment of context `i`.
    pub fn local_outcomes(&self, context: usize, idx: usize) -> Vec<usize> {
        decode_mixed(idx, self.outcomes.len(), self.contexts[context].len())
    }

    /// Decodes the `idx`-th global assignment.
    pub fn global_assignment(&self, idx: usize) -> GlobalAssignment {
        GlobalAssignment {
            outcomes: decode_mixed(idx, self.outcomes.len(), self.measurements.len()),
        }
    }

    /// Position of a global assignment in canonical order.
    pub fn global_index(&self, g: &GlobalAssignment) -> usize {
        encode_mixed(&g.outcomes, self.outcomes.len())
    }

    /// Renders an assignment key such as `"0,1"` for context `i`.
    pub fn assignment_key(&self, outcomes: &[usize]) -> String {
        outcomes
            .iter()
            .map(|&o| self.outcomes[o].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses an assignment key such as `"0,1"` into outcome indices.
    pub fn parse_assignment_key(&self, context: usize, key: &str) -> Result<Vec<usize>> {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        if parts.len() != self.contexts[context].len() {
            return Err(Error::Parse(format!(
                "assignment {key:?} has {} outcomes, context {context} has {} measurements",
                parts.len(),
                self.contexts[context].len()
            )));
        }
        parts
            .iter()
            .map(|p| {
                self.outcome_index(p).ok_or_else(|| {
                    Error::Parse(format!("unknown outcome {p:?} in assignment {key:?}"))
                })
            })
            .collect()
    }
}

fn check_distinct(kind: &str, labels: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidScenario(format!(
                "duplicate {kind} label {l:?}"
            )));
        }
    }
    Ok(())
}

fn party_name(p: usize) -> String {
    if p < 26 {
        ((b'a' + p as u8) as char).to_string()
    } else {
        format!("p{p}_")
    }
}

/// Mixed-radix encoding with the first digit most significant.
pub fn encode_mixed(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

/// Inverse of [`encode_mixed`] for a fixed number of digits.
pub fn decode_mixed(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for slot in digits.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    digits
}

/// An assignment of outcomes to the measurements of one context.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalAssignment {
    pub context: usize,
    /// Outcome index per context member, in context order.
    pub outcomes: Vec<usize>,
}

/// An assignment of outcomes to every measurement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalAssignment {
    /// Outcome index per measurement, in declared order.
    pub outcomes: Vec<usize>,
}

impl GlobalAssignment {
    pub fn restrict(&self, context: &[usize]) -> Vec<usize> {
        context.iter().map(|&x| self.outcomes[x]).collect()
    }
}

pub fn enumerate_global_assignments(
    scn: &MeasurementScenario,
    limit: SizeLimit,
) -> Result<Vec<GlobalAssignment>> {
    let n = scn.num_global_assignments();
    limit.check_assignments("global assignments", n)?;
    Ok((0..n as usize).map(|i| scn.global_assignment(i)).collect())
}

pub fn enumerate_local_assignments(scn: &MeasurementScenario) -> Vec<LocalAssignment> {
    let mut out = Vec::with_capacity(scn.num_local_assignments());
    for c in 0..scn.num_contexts() {
        for idx in 0..scn.context_size(c) {
            out.push(LocalAssignment {
                context: c,
                outcomes: scn.local_outcomes(c, idx),
            });
        }
    }
    out
}

/// The `m x n` restriction matrix between local and global assignments.
///
/// Every column has exactly one nonzero per context, so columns are stored as
/// their `|M|` row indices (ascending).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    per_col: usize,
    col_rows: Vec<u32>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row indices of the ones in column `g`, one per context.
    pub fn column(&self, g: usize) -> &[u32] {
        &self.col_rows[g * self.per_col..(g + 1) * self.per_col]
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.column(col).binary_search(&(row as u32)).is_ok())
    }

    pub fn column_sums(&self) -> Vec<usize> {
        vec![self.per_col; self.cols]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.rows];
        for &r in &self.col_rows {
            sums[r as usize] += 1;
        }
        sums
    }

    /// `M b`.
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (g, &w) in b.iter().enumerate() {
            if w != 0.0 {
                for &r in self.column(g) {
                    out[r as usize] += w;
                }
            }
        }
        out
    }

    /// `M^T y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols)
            .map(|g| self.column(g).iter().map(|&r| y[r as usize]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.cols]; self.rows];
        for g in 0..self.cols {
            for &r in self.column(g) {
                dense[r as usize][g] = 1;
            }
        }
        dense
    }
}

pub fn build_incidence_matrix(
    scn: &MeasurementScenario,
    limit: SizeLimit,
) -> Result<IncidenceMatrix> {
    let n = scn.num_global_assignments();
    limit.check_assignments("global assignments", n)?;
    let m = scn.num_local_assignments();
    limit.check_cells((m as u128).saturating_mul(n))?;
    let n = n as usize;
    let offsets = scn.context_offsets();
    let per_col = scn.num_contexts();
    let base = scn.num_outcomes();
    let mut col_rows = Vec::with_capacity(n * per_col);
    for g in 0..n {
        let digits = decode_mixed(g, base, scn.num_measurements());
        for (c, ctx) in scn.contexts().iter().enumerate() {
            let local = ctx.iter().fold(0, |acc, &x| acc * base + digits[x]);
            col_rows.push((offsets[c] + local) as u32);
        }
    }
    Ok(IncidenceMatrix {
        rows: m,
        cols: n,
        per_col,
        col_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chsh_scenario() -> MeasurementScenario {
        MeasurementScenario::new(
            &["a1", "a2", "b1", "b2"],
            &["0", "1"],
            &[
                vec!["a1", "b1"],
                vec!["a1", "b2"],
                vec!["a2", "b1"],
                vec!["a2", "b2"],
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_measurement_globals() {
        let scn = MeasurementScenario::new(&["a"], &["0", "1"], &[vec!["a"]]).unwrap();
        let gs = enumerate_global_assignments(&scn, SizeLimit::default()).unwrap();
        assert_eq!(gs.len(), 2);
        assert_eq!(gs[0].outcomes, vec![0]);
        assert_eq!(gs[1].outcomes, vec![1]);
    }

    #[test]
    fn bell_scenario_counts() {
        let scn = chsh_scenario();
        assert_eq!(
            enumerate_global_assignments(&scn, SizeLimit::default())
                .unwrap()
                .len(),
            16
        );
        assert_eq!(enumerate_local_assignments(&scn).len(), 16);
        assert_eq!(scn, MeasurementScenario::bell(2, 2, 2).unwrap());
    }

    #[test]
    fn ternary_lex_order() {
        let scn =
            MeasurementScenario::new(&["a", "b"], &["0", "1", "2"], &[vec!["a", "b"]]).unwrap();
        let gs = enumerate_global_assignments(&scn, SizeLimit::default()).unwrap();
        let expected: Vec<Vec<usize>> = (0..3)
            .flat_map(|a| (0..3).map(move |b| vec![a, b]))
            .collect();
        assert_eq!(
            gs.into_iter().map(|g| g.outcomes).collect::<Vec<_>>(),
            expected
        );
    }

    #[test]
    fn nested_contexts_local_count() {
        let scn = MeasurementScenario::new(&["a", "b"], &["0", "1"], &[vec!["a"], vec!["a", "b"]])
            .unwrap();
        assert_eq!(enumerate_local_assignments(&scn).len(), 6);
        let single = MeasurementScenario::new(&["a"], &["0", "1"], &[vec!["a"]]).unwrap();
        assert_eq!(enumerate_local_assignments(&single).len(), 2);
    }

    #[test]
    fn incidence_identity_for_single_measurement() {
        let scn = MeasurementScenario::new(&["a"], &["0", "1"], &[vec!["a"]]).unwrap();
        let m = build_incidence_matrix(&scn, SizeLimit::default()).unwrap();
        assert_eq!(m.to_dense(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn incidence_bell_column_sums() {
        let m = build_incidence_matrix(&chsh_scenario(), SizeLimit::default()).unwrap();
        assert_eq!((m.rows(), m.cols()), (16, 16));
        let dense = m.to_dense();
        for g in 0..16 {
            assert_eq!(dense.iter().map(|r| r[g] as usize).sum::<usize>(), 4);
        }
    }

    #[test]
    fn incidence_partial_context_row_sums() {
        let scn = MeasurementScenario::new(&["a", "b"], &["0", "1"], &[vec!["a"]]);
        // b belongs to no context, so this scenario is rejected.
        assert!(scn.is_err());
        let scn =
            MeasurementScenario::new(&["a", "b"], &["0", "1"], &[vec!["a"], vec!["b"]]).unwrap();
        let m = build_incidence_matrix(&scn, SizeLimit::default()).unwrap();
        assert!(m.row_sums().iter().all(|&s| s == 2));
    }

    #[test]
    fn size_guard() {
        let scn = MeasurementScenario::bell(11, 2, 2).unwrap();
        let err = enumerate_global_assignments(&scn, SizeLimit::default()).unwrap_err();
        assert!(matches!(err, Error::SizeLimitExceeded { .. }));
        assert!(build_incidence_matrix(&scn, SizeLimit::with_max_assignments(1 << 10)).is_err());
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(MeasurementScenario::new(&["a"], &[], &[vec!["a"]]).is_err());
        assert!(MeasurementScenario::new(&["a", "a"], &["0"], &[vec!["a"]]).is_err());
        assert!(MeasurementScenario::new(&["a"], &["0"], &[vec!["a"], vec!["a"]]).is_err());
        assert!(MeasurementScenario::new(&["a"], &["0"], &[vec!["z"]]).is_err());
        let empty: Vec<&str> = vec![];
        assert!(MeasurementScenario::new(&["a"], &["0"], &[vec!["a"], empty]).is_err());
    }

    #[test]
    fn contexts_sorted_into_declared_order() {
        let scn = MeasurementScenario::new(&["a", "b"], &["0", "1"], &[vec!["b", "a"]]).unwrap();
        assert_eq!(scn.context(0), &[0, 1]);
    }
}
