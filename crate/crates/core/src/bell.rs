//! Bell inequalities in local-assignment coefficient form.

use rayon::prelude::*;

use crate::empirical::EmpiricalModel;
use crate::error::{Error, Result, SizeLimit};
use crate::lp::{solve, Direction, LinearProgram, Relation, SolverOptions};
use crate::scenario::MeasurementScenario;

/// Tolerance used when deciding whether a vertex saturates the bound.
pub const TIGHTNESS_TOL: f64 = 1e-9;

/// `a . v <= R` with one coefficient per local assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct BellInequality {
    scenario: MeasurementScenario,
    coefficients: Vec<f64>,
    bound: f64,
}

impl BellInequality {
    pub fn new(scenario: MeasurementScenario, coefficients: Vec<f64>, bound: f64) -> Result<Self> {
        if coefficients.len() != scenario.num_local_assignments() {
            return Err(Error::DomainMismatch(format!(
                "{} coefficients for {} local assignments",
                coefficients.len(),
                scenario.num_local_assignments()
            )));
        }
        if !bound.is_finite() || bound < 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "bound must be a nonnegative number, got {bound}"
            )));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::PreconditionViolated("non-finite coefficient".into()));
        }
        Ok(Self {
            scenario,
            coefficients,
            bound,
        })
    }

    /// Builds from correlator terms `(context, weight)`: each adds
    /// `weight * (-1)^(sum of outcome indices)` to the context's coefficients.
    /// For binary outcomes this is the usual `E = <A B ...>` expansion.
    pub fn from_correlators(
        scenario: MeasurementScenario,
        terms: &[(usize, f64)],
        bound: f64,
    ) -> Result<Self> {
        let offsets = scenario.context_offsets();
        let mut coefficients = vec![0.0; scenario.num_local_assignments()];
        for &(c, w) in terms {
            if c >= scenario.num_contexts() {
                return Err(Error::DomainMismatch(format!("no context {c}")));
            }
            for idx in 0..scenario.context_size(c) {
                let parity: usize = scenario.local_outcomes(c, idx).iter().sum();
                let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
                coefficients[offsets[c] + idx] += w * sign;
            }
        }
        Self::new(scenario, coefficients, bound)
    }

    /// `E11 + E12 + E21 - E22 <= 2` on the (2,2,2) scenario.
    pub fn chsh() -> Self {
        let scn = MeasurementScenario::bell(2, 2, 2).expect("valid");
        Self::from_correlators(scn, &[(0, 1.0), (1, 1.0), (2, 1.0), (3, -1.0)], 2.0).expect("valid")
    }

    pub fn with_bound(mut self, bound: f64) -> Result<Self> {
        if bound.is_nan() || bound < 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "bound must be nonnegative, got {bound}"
            )));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn scenario(&self) -> &MeasurementScenario {
        &self.scenario
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `a . v^e`.
    pub fn evaluate(&self, e: &EmpiricalModel) -> Result<f64> {
        if e.scenario() != &self.scenario {
            return Err(Error::ScenarioMismatch);
        }
        Ok(dot(&self.coefficients, &e.to_vector()))
    }

    /// Sum over contexts of the largest coefficient in that context.
    pub fn algebraic_bound(&self) -> f64 {
        let mut at = 0;
        let mut total = 0.0;
        for c in 0..self.scenario.num_contexts() {
            let size = self.scenario.context_size(c);
            total += self.coefficients[at..at + size]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            at += size;
        }
        total
    }

    /// True when the algebraic bound does not exceed the bound, so nothing
    /// can violate the inequality.
    pub fn is_trivial(&self) -> bool {
        self.algebraic_bound() <= self.bound
    }

    /// `max(0, a . v - R) / (||a|| - R)`.
    pub fn normalized_violation(&self, e: &EmpiricalModel) -> Result<f64> {
        let norm = self.algebraic_bound();
        if norm <= self.bound {
            return Err(Error::TrivialInequality {
                norm,
                bound: self.bound,
            });
        }
        let value = self.evaluate(e)?;
        Ok((value - self.bound).max(0.0) / (norm - self.bound))
    }

    /// Value of the functional at every deterministic model, in canonical
    /// global-assignment order.
    pub fn vertex_values(&self, limit: SizeLimit) -> Result<Vec<f64>> {
        let scn = &self.scenario;
        limit.check_assignments("global assignments", scn.num_global_assignments())?;
        let n = scn.num_global_assignments() as usize;
        let offsets = scn.context_offsets();
        let value = |gi: usize| {
            let g = scn.global_assignment(gi);
            (0..scn.num_contexts())
                .map(|c| {
                    self.coefficients[offsets[c] + scn.local_index(&g.restrict(scn.context(c)))]
                })
                .sum::<f64>()
        };
        Ok(if n >= 4096 {
            (0..n).into_par_iter().map(value).collect()
        } else {
            (0..n).map(value).collect()
        })
    }

    /// Largest value over deterministic models.
    pub fn local_maximum(&self, limit: SizeLimit) -> Result<f64> {
        Ok(self
            .vertex_values(limit)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Satisfied by every deterministic (hence every non-contextual) model.
    pub fn is_bell_inequality(&self, limit: SizeLimit) -> Result<bool> {
        Ok(self.local_maximum(limit)? <= self.bound + TIGHTNESS_TOL)
    }

    /// Some deterministic model attains the bound.
    pub fn is_tight(&self, limit: SizeLimit) -> Result<bool> {
        let max = self.local_maximum(limit)?;
        if max > self.bound + TIGHTNESS_TOL {
            return Err(Error::PreconditionViolated("not a Bell inequality".into()));
        }
        Ok(max >= self.bound - TIGHTNESS_TOL)
    }

    /// Largest value of the functional over the no-signalling polytope.
    pub fn no_signalling_maximum(&self, opts: &SolverOptions) -> Result<f64> {
        let lp = no_signalling_program(&self.scenario, &self.coefficients);
        let sol = solve(&lp, opts)?;
        Ok(*sol.optimal_value()?)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max c . v` over nonnegative vectors whose context blocks are
/// distributions with pairwise compatible marginals.
fn no_signalling_program(scn: &MeasurementScenario, c: &[f64]) -> LinearProgram<f64> {
    let m = scn.num_local_assignments();
    let k = scn.num_outcomes();
    let offsets = scn.context_offsets();
    let mut lp = LinearProgram::new(Direction::Maximize, c.to_vec());
    for ctx in 0..scn.num_contexts() {
        let mut row = vec![0.0; m];
        for idx in 0..scn.context_size(ctx) {
            row[offsets[ctx] + idx] = 1.0;
        }
        lp.add_constraint(row, Relation::Eq, 1.0);
    }
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
            let pos = |ctx: usize| -> Vec<usize> {
                overlap
                    .iter()
                    .map(|u| {
                        scn.context(ctx)
                            .iter()
                            .position(|x| x == u)
                            .expect("shared")
                    })
                    .collect()
            };
            let (p1, p2) = (pos(c1), pos(c2));
            for t in 0..k.pow(overlap.len() as u32) {
                let target = crate::scenario::decode_mixed(t, k, overlap.len());
                let mut row = vec![0.0; m];
                for (ctx, p, sign) in [(c1, &p1, 1.0), (c2, &p2, -1.0)] {
                    for idx in 0..scn.context_size(ctx) {
                        let s = scn.local_outcomes(ctx, idx);
                        if p.iter().zip(&target).all(|(&i, &o)| s[i] == o) {
                            row[offsets[ctx] + idx] += sign;
                        }
                    }
                }
                lp.add_constraint(row, Relation::Eq, 0.0);
            }
        }
    }
    lp
}
