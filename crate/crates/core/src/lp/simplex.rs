//! Dense two-phase tableau simplex with Bland's rule.
//!
//! The original program is rewritten into standard form (shifted or split
//! variables, nonnegative right-hand sides, slack/surplus/artificial columns).
//! Phase one drives the artificial variables to zero; phase two optimizes the
//! real objective with artificials barred from entering. Both phases choose
//! the lowest-index improving column and break ratio ties on the lowest
//! basic index, so the returned vertex depends only on the variable order.

use crate::error::{Error, Result};

use super::field::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub direction: Direction,
    pub objective: Vec<T>,
    pub rows: Vec<Vec<T>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<T>,
    /// `Some(l)` means `x >= l`; `None` means the variable is free.
    pub lower: Vec<Option<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    /// An empty program over `objective.len()` nonnegative variables.
    pub fn new(direction: Direction, objective: Vec<T>) -> Self {
        let n = objective.len();
        Self {
            direction,
            objective,
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(T::zero()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> &mut Self {
        self.rows.push(coeffs);
        self.relations.push(relation);
        self.rhs.push(rhs);
        self
    }

    pub fn set_lower(&mut self, var: usize, lower: Option<T>) -> &mut Self {
        self.lower[var] = lower;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n {
            return Err(Error::MalformedProgram(format!(
                "{} lower bounds for {n} variables",
                self.lower.len()
            )));
        }
        if self.relations.len() != self.rows.len() || self.rhs.len() != self.rows.len() {
            return Err(Error::MalformedProgram(
                "row, relation and rhs counts differ".into(),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MalformedProgram(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let finite = |v: &T| v.to_f64().is_finite();
        let all_finite = self.objective.iter().all(finite)
            && self.rhs.iter().all(finite)
            && self.rows.iter().flatten().all(finite)
            && self.lower.iter().flatten().all(finite);
        if !all_finite {
            return Err(Error::MalformedProgram("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Converts every coefficient into another scalar type.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LinearProgram<U> {
        LinearProgram {
            direction: self.direction,
            objective: self.objective.iter().map(&f).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
            relations: self.relations.clone(),
            rhs: self.rhs.iter().map(&f).collect(),
            lower: self.lower.iter().map(|l| l.as_ref().map(&f)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: Status,
    /// Objective value `c . x` when optimal.
    pub value: Option<T>,
    /// Optimal point in the original variables (empty unless optimal).
    pub x: Vec<T>,
    /// Dual multipliers, one per original constraint, in the sign convention
    /// of the symmetric dual (nonnegative for `<=` rows of a maximization).
    pub duals: Vec<T>,
    /// Basic standard-form column per surviving tableau row.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

impl<T: Scalar> LpSolution<T> {
    fn without_point(status: Status, pivots: usize) -> Self {
        Self {
            status,
            value: None,
            x: Vec::new(),
            duals: Vec::new(),
            basis: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// The optimal value, or `NotOptimal` naming the status.
    pub fn optimal_value(&self) -> Result<&T> {
        self.value
            .as_ref()
            .ok_or(Error::NotOptimal(self.status.name()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Zero tolerance for pivot elements and reduced costs (float only).
    pub tol: f64,
    /// Maximum allowed constraint residual of a float solution.
    pub residual_tol: f64,
    pub max_pivots: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            residual_tol: 1e-9,
            max_pivots: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    Shifted(usize),
    Split(usize, usize),
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// Original constraint index of each tableau row.
    origin: Vec<usize>,
    ncols: usize,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, obj: &mut [T], r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero_tol(0.0) {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero_tol(0.0) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[c] = T::zero();
        }
        let f = obj[c].clone();
        if !f.is_zero_tol(0.0) {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero_tol(0.0) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            obj[c] = T::zero();
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Subtracts basic costs from a raw objective row so that it holds
    /// reduced costs and `-z` in the last slot.
    fn price_out(&self, costs: &[T]) -> Vec<T> {
        let mut obj: Vec<T> = costs.to_vec();
        obj.push(T::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = costs[b].clone();
            if cb.is_zero_tol(0.0) {
                continue;
            }
            for (v, rv) in obj.iter_mut().zip(row) {
                *v = v.clone() - cb.clone() * rv.clone();
            }
        }
        obj
    }

    fn run(
        &mut self,
        obj: &mut [T],
        allowed: &dyn Fn(usize) -> bool,
        opts: &SolverOptions,
    ) -> Result<Outcome> {
        let tol = opts.tol;
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(Error::PivotLimit(opts.max_pivots));
            }
            let Some(enter) = (0..self.ncols).find(|&j| allowed(j) && obj[j].is_pos(tol)) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if !a.is_pos(tol) {
                    continue;
                }
                let rhs = &row[self.ncols];
                let rhs = if rhs.is_neg(0.0) {
                    T::zero()
                } else {
                    rhs.clone()
                };
                let ratio = rhs / a.clone();
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, best)) => {
                        let diff = ratio.clone() - best.clone();
                        if diff.is_neg(tol)
                            || (diff.is_zero_tol(tol) && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(obj, r, enter);
        }
    }
}

/// Solves `lp` with the tableau simplex over the scalar type `T`.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let tol = if T::EXACT { 0.0 } else { opts.tol };

    // Variable substitution.
    let mut maps = Vec::with_capacity(n);
    let mut nstruct = 0;
    for l in &lp.lower {
        match l {
            Some(_) => {
                maps.push(VarMap::Shifted(nstruct));
                nstruct += 1;
            }
            None => {
                maps.push(VarMap::Split(nstruct, nstruct + 1));
                nstruct += 2;
            }
        }
    }

    // Standardized rows with nonnegative rhs.
    let mut std_rows: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut std_rel = Vec::with_capacity(m);
    let mut std_rhs = Vec::with_capacity(m);
    let mut negated = vec![false; m];
    for i in 0..m {
        let mut coeffs = vec![T::zero(); nstruct];
        let mut rhs = lp.rhs[i].clone();
        for (j, a) in lp.rows[i].iter().enumerate() {
            match maps[j] {
                VarMap::Shifted(k) => {
                    coeffs[k] = a.clone();
                    if let Some(l) = &lp.lower[j] {
                        rhs = rhs - a.clone() * l.clone();
                    }
                }
                VarMap::Split(p, q) => {
                    coeffs[p] = a.clone();
                    coeffs[q] = -a.clone();
                }
            }
        }
        let mut rel = lp.relations[i];
        if rhs.is_neg(0.0) {
            negated[i] = true;
            coeffs.iter_mut().for_each(|v| *v = -v.clone());
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        std_rows.push(coeffs);
        std_rel.push(rel);
        std_rhs.push(rhs);
    }

    // Column layout: structural | slack/surplus | artificial.
    let n_slack = std_rel.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = std_rel.iter().filter(|r| **r != Relation::Le).count();
    let art_start = nstruct + n_slack;
    let ncols = art_start + n_art;
    let mut identity_col = vec![0; m];
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (nstruct, art_start);
    for i in 0..m {
        let mut row = std_rows[i].clone();
        row.resize(ncols + 1, T::zero());
        match std_rel[i] {
            Relation::Le => {
                row[next_slack] = T::one();
                identity_col[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -T::one();
                next_slack += 1;
                row[next_art] = T::one();
                identity_col[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = T::one();
                identity_col[i] = next_art;
                next_art += 1;
            }
        }
        row[ncols] = std_rhs[i].clone();
        basis.push(identity_col[i]);
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis,
        origin: (0..m).collect(),
        ncols,
        pivots: 0,
    };

    // Phase one.
    if n_art > 0 {
        let mut costs = vec![T::zero(); ncols];
        for c in costs.iter_mut().skip(art_start) {
            *c = -T::one();
        }
        let mut obj = tab.price_out(&costs);
        tab.run(&mut obj, &|_| true, opts)?;
        let infeasibility = obj[ncols].clone();
        let feas_tol = if T::EXACT { 0.0 } else { opts.residual_tol };
        if infeasibility.is_pos(feas_tol) {
            return Ok(LpSolution::without_point(Status::Infeasible, tab.pivots));
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[r][j].is_zero_tol(tol)) {
                    Some(j) => {
                        tab.pivot(&mut obj, r, j);
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        tab.origin.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    // Phase two, always as a maximization.
    let sign = match lp.direction {
        Direction::Maximize => T::one(),
        Direction::Minimize => -T::one(),
    };
    let mut costs = vec![T::zero(); ncols];
    for (j, c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted(k) => costs[k] = sign.clone() * c.clone(),
            VarMap::Split(p, q) => {
                costs[p] = sign.clone() * c.clone();
                costs[q] = -(sign.clone() * c.clone());
            }
        }
    }
    let mut obj = tab.price_out(&costs);
    match tab.run(&mut obj, &|j| j < art_start, opts)? {
        Outcome::Unbounded => return Ok(LpSolution::without_point(Status::Unbounded, tab.pivots)),
        Outcome::Optimal => {}
    }

    let mut std_x = vec![T::zero(); ncols];
    for (row, &b) in tab.rows.iter().zip(&tab.basis) {
        let v = row[ncols].clone();
        std_x[b] = if v.is_neg(tol) {
            v
        } else if v.is_neg(0.0) {
            T::zero()
        } else {
            v
        };
    }
    let x: Vec<T> = (0..n)
        .map(|j| match maps[j] {
            VarMap::Shifted(k) => match &lp.lower[j] {
                Some(l) => std_x[k].clone() + l.clone(),
                None => unreachable!(),
            },
            VarMap::Split(p, q) => std_x[p].clone() - std_x[q].clone(),
        })
        .collect();

    let mut duals = vec![T::zero(); m];
    for &i in &tab.origin {
        let mut y = -obj[identity_col[i]].clone();
        if negated[i] {
            y = -y;
        }
        if lp.direction == Direction::Minimize {
            y = -y;
        }
        duals[i] = y;
    }

    let value = lp
        .objective
        .iter()
        .zip(&x)
        .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone());

    if !T::EXACT {
        check_residuals(lp, &x, opts.residual_tol)?;
    }

    Ok(LpSolution {
        status: Status::Optimal,
        value: Some(value),
        x,
        duals,
        basis: tab.basis,
        pivots: tab.pivots,
    })
}

fn check_residuals<T: Scalar>(lp: &LinearProgram<T>, x: &[T], tol: f64) -> Result<()> {
    for (j, l) in lp.lower.iter().enumerate() {
        if let Some(l) = l {
            let gap = l.to_f64() - x[j].to_f64();
            if gap > tol {
                return Err(Error::NumericalBreakdown(format!(
                    "variable {j} below its bound by {gap:.3e}"
                )));
            }
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let lhs: f64 = row
            .iter()
            .zip(x)
            .map(|(a, v)| a.to_f64() * v.to_f64())
            .sum();
        let rhs = lp.rhs[i].to_f64();
        let excess = match lp.relations[i] {
            Relation::Le => lhs - rhs,
            Relation::Ge => rhs - lhs,
            Relation::Eq => (lhs - rhs).abs(),
        };
        if excess > tol * (1.0 + rhs.abs()) {
            return Err(Error::NumericalBreakdown(format!(
                "constraint {i} violated by {excess:.3e}"
            )));
        }
    }
    Ok(())
}
