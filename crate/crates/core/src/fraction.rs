//! Non-contextual fraction, witnessing inequality and decomposition.
//!
//! The primal program maximizes the weight of a subdistribution `b` over
//! global assignments with `M b <= v`. The dual minimizes `y . v` subject to
//! `M^T y >= 1, y >= 0`, and `a = 1/|M| - y` is the witnessing inequality.
//!
//! Both programs are presolved against rows where the model vanishes: such a
//! row forces every column through it to zero in the primal, and in the dual
//! the corresponding `y` is free of cost, so it is fixed at one, which covers
//! every column through it.

use num_rational::BigRational;

use crate::bell::{dot, BellInequality};
use crate::empirical::{EmpiricalModel, SubDistribution};
use crate::error::{Error, Result, SizeLimit};
use crate::lp::{
    solve, Backend, Direction, LinearProgram, LpSolution, Relation, Scalar, SolverOptions,
};
use crate::scenario::{build_incidence_matrix, IncidenceMatrix};

/// Parts of a decomposition lighter than this are omitted.
pub const DECOMPOSITION_DELTA: f64 = 1e-9;
/// Entries of the model vector at or below this are treated as zero by the
/// float backend.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BackendChoice {
    /// Exact arithmetic when the model carries exact tables, float otherwise.
    #[default]
    Auto,
    Float,
    Rational,
}

impl BackendChoice {
    pub fn resolve(self, e: &EmpiricalModel) -> Backend {
        match self {
            BackendChoice::Auto if e.is_exact() => Backend::Rational,
            BackendChoice::Auto | BackendChoice::Float => Backend::Float,
            BackendChoice::Rational => Backend::Rational,
        }
    }
}

impl std::str::FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(BackendChoice::Auto),
            other => Ok(match other.parse::<Backend>()? {
                Backend::Float => BackendChoice::Float,
                Backend::Rational => BackendChoice::Rational,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FractionOptions {
    pub backend: BackendChoice,
    pub limit: SizeLimit,
    pub solver: SolverOptions,
}

impl FractionOptions {
    pub fn with_backend(backend: BackendChoice) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionResult {
    pub ncf: f64,
    pub cf: f64,
    /// Optimal subdistribution over global-assignment indices.
    pub b_star: SubDistribution<usize>,
    pub exact_ncf: Option<BigRational>,
    pub exact_b_star: Option<SubDistribution<usize, BigRational>>,
    pub backend: Backend,
}

impl FractionResult {
    /// The weight `lambda` of the non-contextual part.
    pub fn lambda(&self) -> f64 {
        self.ncf
    }
}

struct Presolved<T> {
    lp: LinearProgram<T>,
    /// Primal: surviving global assignments. Dual: surviving rows.
    kept: Vec<usize>,
}

fn zero_row<T: Scalar>(v: &T) -> bool {
    let tol = if T::EXACT { 0.0 } else { ZERO_TOL };
    !v.is_pos(tol)
}

fn surviving_columns<T: Scalar>(inc: &IncidenceMatrix, v: &[T]) -> Vec<usize> {
    (0..inc.cols())
        .filter(|&g| inc.column(g).iter().all(|&r| !zero_row(&v[r as usize])))
        .collect()
}

fn primal_program<T: Scalar>(inc: &IncidenceMatrix, v: &[T]) -> Presolved<T> {
    let cols = surviving_columns(inc, v);
    let mut row_of = vec![usize::MAX; inc.rows()];
    let mut rows = Vec::new();
    for &g in &cols {
        for &r in inc.column(g) {
            if row_of[r as usize] == usize::MAX {
                row_of[r as usize] = 0;
                rows.push(r as usize);
            }
        }
    }
    rows.sort_unstable();
    for (i, &r) in rows.iter().enumerate() {
        row_of[r] = i;
    }
    let mut a = vec![vec![T::zero(); cols.len()]; rows.len()];
    for (j, &g) in cols.iter().enumerate() {
        for &r in inc.column(g) {
            a[row_of[r as usize]][j] = T::one();
        }
    }
    let mut lp = LinearProgram::new(Direction::Maximize, vec![T::one(); cols.len()]);
    for (row, &r) in a.into_iter().zip(&rows) {
        lp.add_constraint(row, Relation::Le, v[r].clone());
    }
    Presolved { lp, kept: cols }
}

fn dual_program<T: Scalar>(inc: &IncidenceMatrix, v: &[T]) -> Presolved<T> {
    let rows: Vec<usize> = (0..inc.rows()).filter(|&r| !zero_row(&v[r])).collect();
    let mut var_of = vec![usize::MAX; inc.rows()];
    for (i, &r) in rows.iter().enumerate() {
        var_of[r] = i;
    }
    let cost: Vec<T> = rows.iter().map(|&r| v[r].clone()).collect();
    let mut lp = LinearProgram::new(Direction::Minimize, cost);
    for g in surviving_columns(inc, v) {
        let mut row = vec![T::zero(); rows.len()];
        for &r in inc.column(g) {
            row[var_of[r as usize]] = T::one();
        }
        lp.add_constraint(row, Relation::Ge, T::one());
    }
    Presolved { lp, kept: rows }
}

/// The full, unreduced programs: primal `max 1.b, Mb <= v, b >= 0` and dual
/// `min y.v, M^T y >= 1, y >= 0`.
pub fn fraction_lp_pair(
    e: &EmpiricalModel,
    limit: SizeLimit,
) -> Result<(LinearProgram<f64>, LinearProgram<f64>)> {
    let inc = build_incidence_matrix(e.scenario(), limit)?;
    let v = e.to_vector();
    let dense = inc.to_dense();
    let mut primal = LinearProgram::new(Direction::Maximize, vec![1.0; inc.cols()]);
    for (row, &vr) in dense.iter().zip(&v) {
        primal.add_constraint(row.iter().map(|&x| x as f64).collect(), Relation::Le, vr);
    }
    let mut dual = LinearProgram::new(Direction::Minimize, v);
    for g in 0..inc.cols() {
        let mut row = vec![0.0; inc.rows()];
        for &r in inc.column(g) {
            row[r as usize] = 1.0;
        }
        dual.add_constraint(row, Relation::Ge, 1.0);
    }
    Ok((primal, dual))
}

fn model_vector<T: Scalar>(e: &EmpiricalModel) -> Vec<T> {
    match e.to_rational_vector() {
        Some(exact) => exact.iter().map(T::from_rational).collect(),
        None => e
            .to_vector()
            .iter()
            .map(|&x| T::from_f64(x).expect("validated tables are finite"))
            .collect(),
    }
}

fn run<T: Scalar>(lp: &LinearProgram<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
    let sol = solve(lp, opts)?;
    if !sol.is_optimal() {
        return Err(Error::NotOptimal(sol.status.name()));
    }
    Ok(sol)
}

fn primal_generic<T: Scalar>(
    e: &EmpiricalModel,
    inc: &IncidenceMatrix,
    opts: &SolverOptions,
) -> Result<(T, SubDistribution<usize, T>)> {
    let v = model_vector::<T>(e);
    let pre = primal_program(inc, &v);
    if pre.kept.is_empty() {
        return Ok((T::zero(), SubDistribution::new()));
    }
    let sol = run(&pre.lp, opts)?;
    let b = SubDistribution::from_pairs(
        pre.kept
            .iter()
            .zip(&sol.x)
            .filter(|(_, x)| x.is_pos(if T::EXACT { 0.0 } else { ZERO_TOL }))
            .map(|(&g, x)| (g, x.clone())),
    );
    Ok((sol.value.expect("optimal"), b))
}

/// Solves the primal program for `NCF(e)`.
pub fn noncontextual_fraction(
    e: &EmpiricalModel,
    opts: &FractionOptions,
) -> Result<FractionResult> {
    let inc = build_incidence_matrix(e.scenario(), opts.limit)?;
    let backend = opts.backend.resolve(e);
    match backend {
        Backend::Float => {
            let (value, b) = primal_generic::<f64>(e, &inc, &opts.solver)?;
            let ncf = value.clamp(0.0, 1.0);
            Ok(FractionResult {
                ncf,
                cf: 1.0 - ncf,
                b_star: b,
                exact_ncf: None,
                exact_b_star: None,
                backend,
            })
        }
        Backend::Rational => {
            let (value, b) = primal_generic::<BigRational>(e, &inc, &opts.solver)?;
            let ncf = Scalar::to_f64(&value);
            Ok(FractionResult {
                ncf,
                cf: 1.0 - ncf,
                b_star: SubDistribution::from_pairs(b.iter().map(|(&g, x)| (g, Scalar::to_f64(x)))),
                exact_ncf: Some(value),
                exact_b_star: Some(b),
                backend,
            })
        }
    }
}

/// `CF(e)` alone.
pub fn contextual_fraction(e: &EmpiricalModel, opts: &FractionOptions) -> Result<f64> {
    Ok(noncontextual_fraction(e, opts)?.cf)
}

/// Optimal value of the dual program, solved independently of the primal.
#[derive(Clone, Debug, PartialEq)]
pub struct DualResult {
    pub value: f64,
    /// Optimal `y`, one entry per local assignment.
    pub y: Vec<f64>,
    pub exact_value: Option<BigRational>,
    pub exact_y: Option<Vec<BigRational>>,
}

fn dual_generic<T: Scalar>(
    e: &EmpiricalModel,
    inc: &IncidenceMatrix,
    opts: &SolverOptions,
) -> Result<(T, Vec<T>)> {
    let v = model_vector::<T>(e);
    let pre = dual_program(inc, &v);
    let mut y = vec![T::one(); inc.rows()];
    for &r in &pre.kept {
        y[r] = T::zero();
    }
    if pre.lp.num_constraints() == 0 {
        let value = dot_generic(&y, &v);
        return Ok((value, y));
    }
    let sol = run(&pre.lp, opts)?;
    for (&r, val) in pre.kept.iter().zip(&sol.x) {
        y[r] = val.clone();
    }
    Ok((dot_generic(&y, &v), y))
}

fn dot_generic<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn solve_dual(e: &EmpiricalModel, opts: &FractionOptions) -> Result<DualResult> {
    let inc = build_incidence_matrix(e.scenario(), opts.limit)?;
    match opts.backend.resolve(e) {
        Backend::Float => {
            let (value, y) = dual_generic::<f64>(e, &inc, &opts.solver)?;
            Ok(DualResult {
                value,
                y,
                exact_value: None,
                exact_y: None,
            })
        }
        Backend::Rational => {
            let (value, y) = dual_generic::<BigRational>(e, &inc, &opts.solver)?;
            Ok(DualResult {
                value: Scalar::to_f64(&value),
                y: y.iter().map(Scalar::to_f64).collect(),
                exact_value: Some(value),
                exact_y: Some(y),
            })
        }
    }
}

/// Witnessing inequality `a . v <= 0` from the dual optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub inequality: BellInequality,
    /// `a . v^e`, which equals `CF(e)` at the optimum.
    pub value: f64,
    /// Set when no no-signalling model violates the inequality (or its
    /// algebraic bound vanishes); such witnesses carry no information.
    pub trivial: bool,
    pub exact_coefficients: Option<Vec<BigRational>>,
}

impl Witness {
    /// Normalized violation, or zero for a trivial witness.
    pub fn normalized_violation(&self, e: &EmpiricalModel) -> Result<f64> {
        match self.inequality.normalized_violation(e) {
            Err(Error::TrivialInequality { .. }) => Ok(0.0),
            other => other,
        }
    }
}

pub fn witnessing_inequality(e: &EmpiricalModel, opts: &FractionOptions) -> Result<Witness> {
    let dual = solve_dual(e, opts)?;
    let contexts = e.scenario().num_contexts();
    let share = 1.0 / contexts as f64;
    let coefficients: Vec<f64> = match &dual.exact_y {
        Some(y) => {
            let share = <BigRational as Scalar>::from_ratio(1, contexts as i64);
            y.iter()
                .map(|yi| Scalar::to_f64(&(share.clone() - yi.clone())))
                .collect()
        }
        None => dual.y.iter().map(|yi| share - yi).collect(),
    };
    let exact_coefficients = dual.exact_y.as_ref().map(|y| {
        let share = <BigRational as Scalar>::from_ratio(1, contexts as i64);
        y.iter().map(|yi| share.clone() - yi.clone()).collect()
    });
    let value = dot(&coefficients, &e.to_vector());
    let inequality = BellInequality::new(e.scenario().clone(), coefficients, 0.0)?;
    let tol = 1e-9;
    let trivial = if inequality.algebraic_bound() <= tol {
        true
    } else if value <= tol {
        inequality.no_signalling_maximum(&opts.solver)? <= tol
    } else {
        false
    };
    Ok(Witness {
        inequality,
        value,
        trivial,
        exact_coefficients,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub ncf: f64,
    pub noncontextual: Option<EmpiricalModel>,
    pub strongly_contextual: Option<EmpiricalModel>,
    /// A part was omitted although its weight is not exactly zero.
    pub degenerate: bool,
}

impl Decomposition {
    /// Largest entrywise deviation of `ncf e_NC + cf e_SC` from `e`.
    pub fn recombination_error(&self, e: &EmpiricalModel) -> f64 {
        let m = e.scenario().num_local_assignments();
        let mut acc = vec![0.0; m];
        if let Some(nc) = &self.noncontextual {
            for (a, x) in acc.iter_mut().zip(nc.to_vector()) {
                *a += self.ncf * x;
            }
        }
        if let Some(sc) = &self.strongly_contextual {
            for (a, x) in acc.iter_mut().zip(sc.to_vector()) {
                *a += (1.0 - self.ncf) * x;
            }
        }
        acc.iter()
            .zip(e.to_vector())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Splits `e` as `ncf * e_NC + cf * e_SC` using the optimal `b*`.
pub fn decompose(
    e: &EmpiricalModel,
    fr: &FractionResult,
    limit: SizeLimit,
) -> Result<Decomposition> {
    let scn = e.scenario();
    let inc = build_incidence_matrix(scn, limit)?;
    let ncf = fr.ncf;
    let cf = 1.0 - ncf;
    let degenerate =
        (ncf > 0.0 && ncf <= DECOMPOSITION_DELTA) || (cf > 0.0 && cf <= DECOMPOSITION_DELTA);
    if degenerate {
        log::warn!("degenerate decomposition: ncf = {ncf:e}; omitting the negligible part");
    }

    if let (Some(b), Some(v)) = (&fr.exact_b_star, e.to_rational_vector()) {
        let zero = <BigRational as Scalar>::zero();
        let one = <BigRational as Scalar>::one();
        let weight = b.weight();
        let mut mb = vec![zero.clone(); inc.rows()];
        for (&g, x) in b.iter() {
            for &r in inc.column(g) {
                mb[r as usize] = mb[r as usize].clone() + x.clone();
            }
        }
        let noncontextual = if ncf > DECOMPOSITION_DELTA {
            let nv: Vec<BigRational> = mb.iter().map(|x| x.clone() / weight.clone()).collect();
            Some(EmpiricalModel::from_rational_vector(scn.clone(), &nv)?)
        } else {
            None
        };
        let strongly_contextual = if cf > DECOMPOSITION_DELTA {
            let rest = one - weight;
            let sv: Vec<BigRational> = v
                .iter()
                .zip(&mb)
                .map(|(a, x)| (a.clone() - x.clone()) / rest.clone())
                .collect();
            Some(EmpiricalModel::from_rational_vector(scn.clone(), &sv)?)
        } else {
            None
        };
        return Ok(Decomposition {
            ncf,
            noncontextual,
            strongly_contextual,
            degenerate,
        });
    }

    let v = e.to_vector();
    let mut mb = vec![0.0; inc.rows()];
    for (&g, &x) in fr.b_star.iter() {
        for &r in inc.column(g) {
            mb[r as usize] += x;
        }
    }
    let weight = fr.b_star.weight();
    let tolerance = |w: f64| (1e-9 / w).max(crate::empirical::EPS_QUANTUM);
    let noncontextual = if ncf > DECOMPOSITION_DELTA {
        let nv: Vec<f64> = mb.iter().map(|x| x / weight).collect();
        Some(EmpiricalModel::from_vector(
            scn.clone(),
            &nv,
            tolerance(weight),
        )?)
    } else {
        None
    };
    let strongly_contextual = if cf > DECOMPOSITION_DELTA {
        let rest = 1.0 - weight;
        let sv: Vec<f64> = v.iter().zip(&mb).map(|(a, x)| (a - x) / rest).collect();
        Some(EmpiricalModel::from_vector(
            scn.clone(),
            &sv,
            tolerance(rest),
        )?)
    } else {
        None
    };
    Ok(Decomposition {
        ncf,
        noncontextual,
        strongly_contextual,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessReport {
    /// `a . v^{e_NC}`; zero at a tight witness.
    pub noncontextual_value: f64,
    /// `a . v^{e_SC}`; one at a tight witness.
    pub strongly_contextual_value: f64,
    pub holds: bool,
}

/// Checks that the non-contextual part saturates the witness and the strongly
/// contextual part attains its algebraic bound.
pub fn check_tightness(ineq: &BellInequality, dec: &Decomposition) -> Result<TightnessReport> {
    let (Some(nc), Some(sc)) = (&dec.noncontextual, &dec.strongly_contextual) else {
        return Err(Error::PreconditionViolated(format!(
            "tightness needs 0 < cf < 1, got ncf = {}",
            dec.ncf
        )));
    };
    let noncontextual_value = ineq.evaluate(nc)?;
    let strongly_contextual_value = ineq.evaluate(sc)?;
    Ok(TightnessReport {
        noncontextual_value,
        strongly_contextual_value,
        holds: noncontextual_value.abs() <= 1e-6 && (strongly_contextual_value - 1.0).abs() <= 1e-6,
    })
}
