//! Linear programming over `f64` or exact rationals.

mod field;
mod simplex;

use num_rational::BigRational;

pub use field::{format_rational, parse_rational, Scalar};
pub use simplex::{solve, Direction, LinearProgram, LpSolution, Relation, SolverOptions, Status};

use crate::error::{Error, Result};

/// Arithmetic used for a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Float,
    Rational,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "float" | "f64" => Ok(Backend::Float),
            "rational" | "exact" => Ok(Backend::Rational),
            other => Err(Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

/// Converts a float program to exact rationals (every finite double is a
/// dyadic rational, so nothing is lost).
pub fn to_rational(lp: &LinearProgram<f64>) -> Result<LinearProgram<BigRational>> {
    let bad = std::cell::Cell::new(false);
    let out = lp.map(|v| {
        <BigRational as Scalar>::from_f64(*v).unwrap_or_else(|| {
            bad.set(true);
            BigRational::from_integer(0.into())
        })
    });
    if bad.get() {
        return Err(Error::MalformedProgram("non-finite coefficient".into()));
    }
    Ok(out)
}

/// Solves a float-specified program with the chosen backend and reports the
/// result in `f64`.
pub fn solve_with(
    lp: &LinearProgram<f64>,
    backend: Backend,
    opts: &SolverOptions,
) -> Result<LpSolution<f64>> {
    match backend {
        Backend::Float => solve(lp, opts),
        Backend::Rational => {
            let sol = solve(&to_rational(lp)?, opts)?;
            Ok(solution_to_f64(&sol))
        }
    }
}

pub fn solution_to_f64<T: Scalar>(sol: &LpSolution<T>) -> LpSolution<f64> {
    LpSolution {
        status: sol.status,
        value: sol.value.as_ref().map(Scalar::to_f64),
        x: sol.x.iter().map(Scalar::to_f64).collect(),
        duals: sol.duals.iter().map(Scalar::to_f64).collect(),
        basis: sol.basis.clone(),
        pivots: sol.pivots,
    }
}

/// Result of comparing the optimal values of a primal/dual pair.
#[derive(Clone, Debug, PartialEq)]
pub struct DualityReport<T> {
    pub primal_value: T,
    pub dual_value: T,
    pub gap: T,
    /// Gap within `1e-7` (float) or exactly zero (exact scalars).
    pub holds: bool,
}

/// Solves both programs and compares their optimal values.
pub fn verify_duality<T: Scalar>(
    primal: &LinearProgram<T>,
    dual: &LinearProgram<T>,
    opts: &SolverOptions,
) -> Result<DualityReport<T>> {
    let p = solve(primal, opts)?;
    let d = solve(dual, opts)?;
    if !p.is_optimal() || !d.is_optimal() {
        return Err(Error::StatusMismatch {
            primal: p.status.name(),
            dual: d.status.name(),
        });
    }
    let (pv, dv) = (p.value.unwrap(), d.value.unwrap());
    let gap = (pv.clone() - dv.clone()).abs_val();
    let holds = if T::EXACT {
        gap.is_zero_tol(0.0)
    } else {
        !gap.is_pos(1e-7)
    };
    Ok(DualityReport {
        primal_value: pv,
        dual_value: dv,
        gap,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_pair_has_zero_gap() {
        // max x s.t. x <= 1  /  min y s.t. y >= 1
        let mut p = LinearProgram::new(Direction::Maximize, vec![1.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        let mut d = LinearProgram::new(Direction::Minimize, vec![1.0]);
        d.add_constraint(vec![1.0], Relation::Ge, 1.0);
        let rep = verify_duality(&p, &d, &SolverOptions::default()).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.gap, 0.0);
        let exact = verify_duality(
            &to_rational(&p).unwrap(),
            &to_rational(&d).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(exact.holds);
    }

    #[test]
    fn infeasible_side_is_a_status_mismatch() {
        let mut p = LinearProgram::new(Direction::Maximize, vec![1.0]);
        p.add_constraint(vec![1.0], Relation::Le, 1.0);
        let mut d = LinearProgram::new(Direction::Minimize, vec![1.0]);
        d.add_constraint(vec![1.0], Relation::Le, -1.0);
        assert!(matches!(
            verify_duality(&p, &d, &SolverOptions::default()),
            Err(Error::StatusMismatch { .. })
        ));
    }

    #[test]
    fn backends_agree() {
        let mut lp = LinearProgram::new(Direction::Maximize, vec![2.0, 3.0]);
        lp.add_constraint(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.add_constraint(vec![3.0, 1.0], Relation::Le, 6.0);
        let f = solve_with(&lp, Backend::Float, &SolverOptions::default()).unwrap();
        let r = solve_with(&lp, Backend::Rational, &SolverOptions::default()).unwrap();
        assert!((f.value.unwrap() - r.value.unwrap()).abs() < 1e-12);
        assert_eq!("rational".parse::<Backend>().unwrap(), Backend::Rational);
    }
}
