//! Named models usable without fixture files.

use num_rational::BigRational;

use crate::empirical::EmpiricalModel;
use crate::error::{Error, Result};
use crate::lp::Scalar;
use crate::scenario::MeasurementScenario;

pub const BUILTIN_IDS: [&str; 4] = ["pr-box", "chsh", "ghz3-mermin", "uniform-n2"];

fn q(n: i64, d: i64) -> BigRational {
    <BigRational as Scalar>::from_ratio(n, d)
}

fn exact(scn: MeasurementScenario, tables: Vec<Vec<BigRational>>) -> EmpiricalModel {
    EmpiricalModel::from_rational(scn, tables).expect("builtin tables are valid")
}

fn correlated(same: BigRational, diff: BigRational) -> Vec<BigRational> {
    vec![same.clone(), diff.clone(), diff, same]
}

/// The Popescu-Rohrlich box: `a xor b = x and y` with probability one.
pub fn pr_box() -> EmpiricalModel {
    let scn = MeasurementScenario::bell(2, 2, 2).expect("valid");
    let corr = correlated(q(1, 2), q(0, 1));
    let anti = correlated(q(0, 1), q(1, 2));
    exact(scn, vec![corr.clone(), corr.clone(), corr, anti])
}

/// The Bell-state model at equatorial angles 0 and pi/3 for both parties.
pub fn chsh() -> EmpiricalModel {
    let scn = MeasurementScenario::bell(2, 2, 2).expect("valid");
    exact(
        scn,
        vec![
            correlated(q(1, 2), q(0, 1)),
            correlated(q(3, 8), q(1, 8)),
            correlated(q(3, 8), q(1, 8)),
            correlated(q(1, 8), q(3, 8)),
        ],
    )
}

/// The GHZ state measured with X (setting 1) and Y (setting 2) on three qubits.
pub fn ghz3_mermin() -> EmpiricalModel {
    let scn = MeasurementScenario::bell(3, 2, 2).expect("valid");
    let tables = (0..8usize)
        .map(|ctx| {
            let ys = ctx.count_ones();
            (0..8usize)
                .map(|s| {
                    let odd = s.count_ones() % 2 == 1;
                    match ys {
                        1 | 3 => q(1, 8),
                        0 => q(if odd { 0 } else { 1 }, 4),
                        _ => q(if odd { 1 } else { 0 }, 4),
                    }
                })
                .collect()
        })
        .collect();
    exact(scn, tables)
}

/// Uniformly random outcomes on the (2,2,2) scenario.
pub fn uniform_n2() -> EmpiricalModel {
    let scn = MeasurementScenario::bell(2, 2, 2).expect("valid");
    exact(scn, vec![vec![q(1, 4); 4]; 4])
}

pub fn by_name(id: &str) -> Result<EmpiricalModel> {
    match id {
        "pr-box" => Ok(pr_box()),
        "chsh" => Ok(chsh()),
        "ghz3-mermin" => Ok(ghz3_mermin()),
        "uniform-n2" => Ok(uniform_n2()),
        other => Err(Error::Parse(format!("unknown builtin model `{other}`"))),
    }
}
