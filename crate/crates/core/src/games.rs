//! Constraint-system games and the strategies that play them.
//!
//! Each formula is kept as the set of its satisfying assignments. Formula
//! variables are stored in increasing variable order, and assignments are
//! mixed-radix indices with the first variable most significant. This
//! matches the local-assignment order of the induced scenario.

use rayon::prelude::*;

use crate::bell::BellInequality;
use crate::empirical::{marginalize, EmpiricalModel, EPS_QUANTUM};
use crate::error::{checked_pow, Error, Result, SizeLimit};
use crate::fraction::{noncontextual_fraction, FractionOptions};
use crate::scenario::{decode_mixed, encode_mixed, MeasurementScenario};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    vars: Vec<usize>,
    satisfying: Vec<bool>,
}

impl Formula {
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    /// Indicator over assignments to `vars`.
    pub fn satisfying(&self) -> &[bool] {
        &self.satisfying
    }

    pub fn is_satisfied(&self, local: usize) -> bool {
        self.satisfying[local]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    variables: Vec<String>,
    domain: Vec<String>,
    formulae: Vec<Formula>,
}

impl ConstraintSystem {
    /// `formulae` lists each formula's variables (by name) with its satisfying
    /// assignments, given as domain indices in the listed variable order.
    pub fn new(
        variables: Vec<String>,
        domain: Vec<String>,
        formulae: Vec<(Vec<String>, Vec<Vec<usize>>)>,
    ) -> Result<Self> {
        if variables.is_empty() || domain.is_empty() {
            return Err(Error::InvalidScenario(
                "constraint system needs variables and a domain".into(),
            ));
        }
        if formulae.is_empty() {
            return Err(Error::InvalidScenario(
                "constraint system has no formulae".into(),
            ));
        }
        let d = domain.len();
        let mut out = Vec::with_capacity(formulae.len());
        for (fi, (names, sats)) in formulae.into_iter().enumerate() {
            if names.is_empty() {
                return Err(Error::InvalidScenario(format!(
                    "formula {fi} mentions no variable"
                )));
            }
            let idx: Vec<usize> = names
                .iter()
                .map(|n| {
                    variables.iter().position(|v| v == n).ok_or_else(|| {
                        Error::InvalidScenario(format!("formula {fi}: unknown variable {n:?}"))
                    })
                })
                .collect::<Result<_>>()?;
            let mut order: Vec<usize> = (0..idx.len()).collect();
            order.sort_by_key(|&i| idx[i]);
            let vars: Vec<usize> = order.iter().map(|&i| idx[i]).collect();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidScenario(format!(
                    "formula {fi} repeats a variable"
                )));
            }
            let size = checked_pow(d, vars.len());
            if size > 1 << 20 {
                return Err(Error::SizeLimitExceeded {
                    what: "formula assignments",
                    size,
                    limit: 1 << 20,
                });
            }
            let mut satisfying = vec![false; size as usize];
            for s in sats {
                if s.len() != vars.len() || s.iter().any(|&o| o >= d) {
                    return Err(Error::InvalidScenario(format!(
                        "formula {fi}: bad satisfying assignment {s:?}"
                    )));
                }
                let sorted: Vec<usize> = order.iter().map(|&i| s[i]).collect();
                satisfying[encode_mixed(&sorted, d)] = true;
            }
            out.push(Formula { vars, satisfying });
        }
        Ok(Self {
            variables,
            domain,
            formulae: out,
        })
    }

    /// Binary system from parity constraints such as `"a1+b1=0"`.
    pub fn from_xor<S: AsRef<str>>(variables: &[S], constraints: &[S]) -> Result<Self> {
        let variables: Vec<String> = variables.iter().map(|v| v.as_ref().to_owned()).collect();
        let formulae = constraints
            .iter()
            .map(|c| parse_xor(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(variables, vec!["0".into(), "1".into()], formulae)
    }

    /// The CHSH game: three parities even, the last odd.
    pub fn chsh_game() -> Self {
        Self::from_xor(
            &["a1", "a2", "b1", "b2"],
            &["a1+b1=0", "a1+b2=0", "a2+b1=0", "a2+b2=1"],
        )
        .expect("valid")
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn formulae(&self) -> &[Formula] {
        &self.formulae
    }

    pub fn num_formulae(&self) -> usize {
        self.formulae.len()
    }

    /// Induced scenario and, for each formula, the context covering it.
    /// Contexts are the maximal distinct variable sets, in order of first
    /// appearance.
    pub fn to_scenario(&self) -> Result<(MeasurementScenario, Vec<usize>)> {
        let mut sets: Vec<&[usize]> = Vec::new();
        for f in &self.formulae {
            if !sets.contains(&f.vars.as_slice()) {
                sets.push(&f.vars);
            }
        }
        let subset = |a: &[usize], b: &[usize]| a.iter().all(|x| b.contains(x));
        let maximal: Vec<Vec<usize>> = sets
            .iter()
            .filter(|s| !sets.iter().any(|t| t.len() > s.len() && subset(s, t)))
            .map(|s| s.to_vec())
            .collect();
        // Variables in no formula still need a home.
        let mut contexts = maximal;
        for v in 0..self.variables.len() {
            if !contexts.iter().any(|c| c.contains(&v)) {
                contexts.push(vec![v]);
            }
        }
        let cover = self
            .formulae
            .iter()
            .map(|f| {
                contexts
                    .iter()
                    .position(|c| subset(&f.vars, c))
                    .expect("maximal cover")
            })
            .collect();
        let scn = MeasurementScenario::from_indices(
            self.variables.clone(),
            self.domain.clone(),
            contexts,
        )?;
        Ok((scn, cover))
    }

    /// Largest number of formulae satisfied by one global assignment.
    pub fn k_consistency(&self, limit: SizeLimit) -> Result<usize> {
        let d = self.domain.len();
        let total = checked_pow(d, self.variables.len());
        limit.check_assignments("global assignments", total)?;
        let nv = self.variables.len();
        let count = |g: usize| {
            let vals = decode_mixed(g, d, nv);
            self.formulae
                .iter()
                .filter(|f| {
                    let s: Vec<usize> = f.vars.iter().map(|&v| vals[v]).collect();
                    f.satisfying[encode_mixed(&s, d)]
                })
                .count()
        };
        let n = total as usize;
        Ok(if n >= 4096 {
            (0..n).into_par_iter().map(count).max().unwrap_or(0)
        } else {
            (0..n).map(count).max().unwrap_or(0)
        })
    }

    /// `sum_phi sum_{s |= phi} p_phi(s) <= k` on the induced scenario, with
    /// coefficients of formulae sharing a context added together.
    pub fn bell_inequality(&self, k: usize) -> Result<BellInequality> {
        let (scn, cover) = self.to_scenario()?;
        let d = self.domain.len();
        let offsets = scn.context_offsets();
        let mut coeffs = vec![0.0; scn.num_local_assignments()];
        for (f, &c) in self.formulae.iter().zip(&cover) {
            let ctx = scn.context(c);
            let pos: Vec<usize> = f
                .vars
                .iter()
                .map(|v| ctx.iter().position(|x| x == v).expect("covered"))
                .collect();
            for idx in 0..scn.context_size(c) {
                let t = scn.local_outcomes(c, idx);
                let s: Vec<usize> = pos.iter().map(|&i| t[i]).collect();
                if f.satisfying[encode_mixed(&s, d)] {
                    coeffs[offsets[c] + idx] += 1.0;
                }
            }
        }
        BellInequality::new(scn, coeffs, k as f64)
    }
}

fn parse_xor(s: &str) -> Result<(Vec<String>, Vec<Vec<usize>>)> {
    let bad = || {
        Error::Parse(format!(
            "expected a parity constraint like `x+y=1`, got `{s}`"
        ))
    };
    let (lhs, rhs) = s.split_once('=').ok_or_else(bad)?;
    let c: usize = match rhs.trim() {
        "0" => 0,
        "1" => 1,
        _ => return Err(bad()),
    };
    let vars: Vec<String> = lhs.split('+').map(|v| v.trim().to_owned()).collect();
    if vars.iter().any(|v| v.is_empty()) {
        return Err(bad());
    }
    let n = vars.len();
    let sats = (0..1usize << n)
        .map(|x| decode_mixed(x, 2, n))
        .filter(|bits| bits.iter().sum::<usize>() % 2 == c)
        .collect();
    Ok((vars, sats))
}

/// One distribution per formula, over assignments to its variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    tables: Vec<Vec<f64>>,
}

impl Strategy {
    /// Checks shapes, normalisation and pairwise marginal agreement.
    pub fn new(cs: &ConstraintSystem, tables: Vec<Vec<f64>>, eps: f64) -> Result<Self> {
        if tables.len() != cs.num_formulae() {
            return Err(Error::InvalidModel(format!(
                "{} tables for {} formulae",
                tables.len(),
                cs.num_formulae()
            )));
        }
        let d = cs.domain.len();
        for (i, (t, f)) in tables.iter().zip(&cs.formulae).enumerate() {
            if t.len() != f.satisfying.len() {
                return Err(Error::InvalidModel(format!(
                    "formula {i}: table has {} entries, expected {}",
                    t.len(),
                    f.satisfying.len()
                )));
            }
            let sum: f64 = t.iter().sum();
            if t.iter().any(|&p| p.is_nan() || p < -eps) || (sum - 1.0).abs() > eps {
                return Err(Error::InvalidModel(format!(
                    "formula {i}: not a probability distribution"
                )));
            }
        }
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..tables.len() {
            for j in (i + 1)..tables.len() {
                let (fi, fj) = (&cs.formulae[i], &cs.formulae[j]);
                let shared: Vec<usize> = fi
                    .vars
                    .iter()
                    .copied()
                    .filter(|v| fj.vars.contains(v))
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                let mi = marginalize(&fi.vars, &tables[i], d, &shared)?;
                let mj = marginalize(&fj.vars, &tables[j], d, &shared)?;
                let gap = mi
                    .iter()
                    .zip(&mj)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if gap > eps && worst.is_none_or(|w| gap > w.2) {
                    worst = Some((i, j, gap));
                }
            }
        }
        if let Some((first, second, violation)) = worst {
            return Err(Error::InvalidStrategy {
                first,
                second,
                violation,
            });
        }
        Ok(Self { tables })
    }

    /// Reads each formula's distribution off a model on the induced scenario.
    pub fn from_model(cs: &ConstraintSystem, e: &EmpiricalModel) -> Result<Self> {
        let (scn, cover) = cs.to_scenario()?;
        if e.scenario() != &scn {
            return Err(Error::ScenarioMismatch);
        }
        let d = cs.domain.len();
        let tables = cs
            .formulae
            .iter()
            .zip(&cover)
            .map(|(f, &c)| marginalize(scn.context(c), e.table(c), d, &f.vars))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cs, tables, EPS_QUANTUM)
    }

    /// Answers drawn from one fixed global assignment.
    pub fn deterministic(cs: &ConstraintSystem, values: &[usize]) -> Result<Self> {
        let d = cs.domain.len();
        if values.len() != cs.variables.len() || values.iter().any(|&v| v >= d) {
            return Err(Error::DomainMismatch(format!(
                "assignment {values:?} does not fit the system"
            )));
        }
        let tables = cs
            .formulae
            .iter()
            .map(|f| {
                let mut t = vec![0.0; f.satisfying.len()];
                let s: Vec<usize> = f.vars.iter().map(|&v| values[v]).collect();
                t[encode_mixed(&s, d)] = 1.0;
                t
            })
            .collect();
        Ok(Self { tables })
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// The strategy as a model on the induced scenario.
    pub fn to_model(&self, cs: &ConstraintSystem) -> Result<EmpiricalModel> {
        let (scn, _) = cs.to_scenario()?;
        let d = cs.domain.len();
        let tables = scn
            .contexts()
            .iter()
            .map(|ctx| {
                if let Some(i) = cs.formulae.iter().position(|f| &f.vars == ctx) {
                    Ok(self.tables[i].clone())
                } else {
                    // A lone variable outside every formula: uniform answers.
                    Ok(vec![
                        1.0 / checked_pow(d, ctx.len()) as f64;
                        checked_pow(d, ctx.len()) as usize
                    ])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        EmpiricalModel::with_tolerance(scn, tables, EPS_QUANTUM)
    }
}

/// Average probability that the answer satisfies the asked formula.
pub fn success_probability(cs: &ConstraintSystem, strategy: &Strategy) -> Result<f64> {
    if strategy.tables.len() != cs.num_formulae() {
        return Err(Error::InvalidModel(
            "strategy does not match the system".into(),
        ));
    }
    let total: f64 = cs
        .formulae
        .iter()
        .zip(&strategy.tables)
        .map(|(f, t)| {
            t.iter()
                .zip(&f.satisfying)
                .filter(|(_, &s)| s)
                .map(|(p, _)| p)
                .sum::<f64>()
        })
        .sum();
    Ok(total / cs.num_formulae() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameBoundReport {
    pub n: usize,
    pub k: usize,
    pub success: f64,
    pub failure: f64,
    pub ncf: f64,
    /// `(n - k) / n`.
    pub hardness: f64,
    /// `failure - ncf * hardness`; nonnegative when the bound holds.
    pub slack: f64,
    pub holds: bool,
}

/// Compares the failure probability with `NCF * (n - k) / n`.
pub fn check_failure_bound(
    cs: &ConstraintSystem,
    strategy: &Strategy,
    opts: &FractionOptions,
) -> Result<GameBoundReport> {
    let n = cs.num_formulae();
    let k = cs.k_consistency(opts.limit)?;
    let success = success_probability(cs, strategy)?;
    let ncf = noncontextual_fraction(&strategy.to_model(cs)?, opts)?.ncf;
    let failure = 1.0 - success;
    let hardness = (n - k) as f64 / n as f64;
    let slack = failure - ncf * hardness;
    Ok(GameBoundReport {
        n,
        k,
        success,
        failure,
        ncf,
        hardness,
        slack,
        holds: slack >= -1e-6,
    })
}
