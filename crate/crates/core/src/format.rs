//! JSON file formats for models, inequalities, MBQC descriptions and games.
//!
//! Probabilities are JSON numbers or `"p/q"` strings. A model with at least
//! one string entry is read exactly, converting plain numbers from their
//! decimal text. Assignment keys join outcome labels with `,` in the order
//! the context lists its measurements.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bell::BellInequality;
use crate::empirical::{EmpiricalModel, NoSignallingReport};
use crate::error::{Error, Result};
use crate::games::ConstraintSystem;
use crate::lp::{format_rational, parse_rational, Scalar};
use crate::mbqc::{BitMatrix, L2Mbqc};
use crate::scenario::MeasurementScenario;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    measurements: Vec<String>,
    outcomes: Vec<String>,
    contexts: Vec<Vec<String>>,
    tables: Vec<TableJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    context: usize,
    probs: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InequalityJson {
    measurements: Vec<String>,
    outcomes: Vec<String>,
    contexts: Vec<Vec<String>>,
    bound: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<CoeffJson>,
    /// Correlation-form terms, expanded on input.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    correlators: Vec<CorrelatorJson>,
    /// Informational on output; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    algebraic_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalized_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trivial_witness: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffJson {
    context: usize,
    assignment: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrelatorJson {
    context: usize,
    weight: f64,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Whether a probability entry is written as text.
fn is_text(v: &Value) -> Result<bool> {
    match v {
        Value::Number(n) if n.as_f64().is_some_and(f64::is_finite) => Ok(false),
        Value::String(_) => Ok(true),
        other => Err(Error::Parse(format!(
            "expected a number or \"p/q\" string, got {other}"
        ))),
    }
}

fn to_rational(v: &Value) -> Result<BigRational> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => unreachable!("checked by is_text"),
    };
    match parse_rational(&text) {
        Some(q) => Ok(q),
        // Exponent notation: take the binary value.
        None => match v {
            Value::Number(n) => n
                .as_f64()
                .and_then(<BigRational as Scalar>::from_f64)
                .ok_or_else(|| Error::Parse(format!("`{text}` is not a finite number"))),
            _ => Err(Error::Parse(format!("`{text}` is not a rational number"))),
        },
    }
}

/// Scenario plus, for each declared context, the position of each sorted
/// member in the declared order.
fn build_scenario(
    measurements: &[String],
    outcomes: &[String],
    contexts: &[Vec<String>],
) -> Result<(MeasurementScenario, Vec<Vec<usize>>)> {
    if let Some(o) = outcomes.iter().find(|o| o.contains(',')) {
        return Err(Error::Parse(format!(
            "outcome label {o:?} contains a comma"
        )));
    }
    let scn = MeasurementScenario::new(measurements, outcomes, contexts)?;
    let perms = contexts
        .iter()
        .enumerate()
        .map(|(c, declared)| {
            scn.context(c)
                .iter()
                .map(|&m| {
                    declared
                        .iter()
                        .position(|l| *l == measurements[m])
                        .expect("member")
                })
                .collect()
        })
        .collect();
    Ok((scn, perms))
}

/// Local index of a key written in declared order.
fn key_index(scn: &MeasurementScenario, perm: &[usize], c: usize, key: &str) -> Result<usize> {
    let labels: Vec<&str> = key.split(',').map(str::trim).collect();
    if labels.len() != perm.len() {
        return Err(Error::Parse(format!(
            "key `{key}` has {} labels, context {c} has {}",
            labels.len(),
            perm.len()
        )));
    }
    let declared: Vec<usize> = labels
        .iter()
        .map(|l| {
            scn.outcome_index(l)
                .ok_or_else(|| Error::Parse(format!("unknown outcome `{l}` in key `{key}`")))
        })
        .collect::<Result<_>>()?;
    let sorted: Vec<usize> = perm.iter().map(|&p| declared[p]).collect();
    Ok(scn.local_index(&sorted))
}

/// A parsed model whose tables have not been validated yet.
#[derive(Clone, Debug, PartialEq)]
pub struct RawModel {
    pub scenario: MeasurementScenario,
    pub tables: Vec<Vec<f64>>,
    /// Present when any entry was written as a string.
    pub exact: Option<Vec<Vec<BigRational>>>,
}

/// Validation findings for a [`RawModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheck {
    pub min_entry: f64,
    /// Largest `|sum - 1|` over contexts.
    pub normalisation_error: f64,
    pub no_signalling: NoSignallingReport,
    /// Whether the model would be accepted at this tolerance.
    pub passes: bool,
    pub problem: Option<String>,
}

impl RawModel {
    pub fn validate(self, eps: f64) -> Result<EmpiricalModel> {
        match self.exact {
            Some(t) => EmpiricalModel::from_rational(self.scenario, t),
            None => EmpiricalModel::with_tolerance(self.scenario, self.tables, eps),
        }
    }

    pub fn check(&self, eps: f64) -> ModelCheck {
        let min_entry = self
            .tables
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let normalisation_error = self
            .tables
            .iter()
            .map(|t| (t.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let no_signalling =
            EmpiricalModel::new_unchecked(self.scenario.clone(), self.tables.clone())
                .check_no_signalling(eps);
        let problem = self.clone().validate(eps).err().map(|e| e.to_string());
        ModelCheck {
            min_entry,
            normalisation_error,
            no_signalling,
            passes: problem.is_none(),
            problem,
        }
    }
}

pub fn model_from_json(text: &str, eps: f64) -> Result<EmpiricalModel> {
    raw_model_from_json(text)?.validate(eps)
}

pub fn model_from_value(value: Value, eps: f64) -> Result<EmpiricalModel> {
    raw_model_from_value(value)?.validate(eps)
}

pub fn raw_model_from_json(text: &str) -> Result<RawModel> {
    let value: Value = serde_json::from_str(text).map_err(parse_err)?;
    raw_model_from_value(value)
}

/// Parses the schema and resolves keys, without checking probabilities.
pub fn raw_model_from_value(value: Value) -> Result<RawModel> {
    let raw: ModelJson = serde_json::from_value(value).map_err(parse_err)?;
    let (scn, perms) = build_scenario(&raw.measurements, &raw.outcomes, &raw.contexts)?;
    let mut seen = vec![false; scn.num_contexts()];
    let mut cells: Vec<Vec<Option<&Value>>> = (0..scn.num_contexts())
        .map(|c| vec![None; scn.context_size(c)])
        .collect();
    let mut exact = false;
    for t in &raw.tables {
        let c = t.context;
        if c >= scn.num_contexts() {
            return Err(Error::Parse(format!("table for unknown context {c}")));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::Parse(format!("context {c} has two tables")));
        }
        for (key, v) in &t.probs {
            exact |= is_text(v)?;
            cells[c][key_index(&scn, &perms[c], c, key)?] = Some(v);
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidModel(format!("context {c} has no table")));
    }
    let exact_tables = if exact {
        Some(
            cells
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| v.map_or_else(|| Ok(<BigRational as Scalar>::zero()), to_rational))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let tables = match &exact_tables {
        Some(t) => t
            .iter()
            .map(|row| row.iter().map(Scalar::to_f64).collect())
            .collect(),
        None => cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.and_then(Value::as_f64).unwrap_or(0.0))
                    .collect()
            })
            .collect(),
    };
    Ok(RawModel {
        scenario: scn,
        tables,
        exact: exact_tables,
    })
}

fn scenario_labels(scn: &MeasurementScenario) -> Vec<Vec<String>> {
    scn.contexts()
        .iter()
        .map(|c| c.iter().map(|&m| scn.measurements()[m].clone()).collect())
        .collect()
}

fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Exact models are written as `"p/q"` strings, others at full precision.
pub fn model_to_value(e: &EmpiricalModel) -> Value {
    let scn = e.scenario();
    let tables = (0..scn.num_contexts())
        .map(|c| {
            let probs = (0..scn.context_size(c))
                .map(|idx| {
                    let key = scn.assignment_key(&scn.local_outcomes(c, idx));
                    let v = match e.exact_tables() {
                        Some(ex) => Value::String(format_rational(&ex[c][idx])),
                        None => float_value(e.table(c)[idx]),
                    };
                    (key, v)
                })
                .collect();
            TableJson { context: c, probs }
        })
        .collect();
    serde_json::to_value(ModelJson {
        measurements: scn.measurements().to_vec(),
        outcomes: scn.outcomes().to_vec(),
        contexts: scenario_labels(scn),
        tables,
    })
    .expect("serialisable")
}

pub fn model_to_json(e: &EmpiricalModel) -> String {
    serde_json::to_string_pretty(&model_to_value(e)).expect("serialisable")
}

pub fn inequality_to_value(ineq: &BellInequality) -> Value {
    inequality_value(ineq, None)
}

/// How an inequality fares on some model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    pub value: f64,
    pub normalized_violation: f64,
    pub trivial_witness: bool,
}

/// Like [`inequality_to_value`], with the algebraic bound and `report`
/// alongside. These extra fields are ignored when read back.
pub fn inequality_report(ineq: &BellInequality, report: InequalityReport) -> Value {
    inequality_value(ineq, Some(report))
}

fn inequality_value(ineq: &BellInequality, report: Option<InequalityReport>) -> Value {
    let scn = ineq.scenario();
    let offsets = &scn.context_offsets();
    let coefficients = (0..scn.num_contexts())
        .flat_map(|c| {
            (0..scn.context_size(c)).map(move |idx| CoeffJson {
                context: c,
                assignment: scn.assignment_key(&scn.local_outcomes(c, idx)),
                value: ineq.coefficients()[offsets[c] + idx],
            })
        })
        .collect();
    serde_json::to_value(InequalityJson {
        measurements: scn.measurements().to_vec(),
        outcomes: scn.outcomes().to_vec(),
        contexts: scenario_labels(scn),
        bound: ineq.bound(),
        coefficients,
        correlators: Vec::new(),
        algebraic_bound: report.map(|_| ineq.algebraic_bound()),
        normalized_violation: report.map(|r| r.normalized_violation),
        value: report.map(|r| r.value),
        trivial_witness: report.map(|r| r.trivial_witness),
    })
    .expect("serialisable")
}

/// Reads local-assignment coefficients and correlator terms, summing both.
/// Missing coefficients are zero.
pub fn inequality_from_json(text: &str) -> Result<BellInequality> {
    let raw: InequalityJson = serde_json::from_str(text).map_err(parse_err)?;
    let (scn, perms) = build_scenario(&raw.measurements, &raw.outcomes, &raw.contexts)?;
    let offsets = scn.context_offsets();
    let unknown = |c: usize| Error::Parse(format!("coefficient for unknown context {c}"));
    let terms: Vec<(usize, f64)> = raw
        .correlators
        .iter()
        .map(|t| (t.context, t.weight))
        .collect();
    if let Some(&(c, _)) = terms.iter().find(|(c, _)| *c >= scn.num_contexts()) {
        return Err(unknown(c));
    }
    let mut coeffs = BellInequality::from_correlators(scn.clone(), &terms, raw.bound)?
        .coefficients()
        .to_vec();
    for entry in &raw.coefficients {
        let c = entry.context;
        if c >= scn.num_contexts() {
            return Err(unknown(c));
        }
        coeffs[offsets[c] + key_index(&scn, &perms[c], c, &entry.assignment)?] += entry.value;
    }
    BellInequality::new(scn, coeffs, raw.bound)
}

/// An MBQC description whose resource is still a file path or builtin id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbqcFile {
    pub m: usize,
    pub l: usize,
    pub n: usize,
    #[serde(rename = "Q")]
    pub q: BitMatrix,
    #[serde(rename = "T")]
    pub t: BitMatrix,
    #[serde(rename = "Z")]
    pub z: BitMatrix,
    pub resource: String,
}

impl MbqcFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_err)
    }

    pub fn build(&self, resource: EmpiricalModel) -> Result<L2Mbqc> {
        if self.q.len() != self.n {
            return Err(Error::WidthMismatch(format!(
                "Q has {} rows, n = {}",
                self.q.len(),
                self.n
            )));
        }
        L2Mbqc::new(
            self.m,
            self.l,
            self.q.clone(),
            self.t.clone(),
            self.z.clone(),
            resource,
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameJson {
    variables: Vec<String>,
    #[serde(default = "binary")]
    domain: Vec<String>,
    formulae: Vec<FormulaJson>,
}

fn binary() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FormulaJson {
    Table {
        vars: Vec<String>,
        satisfying: Vec<String>,
    },
    Xor {
        xor: String,
    },
}

/// Formulae are explicit tables or binary parity shorthand `{"xor": "x+y=1"}`.
pub fn game_from_json(text: &str) -> Result<ConstraintSystem> {
    let raw: GameJson = serde_json::from_str(text).map_err(parse_err)?;
    let mut formulae = Vec::with_capacity(raw.formulae.len());
    for f in raw.formulae {
        match f {
            FormulaJson::Table { vars, satisfying } => {
                let sats = satisfying
                    .iter()
                    .map(|key| {
                        key.split(',')
                            .map(|l| {
                                let l = l.trim();
                                raw.domain.iter().position(|d| d == l).ok_or_else(|| {
                                    Error::Parse(format!("unknown domain value `{l}`"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                formulae.push((vars, sats));
            }
            FormulaJson::Xor { xor } => {
                if raw.domain != binary() {
                    return Err(Error::Parse(
                        "parity shorthand needs the domain [\"0\", \"1\"]".into(),
                    ));
                }
                let sys = ConstraintSystem::from_xor(&raw.variables, &[xor])?;
                let f = &sys.formulae()[0];
                let vars = f.vars().iter().map(|&v| raw.variables[v].clone()).collect();
                let sats = (0..f.satisfying().len())
                    .filter(|&i| f.is_satisfied(i))
                    .map(|i| crate::scenario::decode_mixed(i, 2, f.vars().len()))
                    .collect();
                formulae.push((vars, sats));
            }
        }
    }
    ConstraintSystem::new(raw.variables, raw.domain, formulae)
}

pub fn game_to_value(cs: &ConstraintSystem) -> Value {
    let d = cs.domain().len();
    let formulae = cs
        .formulae()
        .iter()
        .map(|f| FormulaJson::Table {
            vars: f
                .vars()
                .iter()
                .map(|&v| cs.variables()[v].clone())
                .collect(),
            satisfying: (0..f.satisfying().len())
                .filter(|&i| f.is_satisfied(i))
                .map(|i| {
                    crate::scenario::decode_mixed(i, d, f.vars().len())
                        .iter()
                        .map(|&o| cs.domain()[o].as_str())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect(),
        })
        .collect();
    serde_json::to_value(GameJson {
        variables: cs.variables().to_vec(),
        domain: cs.domain().to_vec(),
        formulae,
    })
    .expect("serialisable")
}
