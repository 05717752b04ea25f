use std::ffi::OsString;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfrac_core::builtins;
use cfrac_core::format::{
    game_from_json, inequality_from_json, inequality_report, model_from_json, model_to_value,
    raw_model_from_json, raw_model_from_value, InequalityReport, MbqcFile, RawModel,
};
use cfrac_core::fraction::{decompose, noncontextual_fraction, witnessing_inequality};
use cfrac_core::games::{check_failure_bound as game_bound, ConstraintSystem, Strategy};
use cfrac_core::lp::{format_rational, Scalar};
use cfrac_core::mbqc::{check_failure_bound as mbqc_bound, BooleanFunction};
use cfrac_core::morphisms::{choice, product};
use cfrac_core::quantum::{born_model, sweep, uniform_settings, PureState};
use cfrac_core::{mix, BellInequality, EmpiricalModel, Error};
use serde_json::{json, Value};

use crate::angles::parse_angles;
use crate::output::{emit, read, write_model, CliError, Printer};
use crate::{ComposeOp, GlobalArgs};

/// Where a model argument points: a file (relative to `base`) or a builtin.
enum Source {
    File(PathBuf),
    Builtin(EmpiricalModel),
}

fn resolve(arg: &str, base: Option<&Path>) -> Result<Source, CliError> {
    let path = base.map_or_else(|| PathBuf::from(arg), |b| b.join(arg));
    if path.exists() {
        return Ok(Source::File(path));
    }
    match builtins::by_name(arg) {
        Ok(e) => Ok(Source::Builtin(e)),
        Err(_) => Err(CliError::io(
            &path,
            io::Error::new(io::ErrorKind::NotFound, "no such file or builtin model"),
        )),
    }
}

fn load_model_from(arg: &str, base: Option<&Path>, eps: f64) -> Result<EmpiricalModel, CliError> {
    match resolve(arg, base)? {
        Source::File(p) => {
            log::info!("reading model {}", p.display());
            Ok(model_from_json(&read(&p)?, eps)?)
        }
        Source::Builtin(e) => Ok(e),
    }
}

fn load_model(arg: &str, eps: f64) -> Result<EmpiricalModel, CliError> {
    load_model_from(arg, None, eps)
}

fn load_raw(arg: &str) -> Result<RawModel, CliError> {
    Ok(match resolve(arg, None)? {
        Source::File(p) => raw_model_from_json(&read(&p)?)?,
        Source::Builtin(e) => raw_model_from_value(model_to_value(&e))?,
    })
}

pub fn cmd_check(g: &GlobalArgs, out: &Printer, arg: &str) -> Result<ExitCode, CliError> {
    let raw = load_raw(arg)?;
    // Exact models are held to exact equalities.
    let eps = if raw.exact.is_some() { 0.0 } else { g.eps };
    let check = raw.check(eps);
    let scn = &raw.scenario;
    out.print(&json!({
        "valid": check.passes,
        "exact": raw.exact.is_some(),
        "measurements": scn.num_measurements(),
        "outcomes": scn.num_outcomes(),
        "contexts": scn.num_contexts(),
        "global_assignments": scn.num_global_assignments().to_string(),
        "min_entry": out.num(check.min_entry),
        "normalisation_error": out.num(check.normalisation_error),
        "no_signalling": check.no_signalling.passes,
        "max_signalling_violation": out.num(check.no_signalling.max_violation),
        "problem": check.problem,
    }));
    Ok(if check.passes {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn cmd_fraction(g: &GlobalArgs, out: &Printer, arg: &str) -> Result<ExitCode, CliError> {
    let e = load_model(arg, g.eps)?;
    let r = noncontextual_fraction(&e, &g.fraction_options())?;
    let mut v = json!({ "ncf": out.num(r.ncf), "cf": out.num(r.cf) });
    if let Some(q) = &r.exact_ncf {
        v["ncf_exact"] = json!(format_rational(q));
        v["cf_exact"] = json!(format_rational(&complement(q)));
    }
    out.print(&v);
    Ok(ExitCode::SUCCESS)
}

fn complement<T: Scalar>(q: &T) -> T {
    T::one() - q.clone()
}

pub fn cmd_bell(
    g: &GlobalArgs,
    out: &Printer,
    arg: &str,
    inequality: Option<&str>,
) -> Result<ExitCode, CliError> {
    let e = load_model(arg, g.eps)?;
    let v = match inequality {
        Some(source) => {
            let ineq = if source == "chsh" {
                BellInequality::chsh()
            } else {
                let path = Path::new(source);
                inequality_from_json(&read(path)?)?
            };
            let value = ineq.evaluate(&e)?;
            let normalized = match ineq.normalized_violation(&e) {
                Ok(x) => Some(x),
                Err(Error::TrivialInequality { .. }) => None,
                Err(err) => return Err(err.into()),
            };
            json!({
                "value": out.num(value),
                "bound": out.num(ineq.bound()),
                "algebraic_bound": out.num(ineq.algebraic_bound()),
                "normalized_violation": normalized.map(|x| out.num(x)),
                "violated": value > ineq.bound() + g.eps,
            })
        }
        None => {
            let w = witnessing_inequality(&e, &g.fraction_options())?;
            let report = InequalityReport {
                value: w.value,
                normalized_violation: w.normalized_violation(&e)?,
                trivial_witness: w.trivial,
            };
            out.round_value(inequality_report(&w.inequality, report))
        }
    };
    out.print(&v);
    Ok(ExitCode::SUCCESS)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_decompose(g: &GlobalArgs, out: &Printer, arg: &str) -> Result<ExitCode, CliError> {
    let e = load_model(arg, g.eps)?;
    let r = noncontextual_fraction(&e, &g.fraction_options())?;
    let dec = decompose(&e, &r, g.limit())?;
    let prefix = g
        .out
        .clone()
        .unwrap_or_else(|| Path::new(arg).with_extension(""));
    let written = |part: &Option<EmpiricalModel>, suffix: &str| -> Result<Value, CliError> {
        let Some(m) = part else {
            return Ok(Value::Null);
        };
        let path = with_suffix(&prefix, suffix);
        write_model(Some(&path), m)?;
        Ok(json!(path.display().to_string()))
    };
    let nc = written(&dec.noncontextual, ".nc.json")?;
    let sc = written(&dec.strongly_contextual, ".sc.json")?;
    out.print(&json!({
        "ncf": out.num(dec.ncf),
        "cf": out.num(1.0 - dec.ncf),
        "degenerate": dec.degenerate,
        "recombination_error": out.num(dec.recombination_error(&e)),
        "noncontextual": nc,
        "strongly_contextual": sc,
    }));
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_compose(
    g: &GlobalArgs,
    op: ComposeOp,
    a: &str,
    b: &str,
    lambda: Option<f64>,
) -> Result<ExitCode, CliError> {
    let (e1, e2) = (load_model(a, g.eps)?, load_model(b, g.eps)?);
    let composed = match (op, lambda) {
        (ComposeOp::Mix, Some(l)) if (0.0..=1.0).contains(&l) => mix(&e1, &e2, l)?,
        (ComposeOp::Mix, _) => return Err(CliError::Usage("mix needs --lambda in [0, 1]".into())),
        (_, Some(_)) => return Err(CliError::Usage("--lambda only applies to mix".into())),
        (ComposeOp::Choice, None) => choice(&e1, &e2)?,
        (ComposeOp::Product, None) => product(&e1, &e2, g.limit())?,
    };
    write_model(g.out.as_deref(), &composed)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_quantum_model(g: &GlobalArgs, state: &str, angles: &str) -> Result<ExitCode, CliError> {
    let psi = PureState::from_selector(state)?;
    let n = psi.qubits();
    let a = parse_angles(angles).map_err(CliError::Usage)?;
    let settings = match a.len() {
        2 => uniform_settings(n, a[0], a[1]),
        k if k == 2 * n => a.chunks(2).map(|c| [c[0], c[1]]).collect(),
        k => {
            return Err(CliError::Usage(format!(
                "{k} angles given; need 2 or {}",
                2 * n
            )))
        }
    };
    write_model(g.out.as_deref(), &born_model(&psi, &settings)?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_quantum_sweep(
    g: &GlobalArgs,
    out: &Printer,
    state: &str,
    grid: usize,
) -> Result<ExitCode, CliError> {
    let psi = PureState::from_selector(state)?;
    let points = sweep(&psi, grid, &g.fraction_options())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let rows = std::iter::once(["phi1".to_string(), "phi2".into(), "cf".into()]).chain(
        points
            .iter()
            .map(|p| [out.fixed(p.phi1), out.fixed(p.phi2), out.fixed(p.cf)]),
    );
    for row in rows {
        w.write_record(&row)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv of ascii fields");
    match &g.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e))?,
        None => emit(&text),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn cmd_mbqc(
    g: &GlobalArgs,
    out: &Printer,
    file_path: &Path,
    function: &str,
    homogeneous: bool,
) -> Result<ExitCode, CliError> {
    let desc = MbqcFile::from_json(&read(file_path)?)?;
    let base = file_path.parent().filter(|p| !p.as_os_str().is_empty());
    let resource = load_model_from(&desc.resource, base, g.eps)?;
    let f = BooleanFunction::from_hex(desc.m, desc.l, function)?;
    let k = desc.build(resource)?;
    let r = mbqc_bound(&k, &f, &g.fraction_options(), homogeneous)?;
    out.print(&json!({
        "function": f.to_hex(),
        "p_success": out.num(r.success),
        "p_failure": out.num(r.failure),
        "nu_tilde": out.num(r.nu_tilde),
        "ncf": out.num(r.ncf),
        "slack": out.num(r.slack),
        "holds": r.holds,
    }));
    Ok(ExitCode::SUCCESS)
}

fn load_game(path: &Path) -> Result<ConstraintSystem, CliError> {
    Ok(game_from_json(&read(path)?)?)
}

pub fn cmd_game(
    g: &GlobalArgs,
    out: &Printer,
    game: &Path,
    strategy: &str,
) -> Result<ExitCode, CliError> {
    let cs = load_game(game)?;
    let e = load_model(strategy, g.eps)?;
    let s = Strategy::from_model(&cs, &e)?;
    let r = game_bound(&cs, &s, &g.fraction_options())?;
    out.print(&json!({
        "n": r.n,
        "k": r.k,
        "p_success": out.num(r.success),
        "p_failure": out.num(r.failure),
        "ncf": out.num(r.ncf),
        "hardness": out.num(r.hardness),
        "slack": out.num(r.slack),
        "holds": r.holds,
    }));
    Ok(ExitCode::SUCCESS)
}
