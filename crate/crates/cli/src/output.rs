use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfrac_core::format::model_to_json;
use cfrac_core::{EmpiricalModel, Error};
use serde_json::{json, Value};

const DECIMALS: i32 = 6;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::Usage(_) => "Usage",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_computational() => 2,
            _ => 1,
        }
    }

    /// Writes the error as one JSON line on stderr.
    pub fn report(self) -> ExitCode {
        let message = match &self {
            CliError::Core(e) => e.to_string(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
            CliError::Usage(m) => m.trim_end().to_string(),
        };
        eprintln!("{}", json!({ "error": self.kind(), "message": message }));
        ExitCode::from(self.code())
    }
}

/// Formats numbers for stdout.
pub struct Printer {
    full: bool,
}

impl Printer {
    pub fn new(full: bool) -> Self {
        Self { full }
    }

    pub fn round(&self, x: f64) -> f64 {
        if self.full || !x.is_finite() {
            return x;
        }
        let scale = 10f64.powi(DECIMALS);
        // `+ 0.0` turns a rounded -0.0 into 0.0.
        (x * scale).round() / scale + 0.0
    }

    pub fn num(&self, x: f64) -> Value {
        json!(self.round(x))
    }

    /// Rounds every float inside `v`, leaving integers alone.
    pub fn round_value(&self, v: Value) -> Value {
        match v {
            Value::Number(n) if n.is_f64() => n.as_f64().map_or(Value::Number(n), |x| self.num(x)),
            Value::Array(a) => Value::Array(a.into_iter().map(|x| self.round_value(x)).collect()),
            Value::Object(o) => Value::Object(
                o.into_iter()
                    .map(|(k, x)| (k, self.round_value(x)))
                    .collect(),
            ),
            other => other,
        }
    }

    pub fn fixed(&self, x: f64) -> String {
        if self.full {
            x.to_string()
        } else {
            format!("{:.*}", DECIMALS as usize, self.round(x))
        }
    }

    pub fn print(&self, v: &Value) {
        emit(&(serde_json::to_string_pretty(v).expect("serialisable") + "\n"));
    }
}

/// Writes to stdout; a reader that hung up early is not an error.
pub fn emit(text: &str) {
    let mut stdout = io::stdout().lock();
    if let Err(e) = stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        if e.kind() != io::ErrorKind::BrokenPipe {
            log::warn!("writing to stdout failed: {e}");
        }
    }
}

/// Model files keep full precision so they reload exactly.
pub fn write_model(path: Option<&Path>, e: &EmpiricalModel) -> Result<(), CliError> {
    let text = model_to_json(e);
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|err| CliError::io(p, err)),
        None => {
            emit(&(text + "\n"));
            Ok(())
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_integers_and_clears_negative_zero() {
        let p = Printer::new(false);
        assert_eq!(p.round(0.41421356), 0.414214);
        assert_eq!(p.round(-1e-12).to_string(), "0");
        let v = p.round_value(json!({"k": 3, "x": [0.1234567, 2.0]}));
        assert_eq!(v, json!({"k": 3, "x": [0.123457, 2.0]}));
        assert_eq!(p.fixed(std::f64::consts::FRAC_PI_8), "0.392699");
        assert_eq!(Printer::new(true).round(0.41421356), 0.41421356);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Usage("x".into()).code(), 1);
        assert_eq!(CliError::Core(Error::InvalidModel("x".into())).code(), 1);
        assert_eq!(CliError::Core(Error::PivotLimit(3)).code(), 2);
        let big = Error::SizeLimitExceeded {
            what: "x",
            size: 2,
            limit: 1,
        };
        assert_eq!(CliError::Core(big).code(), 2);
    }
}
