use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("size limit exceeded: {what} needs {size}, limit is {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid empirical model: {0}")]
    InvalidModel(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("models are defined on different scenarios")]
    ScenarioMismatch,

    #[error("outcome sets differ")]
    OutcomeMismatch,

    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),

    #[error("pivot limit of {0} reached")]
    PivotLimit(usize),

    #[error("linear program is {0}")]
    NotOptimal(&'static str),

    #[error("status mismatch: primal is {primal}, dual is {dual}")]
    StatusMismatch {
        primal: &'static str,
        dual: &'static str,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("trivial inequality: algebraic bound {norm} does not exceed bound {bound}")]
    TrivialInequality { norm: f64, bound: f64 },

    #[error("map does not preserve contexts: source context {0} has no covering target context")]
    NotContextPreserving(usize),

    #[error("resource model is not on the ({0},2,2) Bell scenario")]
    ResourceScenarioMismatch(usize),

    #[error("width mismatch: {0}")]
    WidthMismatch(String),

    #[error("invalid strategy: formulae {first} and {second} disagree on shared variables by {violation:.3e}")]
    InvalidStrategy {
        first: usize,
        second: usize,
        violation: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SizeLimitExceeded { .. } => "SizeLimitExceeded",
            Error::InvalidScenario(_) => "InvalidScenario",
            Error::InvalidModel(_) => "InvalidModel",
            Error::DomainMismatch(_) => "DomainMismatch",
            Error::ScenarioMismatch => "ScenarioMismatch",
            Error::OutcomeMismatch => "OutcomeMismatch",
            Error::MalformedProgram(_) => "MalformedProgram",
            Error::NumericalBreakdown(_) => "NumericalBreakdown",
            Error::PivotLimit(_) => "PivotLimit",
            Error::NotOptimal(_) => "NotOptimal",
            Error::StatusMismatch { .. } => "StatusMismatch",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::TrivialInequality { .. } => "TrivialInequality",
            Error::NotContextPreserving(_) => "NotContextPreserving",
            Error::ResourceScenarioMismatch(_) => "ResourceScenarioMismatch",
            Error::WidthMismatch(_) => "WidthMismatch",
            Error::InvalidStrategy { .. } => "InvalidStrategy",
            Error::Parse(_) => "Parse",
        }
    }

    /// Failures of the computation itself (size guards, solver trouble)
    /// rather than of the input.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            Error::SizeLimitExceeded { .. }
                | Error::NumericalBreakdown(_)
                | Error::PivotLimit(_)
                | Error::NotOptimal(_)
                | Error::StatusMismatch { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// Upper bounds on enumeration sizes.
///
/// Everything in this crate is dense; these guards keep accidental blow-ups
/// (products of large scenarios, many-qubit states) from exhausting memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeLimit {
    /// Maximum number of global assignments `|O|^|X|`.
    pub max_assignments: u128,
    /// Maximum number of incidence-matrix cells `m * n`.
    pub max_cells: u128,
}

impl Default for SizeLimit {
    fn default() -> Self {
        Self {
            max_assignments: 1 << 20,
            max_cells: 1 << 28,
        }
    }
}

impl SizeLimit {
    pub fn with_max_assignments(max_assignments: u128) -> Self {
        Self {
            max_assignments,
            ..Self::default()
        }
    }

    pub(crate) fn check_assignments(&self, what: &'static str, size: u128) -> Result<()> {
        if size > self.max_assignments {
            return Err(Error::SizeLimitExceeded {
                what,
                size,
                limit: self.max_assignments,
            });
        }
        Ok(())
    }

    pub(crate) fn check_cells(&self, size: u128) -> Result<()> {
        if size > self.max_cells {
            return Err(Error::SizeLimitExceeded {
                what: "incidence matrix cells",
                size,
                limit: self.max_cells,
            });
        }
        Ok(())
    }
}

/// Saturating `base^exp` in `u128`.
pub(crate) fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
