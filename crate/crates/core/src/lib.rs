//! Contextual fraction of empirical models.
//!
//! The non-contextual fraction of a model is the largest weight of a
//! consistent global subdistribution, found by linear programming. Its dual
//! yields a Bell inequality whose normalised violation equals the
//! contextual fraction. Around this core sit the model operations under
//! which the measure is monotone, a Born-rule simulator for equatorial
//! qubit measurements, and the MBQC and game bounds that follow.

#![forbid(unsafe_code)]

pub mod bell;
pub mod builtins;
pub mod empirical;
pub mod error;
pub mod format;
pub mod fraction;
pub mod games;
pub mod lp;
pub mod mbqc;
pub mod morphisms;
pub mod quantum;
pub mod random;
pub mod scenario;

pub use bell::BellInequality;
pub use empirical::{deterministic_model, mix, EmpiricalModel, SubDistribution};
pub use error::{Error, Result, SizeLimit};
pub use fraction::{
    contextual_fraction, decompose, noncontextual_fraction, witnessing_inequality, BackendChoice,
    FractionOptions, FractionResult,
};
pub use games::{ConstraintSystem, Strategy};
pub use mbqc::{BooleanFunction, L2Mbqc};
pub use morphisms::MeasurementTranslation;
pub use quantum::PureState;
pub use scenario::{build_incidence_matrix, IncidenceMatrix, MeasurementScenario};
