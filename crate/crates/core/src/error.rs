use alloc::string::String;

/// Failures raised by the numerical core.
///
/// Every variant maps to a stable class name (see [`Error::class`]) which the
/// command-line front end prints verbatim so that scripts can match on it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("cannot stratify: {0}")]
    Stratify(String),
    #[error("cannot hold out records: {0}")]
    Holdout(String),
    #[error("degenerate scaling: {0}")]
    DegenerateScale(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("cannot fit statistics for label {label}: {reason}")]
    Stats { label: String, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("validation leakage: {0}")]
    Leakage(String),
}

impl Error {
    /// Machine-parsable error class.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Shape(_) => "ShapeError",
            Error::Spec(_) => "SpecError",
            Error::Data(_) => "DataError",
            Error::Stratify(_) => "StratifyError",
            Error::Holdout(_) => "HoldoutError",
            Error::DegenerateScale(_) => "DegenerateScaleError",
            Error::Numerics(_) => "NumericsError",
            Error::Diverged { .. } => "DivergedError",
            Error::Stats { .. } => "StatsError",
            Error::Degenerate(_) => "DegenerateError",
            Error::Leakage(_) => "LeakageError",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
