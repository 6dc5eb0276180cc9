use thiserror::Error;

/// Errors raised by the samplers, design constructors and problem catalog.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {value} in dimension {dim} lies outside [{lower}, {upper}]")]
    OutOfDomain { dim: usize, value: f64, lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension {dim} exceeds the embedded direction-number table ({max} dimensions)")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("all importance weights vanished at step {step} (max log-relaxation {max_log_rho})")]
    WeightDegeneracy { step: usize, max_log_rho: f64 },

    #[error("need {needed} candidates but only {available} are available (short by {})", needed - available)]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("no feasible point found in {budget} Sobol' points; enable SCMC-assisted referencing")]
    NoFeasibleReference { budget: usize },

    #[error("unknown problem key {0:?}")]
    UnknownProblem(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical procedures themselves, as opposed to
    /// bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::WeightDegeneracy { .. } | Error::InsufficientCandidates { .. } | Error::NoFeasibleReference { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
