use thiserror::Error;

/// Errors produced by the chain, mode, fitting and measurement pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZigzagError {
    /// An argument lies outside the domain of the operation.
    #[error("invalid {parameter}: {reason}")]
    Domain {
        parameter: &'static str,
        reason: String,
    },

    /// Two ions occupy the same position; the Coulomb energy is singular.
    #[error("ions {first} and {second} coincide")]
    CoincidentIons { first: usize, second: usize },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The bisection endpoints do not classify as linear (low) and zigzag (high).
    #[error("bracket [{lo}, {hi}] does not straddle the transition: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: invalid {field}: {message}")]
    Validation {
        line: u64,
        field: &'static str,
        message: String,
    },

    /// A zero measurement error makes inverse-variance weighting undefined.
    #[error("record {index} for N={n_ions} has zero uncertainty; assign a floor error before weighting")]
    Weighting { n_ions: usize, index: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl ZigzagError {
    pub(crate) fn domain(parameter: &'static str, reason: impl Into<String>) -> Self {
        ZigzagError::Domain {
            parameter,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for ZigzagError {
    fn from(err: std::io::Error) -> Self {
        ZigzagError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ZigzagError>;
