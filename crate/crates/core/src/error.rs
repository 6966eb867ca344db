use thiserror::Error;

/// Errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tensor or image shape mismatch.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// The grid is too coarse for the requested source band.
    #[error(
        "grid resolution too coarse: {ppw:.2} points per minimum wavelength < {min_ppw:.2} \
         (min Vs {vs_min:.1} m/s, f_max {f_max:.1} Hz); need dx <= {required_dx:.4} m"
    )]
    ResolutionTooCoarse {
        ppw: f64,
        min_ppw: f64,
        vs_min: f64,
        f_max: f64,
        required_dx: f64,
    },

    /// The finite-difference solver produced a non-finite field value.
    #[error("simulation unstable: non-finite field value at step {step}")]
    Unstable { step: usize },

    /// Training loss became non-finite.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    /// A binary container or checkpoint could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    /// An internal contract was violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    /// Exit code for the CLI: 2 for configuration errors, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => 2,
            Error::Unstable { .. } | Error::NonFiniteLoss { .. } => 3,
            _ => 1,
        }
    }
}
