use std::path::PathBuf;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },

    #[error("value {value} outside of {domain}")]
    OutOfRange { value: f64, domain: &'static str },

    #[error("series too short: need at least {needed} time points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("panel is empty or has too few channels")]
    EmptyPanel,

    #[error("no frequency of the grid falls in band {name} [{low}, {high}] Hz")]
    EmptyBand { name: String, low: f64, high: f64 },

    #[error("invalid frequency band [{low}, {high}] Hz (nyquist {nyquist} Hz)")]
    InvalidBand { low: f64, high: f64, nyquist: f64 },

    #[error("input covariance is singular and lambda is zero")]
    SingularInput,

    #[error("delta {delta} is infeasible: must be positive and below the smallest diagonal entry {min_diag}")]
    BadDelta { delta: f64, min_diag: f64 },

    #[error("degenerate data: sample covariance is zero")]
    DegenerateData,

    #[error("lambda grid is empty")]
    EmptyGrid,

    #[error("solver did not converge within {iterations} iterations")]
    MaxIterationsExceeded { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: parse error at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("non-finite sample at row {row}")]
    NonFiniteSample { row: usize },

    #[error("trial {trial} has {found} time points, expected {expected}")]
    InconsistentTrialLength {
        trial: usize,
        expected: usize,
        found: usize,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png encoding failed: {0}")]
    Png(String),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage labels stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
