use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate mode name `{0}` in composition")]
    DuplicateMode(String),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("dimension mismatch for mode `{name}`: expected {expected}, found {found}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("mode `{name}` has dimension {dim}; at least 2 is required")]
    InvalidDimension { name: String, dim: usize },

    #[error("matrix of shape {rows}x{cols} does not match label dimension {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },

    #[error("fidelity is undefined for a state with zero trace")]
    ZeroTrace,

    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("truncation leakage {leakage:.3e} on mode `{mode}` exceeds threshold {threshold:.1e}")]
    TruncationLeakage {
        mode: String,
        leakage: f64,
        threshold: f64,
    },

    #[error("mode `{0}` is expected to be in vacuum")]
    NonVacuumMode(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("coefficient invariant violated: {0}")]
    CoefficientInvariant(String),

    #[error("parameter inconsistency: {0}")]
    ParameterInconsistency(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("herald has zero total probability")]
    ZeroHeraldProbability,

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("no row satisfies the feasibility bound")]
    NoSolution,

    #[error("worker pool: {0}")]
    WorkerPool(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from a numerical guard (truncation, coefficient
    /// consistency, zero-probability herald) rather than malformed input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::TruncationLeakage { .. }
                | Error::CoefficientInvariant(_)
                | Error::ParameterInconsistency(_)
                | Error::ZeroHeraldProbability
                | Error::ZeroTrace
        )
    }

    /// Short machine-readable kind, used for in-row error columns.
    pub fn label(&self) -> &'static str {
        match self {
            Error::DuplicateMode(_) => "duplicate_mode",
            Error::UnknownMode(_) => "unknown_mode",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidDimension { .. } => "invalid_dimension",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::ZeroTrace => "zero_trace",
            Error::OutOfRange { .. } => "out_of_range",
            Error::TruncationLeakage { .. } => "truncation_leakage",
            Error::NonVacuumMode(_) => "non_vacuum_mode",
            Error::InvalidState(_) => "invalid_state",
            Error::CoefficientInvariant(_) => "coefficient_invariant",
            Error::ParameterInconsistency(_) => "parameter_inconsistency",
            Error::InvalidProtocol(_) => "invalid_protocol",
            Error::ZeroHeraldProbability => "zero_herald_probability",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::NoSolution => "no_solution",
            Error::WorkerPool(_) => "worker_pool",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
