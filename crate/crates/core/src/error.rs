use thiserror::Error;

/// Errors raised by problem validation, the solvers, the projections and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("operator has no rows or no columns")]
    EmptyOperator,
    #[error("{what} has a negative entry at index {index}")]
    NegativeEntry { what: &'static str, index: usize },
    #[error("{what} has a non-finite entry at index {index}")]
    NonFiniteEntry { what: &'static str, index: usize },
    #[error("operator row {0} (0-based) has no strictly positive entry")]
    ZeroRow(usize),
    #[error("operator column {0} (0-based) has no strictly positive entry")]
    ZeroColumn(usize),

    #[error("iterate coordinate {index} is not strictly positive ({value})")]
    NonPositiveIterate { index: usize, value: f64 },
    #[error("first KL argument is negative at index {index}")]
    NegativeFirstArgument { index: usize },
    #[error("second KL argument is not strictly positive at index {index}")]
    NonPositiveSecondArgument { index: usize },
    #[error("point outside the domain of the mirror map at index {index} ({value})")]
    DomainViolation { index: usize, value: f64 },
    #[error("dual point coordinate {index} is not strictly positive ({value})")]
    NonPositiveDualPoint { index: usize, value: f64 },
    #[error("computation produced a non-finite value")]
    NonFiniteResult,

    #[error("projection input is not strictly positive at index {index}")]
    NonPositiveInput { index: usize },
    #[error("multiplier root-find did not converge after {iterations} iterations (relative residual {residual:e})")]
    RootFindFailure { iterations: usize, residual: f64 },
    #[error("projection failed at iteration {iteration}: {source}")]
    ProjectionFailure {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("EMML produced an exact zero at coordinate {index}; the Bregman projection needs interior points")]
    ZeroCoordinateUnprojectable { index: usize },

    #[error("objective values were not recorded in the trace")]
    MissingObjectiveTrace,
    #[error("relative change is undefined for an all-zero iterate")]
    ZeroDenominator,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("Poisson mean is negative at index {index}")]
    NegativeMean { index: usize },
    #[error("Poisson mean is not finite at index {index}")]
    NonFiniteMean { index: usize },
    #[error("pixel {pixel}: {source}")]
    Pixel {
        pixel: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input data or configuration, as opposed to
    /// failures that happen while a solver is running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::DimensionMismatch { .. }
            | Error::EmptyOperator
            | Error::NegativeEntry { .. }
            | Error::NonFiniteEntry { .. }
            | Error::ZeroRow(_)
            | Error::ZeroColumn(_)
            | Error::NegativeFirstArgument { .. }
            | Error::NonPositiveSecondArgument { .. }
            | Error::NonPositiveInput { .. }
            | Error::InvalidConfig(_)
            | Error::NegativeMean { .. }
            | Error::NonFiniteMean { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Parse(_) => true,
            Error::Pixel { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
