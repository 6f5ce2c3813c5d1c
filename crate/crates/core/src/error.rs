//! Error type shared by every stage of the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("asset `{asset}` (column {index}) has zero variance; drop or repair it")]
    DegenerateAsset { asset: String, index: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("volume-normalized cut needs both sides to have positive volume (got {v1}, {v2})")]
    DegenerateVolume { v1: f64, v2: f64 },

    #[error("vertex {vertex} has zero degree; the volume-normalized problem is undefined")]
    DegenerateDegree { vertex: usize },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, target {target:e})"
    )]
    NumericalFailure {
        sweeps: usize,
        off_norm: f64,
        target: f64,
    },

    #[error(
        "exhaustive search over {n} vertices would need ~{mantissa:.1}e{exponent} candidates (limit is {limit} vertices)"
    )]
    SizeLimit {
        n: usize,
        limit: usize,
        mantissa: f64,
        exponent: i32,
    },

    #[error("splitting leaf {leaf_id}: {source}")]
    LeafSplit {
        leaf_id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error(
        "covariance matrix is numerically singular (condition estimate {condition:e}); use a positive ridge"
    )]
    SingularCovariance { condition: f64 },

    #[error("minimum-variance weights cannot be normalized: 1'w = {sum:e}")]
    DegenerateNormalization { sum: f64 },

    #[error("series has zero standard deviation; Sharpe ratio is undefined")]
    DegenerateSeries,

    #[error("cannot parse {value:?} at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("timestamps are not strictly increasing: {previous:?} followed by {next:?}")]
    NonMonotoneDates { previous: String, next: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InsufficientData { .. } => "insufficient_data",
            Error::InvalidInput(_) => "invalid_input",
            Error::DegenerateAsset { .. } => "degenerate_asset",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::DegenerateVolume { .. } => "degenerate_volume",
            Error::DegenerateDegree { .. } => "degenerate_degree",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::SizeLimit { .. } => "size_limit",
            Error::LeafSplit { source, .. } => source.kind(),
            Error::Inconsistent(_) => "inconsistent_input",
            Error::SingularCovariance { .. } => "singular_covariance",
            Error::DegenerateNormalization { .. } => "degenerate_normalization",
            Error::DegenerateSeries => "degenerate_series",
            Error::Parse { .. } => "parse_error",
            Error::MissingValue { .. } => "missing_value",
            Error::NonMonotoneDates { .. } => "non_monotone_dates",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
