use thiserror::Error;

/// Errors raised anywhere in the ordinal clustering pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state {value} at position {position} is outside the range [0, {n}]")]
    OutOfRangeState { position: usize, value: i64, n: usize },
    #[error("series has length {0}, at least 2 observations are required")]
    TooShort(usize),
    #[error("range must contain at least two states (n >= 1), got n = {0}")]
    EmptyRange(i64),
    #[error("label {0:?} is not part of the ordered label list")]
    UnknownLabel(String),
    #[error("invalid label list: {0}")]
    InvalidLabels(String),
    #[error("invalid lag set: {0}")]
    InvalidLags(String),
    #[error("lag {lag} is not smaller than the series length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("series {0:?} has zero dispersion (constant series)")]
    ZeroDispersion(String),
    #[error("series {0:?} has zero variance (constant series)")]
    ZeroVariance(String),
    #[error("Durbin-Levinson recursion is singular at lag {0}")]
    SingularRecursion(usize),
    #[error("range mismatch: {0} vs {1}")]
    RangeMismatch(usize, usize),
    #[error("lag sets differ between representations")]
    LagMismatch,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid clustering configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot form {clusters} clusters from {series} series")]
    TooFewSeries { clusters: usize, series: usize },
    #[error("all medoid distances vanish, the weight cannot be updated")]
    DegenerateDistances,
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("unknown scenario {0}, expected 1..=7")]
    UnknownScenario(u32),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("m-grid needs at least two points")]
    GridTooSmall,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("every grid cell produced coincident medoids")]
    AllCellsDegenerate,
    #[error("empty data set")]
    EmptyDataSet,
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Format(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
