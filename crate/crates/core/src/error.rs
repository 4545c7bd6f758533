use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    /// The worst-case eavesdropper interference-plus-noise term is not
    /// positive: the uncertainty radii swamp the jamming.
    #[error("eavesdropper denominator for UE ({k}, {n}) is {value:e} (must be > 0)")]
    NonPositiveDenominator { k: usize, n: usize, value: f64 },
    #[error("time split must satisfy 0 < eta < 1, got {0}")]
    InvalidTimeSplit(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("invalid expansion point for UE ({k}, {n}): {reason}")]
    InvalidExpansion { k: usize, n: usize, reason: String },
    #[error("invalid expansion point: {0}")]
    InvalidPoint(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solver setup failed: {0}")]
    Setup(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error(
        "no feasible starting point after trying every time split (best shortfall {shortfall:e})"
    )]
    Initialization { shortfall: f64 },
    #[error("secrecy floor of {target} nats unreachable: best minimum {achieved}")]
    SecrecyFloor { target: f64, achieved: f64 },
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("no usable expansion point found")]
    NoExpansion,
    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
