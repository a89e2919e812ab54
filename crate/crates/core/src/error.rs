use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter {name} = {value} must be {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("parameter {name} must be {expected}")]
    Integer {
        name: &'static str,
        expected: &'static str,
    },
    #[error("invalid law of m: {0}")]
    MDist(String),
    #[error("initial graph needs n0 > M, got n0 = {n0}, M = {max_m}")]
    InitialGraph { n0: usize, max_m: usize },
}

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("argument {0} must be non-negative")]
    NegativeArgument(f64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("bisection for rank {rank} did not converge")]
    NoConvergence { rank: usize },
}

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("window holds {found} usable checkpoints, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
