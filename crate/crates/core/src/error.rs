use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no exploration step possible: the state has no degree-1 half-edge")]
    NoStep,
    #[error("proportions ({0}, {1}, {2}) do not lie on the simplex")]
    NotSimplex(f64, f64, f64),
    #[error("no leaves: p1 = 0, the exploration never starts")]
    NoLeaf,
    #[error("singular state: total mass S = 0")]
    Singular,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("ODE solver failure: {0}")]
    Solver(String),
    #[error("Brownian path did not cross the barrier before t = {t_max}")]
    Runaway { t_max: f64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("mismatched sizes: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
