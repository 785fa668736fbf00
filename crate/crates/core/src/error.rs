use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subset enumeration infeasible: C({p}, {k}) = {count} exceeds cap {cap}")]
    EnumerationInfeasible { p: usize, k: usize, count: u128, cap: u128 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("outside certifier regime: need n >= {required_n} (have n = {n})")]
    RegimeViolation { n: usize, required_n: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid seed graph: {0}")]
    InvalidSeedGraph(String),

    #[error("invalid reduction config: {0}")]
    Config(String),

    #[error("empty feasible window: {0}")]
    EmptyWindow(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
