use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid configuration `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("quadrature did not converge after {levels} levels (last delta {last_delta:e}); record {record:?}")]
    Quadrature {
        levels: usize,
        last_delta: f64,
        record: Vec<f64>,
    },
    #[error("CG did not converge: column {column}, residual {residual:e} after {iterations} iterations")]
    Solver {
        column: usize,
        residual: f64,
        iterations: usize,
    },
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("expansion invalid: smallest singular value of 1+Y is {0:e}")]
    ExpansionInvalid(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        msg: msg.into(),
    }
}
