use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid sensor id {0:?}: ids must be non-empty printable tokens without whitespace")]
    InvalidSensorId(String),

    #[error("duplicate sensor id {0:?}")]
    DuplicateSensor(String),

    #[error("edge {0}-{1} references unknown sensor {2:?}")]
    UnknownEdgeEndpoint(String, String, String),

    #[error("self-loop on sensor {0:?} is not a valid KLJN link")]
    SelfLoop(String),

    #[error("unknown sensor {0:?}")]
    UnknownSensor(String),

    #[error("a sensor cannot evaluate itself ({0:?}); use the matrix diagonal instead")]
    SelfEvaluation(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(ValidationReport),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("trace length mismatch: {0}")]
    TraceLengthMismatch(String),

    #[error("period budget of {budget} exhausted with {bits} of {target} key bits")]
    BudgetExhausted {
        budget: u64,
        bits: usize,
        target: usize,
        partial: Box<crate::kljn::KeyExchangeResult>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
