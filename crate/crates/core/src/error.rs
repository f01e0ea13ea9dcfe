use thiserror::Error;

/// Errors raised by table construction, bound evaluation and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability table: {}", .0.join("; "))]
    InvalidTable(Vec<String>),

    #[error("stratum O={0} has zero probability")]
    AbsentStratum(u8),

    #[error("arm R={0} has no records")]
    EmptyArm(u8),

    #[error("malformed record at row {row}: {reason}")]
    MalformedRecord { row: usize, reason: String },

    #[error("degenerate observation: {0}")]
    DegenerateObservation(String),

    #[error("scenario {scenario} cannot be evaluated on a {table} table")]
    ScenarioTableMismatch {
        scenario: String,
        table: &'static str,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("linear program is infeasible: table is not achievable in the model")]
    Infeasible,

    #[error("linear program has no linear representation for figure {0}")]
    NonlinearModel(String),

    #[error("simplex did not converge after {0} pivots")]
    IterationLimit(usize),

    #[error("bootstrap not viable: {failed} of {attempted} resamples failed")]
    NonviableData { failed: usize, attempted: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
