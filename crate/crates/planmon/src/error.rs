use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// `DepthGuardExceeded` and `NodeBudgetExceeded` are refusals rather than
/// failures: the request was well-formed but would blow the configured
/// computation limits. The CLI maps them to exit code 2; everything else
/// maps to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed instance (field `{field}`): {message}")]
    Parse { field: String, message: String },

    #[error("instance validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("observation has zero probability under the current belief")]
    ImpossibleObservation,

    #[error("horizon {horizon} exceeds the oracle depth guard {guard}; raise --depth-guard to override")]
    DepthGuardExceeded { horizon: usize, guard: usize },

    #[error("evaluation tree exceeded the node budget {budget}; raise --node-budget to override")]
    NodeBudgetExceeded { budget: u64 },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DepthGuardExceeded { .. } | Error::NodeBudgetExceeded { .. } => 2,
            _ => 1,
        }
    }
}
