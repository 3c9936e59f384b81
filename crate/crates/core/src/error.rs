use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: column `{column}` has zero variance")]
    DegenerateData { column: String },

    #[error("gradient descent diverged after {iterations} iterations (learning rate {learning_rate}); reduce the step size")]
    StepSize { learning_rate: f64, iterations: usize },

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("schema error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Schema {
        location: Option<String>,
        message: String,
    },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("unknown contact frame `{0}`")]
    UnknownFrame(String),

    #[error("unknown node `{node}`; available nodes: {}", available.join(", "))]
    UnknownNode { node: String, available: Vec<String> },

    #[error("singular actuator map at joint `{joint}`")]
    Singularity { joint: String },

    #[error("actuation deficiency under contact `{contact}`: rank(S_a N_c) = {actuated_rank} < rank(N_c) = {free_rank}")]
    ActuationDeficiency {
        contact: String,
        actuated_rank: usize,
        free_rank: usize,
    },

    #[error("invalid start: contact residual {residual:.3e} exceeds {tolerance:.1e}")]
    InvalidStart { residual: f64, tolerance: f64 },

    #[error("no feasible strategy: {0}")]
    NoStrategy(String),

    #[error("infeasible command at t = {time:.3} s: contact residual {residual:.3e} exceeds {tolerance:.1e}")]
    InfeasibleCommand {
        time: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn schema(location: Option<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be finite, got {value}")))
    }
}
