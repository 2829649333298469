use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid memristor parameters: {0}")]
    InvalidParams(String),

    #[error("current must be non-negative, got {0}")]
    NegativeCurrent(f64),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("site {0} is not wired into the topology")]
    SiteNotWired(usize),

    #[error("environment has no sites")]
    EmptyEnvironment,

    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("oracle: {0}")]
    Oracle(String),

    #[error("run is incomplete after {steps} steps; use raw delivered charge instead of normalized fractions")]
    IncompleteRun { steps: u64 },

    #[error("step {step} is not present in the trace")]
    StepOutOfRange { step: u64 },

    #[error("fraction must lie in (0, 1], got {0}")]
    FractionOutOfRange(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed trace: {reason}")]
    MalformedTrace { path: PathBuf, reason: String },
}
