//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced while loading or validating a scenario.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read scenario file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scenario is missing required key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid scenario value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

/// Errors produced by the simulation and the learners.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite action component for drone {drone}")]
    NonFiniteAction { drone: usize },
    #[error("joint action has {got} drones, world has {expected}")]
    ActionArity { got: usize, expected: usize },
    #[error("step called after the episode finished (t = {t})")]
    EpisodeOver { t: usize },
    #[error("input length {got} does not match network input {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("gradient/parameter shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient encountered during optimization")]
    NonFiniteGradient,
    #[error("soft-update rate tau must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("rollout is empty")]
    EmptyRollout,
    #[error("rollout was collected under policy version {rollout} but the current policy is {current}")]
    StaleRollout { rollout: u64, current: u64 },
    #[error("discretization step must be positive, got {0}")]
    InvalidActionStep(f64),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint io: {0}")]
    CheckpointIo(#[from] std::io::Error),
    #[error("checkpoint was built for observation dim {checkpoint}, scenario needs {scenario}")]
    DimensionMismatch { checkpoint: usize, scenario: usize },
}
