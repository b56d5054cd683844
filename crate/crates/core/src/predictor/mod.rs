//! Single-hidden-layer regressor for drone operation time.

mod dataset;
mod grid;
mod mlp;
mod train;

use thiserror::Error;

use crate::physics::PhysicsError;

pub use dataset::{generate_training_data, Dataset, Region, Row};
pub use grid::{grid_search, GridRow};
pub use mlp::{load_model, save_model, Activation, Mlp, MODEL_VERSION};
pub use train::{loss_and_gradient, train, train_with_report, LrSchedule, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed model file at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("model version {found} is not supported (expected {expected})")]
    Incompatible { found: u32, expected: u32 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("row {row}: no valid sample within {attempts} attempts")]
    RetryBudget { row: usize, attempts: usize },
    #[error("grid is empty")]
    EmptyGrid,
}
