//! Training loop, optimizers, initializers and the hyperparameter grid.

mod config;
mod fit;
mod grid;
mod init;
mod optim;

pub use config::{
    InitKind, OptimizerKind, TrainConfig, DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
    DEFAULT_SEED, GRID_EPOCHS,
};
pub use fit::{evaluate_loss_accuracy, fit, fit_with, EpochRecord, FitOutcome, History};
pub use grid::{grid_configs, grid_search, rank, read_checkpoint, run_grid, GridOptions, GridResult};
pub use init::{init_params, WeightSampler, INIT_LIMIT, INIT_STDDEV};
pub use optim::{OptimizerState, BETA_1, BETA_2, EPSILON, RHO};
