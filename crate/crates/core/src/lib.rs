//! Convolutional recognizer for handwritten Arabic letters and digits:
//! tensors and layers with hand-written backward passes, training with the
//! usual adaptive optimizers, a hyperparameter grid, class-wise metrics and a
//! two-file model format.

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod layers;
pub mod model;
mod parallel;
pub mod predict;
pub mod rng;
pub mod store;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use data::{Dataset, LabelMap, ModelKind};
pub use error::{Error, Result};
pub use model::{ModelSpec, Network, Params};
pub use predict::{Prediction, Recognizer};
pub use store::{load_model, save_model, ModelManifest};
pub use tensor::{Matrix, Shape4, Tensor4};
pub use train::{TrainConfig, OptimizerKind, InitKind};
