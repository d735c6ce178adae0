//! Forward and backward passes of every layer in the network.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod pool;

pub use activation::{activation_apply, softmax, softmax_cross_entropy_grad, ActivationKind};
pub use batchnorm::{batchnorm_forward, BatchNormParams, RunningStats};
pub use conv::{conv2d_backward, conv2d_forward, ConvParams};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use dropout::{dropout_backward, dropout_forward};
pub use pool::{gap_backward, gap_forward, maxpool_backward, maxpool_forward};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
