//! Elementwise activations and the softmax output head.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Scalar};

/// Interior activation. The output head is always softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Tanh,
    Linear,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 3] = [Self::Relu, Self::Tanh, Self::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Self::Relu => "relu",
            Self::Tanh => "tanh",
            Self::Linear => "linear",
        }
    }

    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Self::Relu => v.max(T::zero()),
            Self::Tanh => v.tanh(),
            Self::Linear => v,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Self::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Tanh => T::one() - y * y,
            Self::Linear => T::one(),
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Self::Relu),
            "tanh" => Ok(Self::Tanh),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Parameter(format!("unknown activation `{other}`"))),
        }
    }
}

pub fn activation_apply<T: Scalar>(x: &[T], kind: ActivationKind) -> Vec<T> {
    x.iter().map(|&v| kind.apply(v)).collect()
}

/// `dx = dy · f'(x)`, with `f'` evaluated from the stored outputs `y`.
pub fn activation_backward<T: Scalar>(y: &[T], dy: &[T], kind: ActivationKind) -> Vec<T> {
    y.iter()
        .zip(dy)
        .map(|(&y, &g)| g * kind.derivative_from_output(y))
        .collect()
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Gradient of mean categorical cross-entropy w.r.t. the logits feeding a
/// softmax: `(p − y) / batch`.
pub fn softmax_cross_entropy_grad<T: Scalar>(probs: &Matrix<T>, onehot: &Matrix<T>) -> Result<Matrix<T>> {
    if probs.rows() != onehot.rows() || probs.cols() != onehot.cols() {
        return Err(Error::Shape(format!(
            "probabilities are {}x{}, targets are {}x{}",
            probs.rows(),
            probs.cols(),
            onehot.rows(),
            onehot.cols()
        )));
    }
    let n = T::lit(probs.rows() as f64);
    let data = probs
        .as_slice()
        .iter()
        .zip(onehot.as_slice())
        .map(|(&p, &y)| (p - y) / n)
        .collect();
    Matrix::new(probs.rows(), probs.cols(), data)
}
