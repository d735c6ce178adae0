//! Fully connected output layer.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Scalar};

/// `weights` is `in_features × out_features`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseParams<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Shape(format!(
                "dense layer has {} outputs but {} biases",
                weights.cols(),
                bias.len()
            )));
        }
        Ok(DenseParams { weights, bias })
    }

    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        DenseParams {
            weights: Matrix::zeros(in_features, out_features),
            bias: vec![T::zero(); out_features],
        }
    }

    pub fn in_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_features(&self) -> usize {
        self.weights.cols()
    }
}

pub fn dense_forward<T: Scalar>(x: &Matrix<T>, p: &DenseParams<T>) -> Result<Matrix<T>> {
    if x.cols() != p.in_features() {
        return Err(Error::Shape(format!(
            "dense layer expects {} features, got {}",
            p.in_features(),
            x.cols()
        )));
    }
    let (n, k, m) = (x.rows(), p.in_features(), p.out_features());
    let mut out = Matrix::zeros(n, m);
    for r in 0..n {
        out.row_mut(r).copy_from_slice(&p.bias);
    }
    T::gemm(n, k, m, x.as_slice(), false, p.weights.as_slice(), false, out.as_mut_slice(), true);
    Ok(out)
}

/// Returns `(dx, grads)` for `out = x·W + b`.
pub fn dense_backward<T: Scalar>(
    x: &Matrix<T>,
    p: &DenseParams<T>,
    dout: &Matrix<T>,
) -> Result<(Matrix<T>, DenseGrads<T>)> {
    let (n, k, m) = (x.rows(), p.in_features(), p.out_features());
    if dout.rows() != n || dout.cols() != m || x.cols() != k {
        return Err(Error::Shape("dense gradient does not match forward shapes".into()));
    }
    let mut dw = vec![T::zero(); k * m];
    T::gemm(k, n, m, x.as_slice(), true, dout.as_slice(), false, &mut dw, false);
    let mut db = vec![T::zero(); m];
    for r in 0..n {
        for (b, &g) in db.iter_mut().zip(dout.row(r)) {
            *b += g;
        }
    }
    let mut dx = Matrix::zeros(n, k);
    T::gemm(n, m, k, dout.as_slice(), false, p.weights.as_slice(), true, dx.as_mut_slice(), false);
    Ok((dx, DenseGrads { weights: dw, bias: db }))
}
