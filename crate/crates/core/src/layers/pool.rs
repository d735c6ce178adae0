//! 2×2 / stride-2 max pooling and global average pooling.

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Scalar, Shape4, Tensor4};

/// Flat input offset of the winning element for every pooled output element.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxRecord {
    pub input_shape: Shape4,
    pub winners: Vec<usize>,
}

pub fn maxpool_forward<T: Scalar>(x: &Tensor4<T>) -> Result<(Tensor4<T>, ArgmaxRecord)> {
    let s = x.shape();
    if !s.h.is_multiple_of(2) || !s.w.is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "max pooling needs even spatial dimensions, got {}x{}",
            s.h, s.w
        )));
    }
    let out_shape = Shape4::new(s.n, s.h / 2, s.w / 2, s.c)?;
    let mut out = Vec::with_capacity(out_shape.len());
    let mut winners = Vec::with_capacity(out_shape.len());
    for n in 0..s.n {
        for i in 0..out_shape.h {
            for j in 0..out_shape.w {
                for c in 0..s.c {
                    let mut best = s.offset(n, 2 * i, 2 * j, c);
                    for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                        let o = s.offset(n, 2 * i + di, 2 * j + dj, c);
                        if x.as_slice()[o] > x.as_slice()[best] {
                            best = o;
                        }
                    }
                    out.push(x.as_slice()[best]);
                    winners.push(best);
                }
            }
        }
    }
    let record = ArgmaxRecord {
        input_shape: s,
        winners,
    };
    Ok((Tensor4::new(out_shape, out)?, record))
}

/// Routes each output gradient to the single input position that won its window.
pub fn maxpool_backward<T: Scalar>(dout: &Tensor4<T>, record: &ArgmaxRecord) -> Result<Tensor4<T>> {
    if dout.shape().len() != record.winners.len() {
        return Err(Error::Shape(format!(
            "pooling gradient has {} elements, record has {}",
            dout.shape().len(),
            record.winners.len()
        )));
    }
    let mut dx = Tensor4::zeros(record.input_shape);
    let buf = dx.as_mut_slice();
    for (&w, &g) in record.winners.iter().zip(dout.as_slice()) {
        buf[w] += g;
    }
    Ok(dx)
}

/// Global average pooling: one length-`c` feature row per sample.
pub fn gap_forward<T: Scalar>(x: &Tensor4<T>) -> Matrix<T> {
    let s = x.shape();
    let area = T::lit((s.h * s.w) as f64);
    let mut out = Matrix::zeros(s.n, s.c);
    for n in 0..s.n {
        let row = out.row_mut(n);
        for px in x.sample(n).chunks(s.c) {
            for (acc, &v) in row.iter_mut().zip(px) {
                *acc += v;
            }
        }
        for v in row.iter_mut() {
            *v /= area;
        }
    }
    out
}

pub fn gap_backward<T: Scalar>(dout: &Matrix<T>, input_shape: Shape4) -> Result<Tensor4<T>> {
    if dout.rows() != input_shape.n || dout.cols() != input_shape.c {
        return Err(Error::Shape(format!(
            "pooled gradient is {}x{}, input was {input_shape}",
            dout.rows(),
            dout.cols()
        )));
    }
    let area = T::lit((input_shape.h * input_shape.w) as f64);
    Ok(Tensor4::from_fn(input_shape, |n, _, _, c| dout.get(n, c) / area))
}
