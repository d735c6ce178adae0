//! 3×3 same-padded, stride-1 convolution (cross-correlation) via im2col + GEMM.

use crate::error::{Error, Result};
use crate::parallel::{for_each_chunk, map_indices};
use crate::tensor::{Scalar, Shape4, Tensor4};

pub const KERNEL: usize = 3;

/// Kernels are stored `(out_channels, 3, 3, in_channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub kernels: Tensor4<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub kernels: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvParams<T> {
    pub fn new(kernels: Tensor4<T>, bias: Vec<T>) -> Result<Self> {
        let s = kernels.shape();
        if s.h != KERNEL || s.w != KERNEL {
            return Err(Error::Shape(format!(
                "convolution kernels must be 3x3, got {}x{}",
                s.h, s.w
            )));
        }
        if bias.len() != s.n {
            return Err(Error::Shape(format!(
                "{} kernels but {} biases",
                s.n,
                bias.len()
            )));
        }
        Ok(ConvParams { kernels, bias })
    }

    pub fn zeros(in_channels: usize, out_channels: usize) -> Result<Self> {
        let shape = Shape4::new(out_channels, KERNEL, KERNEL, in_channels)?;
        Self::new(Tensor4::zeros(shape), vec![T::zero(); out_channels])
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape().c
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape().n
    }

    /// Length of one kernel row in the im2col layout (`9·in_channels`).
    fn patch_len(&self) -> usize {
        KERNEL * KERNEL * self.in_channels()
    }
}

fn im2col<T: Scalar>(x: &[T], h: usize, w: usize, c: usize, cols: &mut [T]) {
    let patch = KERNEL * KERNEL * c;
    for i in 0..h {
        for j in 0..w {
            let row = &mut cols[(i * w + j) * patch..(i * w + j + 1) * patch];
            for di in 0..KERNEL {
                for dj in 0..KERNEL {
                    let dst = &mut row[(di * KERNEL + dj) * c..(di * KERNEL + dj + 1) * c];
                    let (si, sj) = (i + di, j + dj);
                    if si == 0 || sj == 0 || si > h || sj > w {
                        dst.fill(T::zero());
                    } else {
                        let src = ((si - 1) * w + (sj - 1)) * c;
                        dst.copy_from_slice(&x[src..src + c]);
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(cols: &[T], h: usize, w: usize, c: usize, dx: &mut [T]) {
    let patch = KERNEL * KERNEL * c;
    for i in 0..h {
        for j in 0..w {
            let row = &cols[(i * w + j) * patch..(i * w + j + 1) * patch];
            for di in 0..KERNEL {
                for dj in 0..KERNEL {
                    let (si, sj) = (i + di, j + dj);
                    if si == 0 || sj == 0 || si > h || sj > w {
                        continue;
                    }
                    let dst = ((si - 1) * w + (sj - 1)) * c;
                    let src = &row[(di * KERNEL + dj) * c..(di * KERNEL + dj + 1) * c];
                    for (d, &s) in dx[dst..dst + c].iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
    }
}

fn check_input<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<()> {
    if x.shape().c != p.in_channels() {
        return Err(Error::Shape(format!(
            "convolution expects {} input channels, got {}",
            p.in_channels(),
            x.shape().c
        )));
    }
    Ok(())
}

pub fn conv2d_forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
    check_input(x, p)?;
    let s = x.shape();
    let (cout, patch) = (p.out_channels(), p.patch_len());
    let hw = s.h * s.w;
    let out_shape = Shape4::new(s.n, s.h, s.w, cout)?;
    let mut out = Tensor4::zeros(out_shape);
    for_each_chunk(out.as_mut_slice(), hw * cout, |n, dst| {
        let mut cols = vec![T::zero(); hw * patch];
        im2col(x.sample(n), s.h, s.w, s.c, &mut cols);
        for row in dst.chunks_mut(cout) {
            row.copy_from_slice(&p.bias);
        }
        T::gemm(hw, patch, cout, &cols, false, p.kernels.as_slice(), true, dst, true);
    });
    Ok(out)
}

/// Returns the input gradient (when `need_input_grad`) and parameter gradients.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    dout: &Tensor4<T>,
    need_input_grad: bool,
) -> Result<(Option<Tensor4<T>>, ConvGrads<T>)> {
    check_input(x, p)?;
    let s = x.shape();
    let (cout, patch) = (p.out_channels(), p.patch_len());
    let expected = Shape4::new(s.n, s.h, s.w, cout)?;
    if dout.shape() != expected {
        return Err(Error::Shape(format!(
            "convolution output gradient is {}, expected {expected}",
            dout.shape()
        )));
    }
    let hw = s.h * s.w;
    let partials = map_indices(s.n, |n| {
        let mut cols = vec![T::zero(); hw * patch];
        im2col(x.sample(n), s.h, s.w, s.c, &mut cols);
        let d = dout.sample(n);
        let mut dk = vec![T::zero(); cout * patch];
        T::gemm(cout, hw, patch, d, true, &cols, false, &mut dk, false);
        let mut db = vec![T::zero(); cout];
        for row in d.chunks(cout) {
            for (b, &v) in db.iter_mut().zip(row) {
                *b += v;
            }
        }
        let dx = need_input_grad.then(|| {
            // reuse the patch buffer for the column gradient
            T::gemm(hw, cout, patch, d, false, p.kernels.as_slice(), false, &mut cols, false);
            let mut dx = vec![T::zero(); hw * s.c];
            col2im(&cols, s.h, s.w, s.c, &mut dx);
            dx
        });
        (dk, db, dx)
    });

    let mut grads = ConvGrads {
        kernels: vec![T::zero(); cout * patch],
        bias: vec![T::zero(); cout],
    };
    let mut dx_all = need_input_grad.then(|| Vec::with_capacity(s.len()));
    for (dk, db, dx) in partials {
        grads.kernels.iter_mut().zip(&dk).for_each(|(a, &b)| *a += b);
        grads.bias.iter_mut().zip(&db).for_each(|(a, &b)| *a += b);
        if let (Some(all), Some(dx)) = (dx_all.as_mut(), dx) {
            all.extend_from_slice(&dx);
        }
    }
    let dx = dx_all.map(|d| Tensor4::new(s, d)).transpose()?;
    Ok((dx, grads))
}
