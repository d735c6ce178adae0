//! Inverted dropout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::tensor::{Scalar, Tensor4};

/// Per-element multiplier applied in the forward pass: `0` or `1/(1-rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask<T> {
    pub scale: Vec<T>,
}

pub fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter(format!(
            "dropout rate must be in [0,1), got {rate}"
        )));
    }
    Ok(())
}

/// Returns the output and, in train mode with a nonzero rate, the mask used.
pub fn dropout_forward<T: Scalar, R: Rng + ?Sized>(
    x: &Tensor4<T>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor4<T>, Option<DropoutMask<T>>)> {
    check_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    let scale: Vec<T> = (0..x.shape().len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    let out = x
        .as_slice()
        .iter()
        .zip(&scale)
        .map(|(&v, &m)| v * m)
        .collect();
    Ok((Tensor4::new(x.shape(), out)?, Some(DropoutMask { scale })))
}

pub fn dropout_backward<T: Scalar>(
    dout: &Tensor4<T>,
    mask: Option<&DropoutMask<T>>,
) -> Result<Tensor4<T>> {
    match mask {
        None => Ok(dout.clone()),
        Some(m) if m.scale.len() == dout.shape().len() => {
            let d = dout
                .as_slice()
                .iter()
                .zip(&m.scale)
                .map(|(&g, &s)| g * s)
                .collect();
            Tensor4::new(dout.shape(), d)
        }
        Some(_) => Err(Error::Shape("dropout mask does not match gradient".into())),
    }
}
