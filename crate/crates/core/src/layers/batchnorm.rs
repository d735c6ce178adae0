//! Per-channel batch normalization.
//!
//! Train mode normalizes with the batch's biased mean/variance over `(n, h, w)`
//! and folds them into the running statistics with an exponential moving
//! average. Eval mode only reads the running statistics.

use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::tensor::{Scalar, Tensor4};

pub const DEFAULT_MOMENTUM: f64 = 0.99;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    /// `None` until initialized; eval mode refuses to run without it.
    pub running: Option<RunningStats<T>>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Scalar> BatchNormParams<T> {
    /// gamma = 1, beta = 0, running statistics mean 0 / variance 1.
    pub fn new(channels: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        let mut p = Self::untracked(channels, momentum, epsilon)?;
        p.running = Some(RunningStats {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        });
        Ok(p)
    }

    /// Like [`BatchNormParams::new`] but without running statistics.
    pub fn untracked(channels: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        if !(momentum > 0.0 && momentum < 1.0) {
            return Err(Error::Parameter(format!(
                "batchnorm momentum must be in (0,1), got {momentum}"
            )));
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Parameter(format!(
                "batchnorm epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(BatchNormParams {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running: None,
            momentum,
            epsilon,
        })
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor4<T>) -> Result<()> {
        let c = x.shape().c;
        if c != self.channels() || self.beta.len() != c {
            return Err(Error::Shape(format!(
                "batchnorm has {} channels, input has {c}",
                self.channels()
            )));
        }
        if let Some(r) = &self.running {
            if r.mean.len() != c || r.var.len() != c {
                return Err(Error::Shape("running statistics length mismatch".into()));
            }
        }
        Ok(())
    }
}

pub fn batchnorm_forward<T: Scalar>(
    x: &Tensor4<T>,
    p: &mut BatchNormParams<T>,
    mode: Mode,
) -> Result<Tensor4<T>> {
    match mode {
        Mode::Train => batchnorm_train(x, p).map(|(out, _)| out),
        Mode::Eval => batchnorm_eval(x, p),
    }
}

pub fn batchnorm_train<T: Scalar>(
    x: &Tensor4<T>,
    p: &mut BatchNormParams<T>,
) -> Result<(Tensor4<T>, BatchNormCache<T>)> {
    p.check(x)?;
    let c = p.channels();
    let count = T::lit((x.shape().len() / c) as f64);

    let mut mean = vec![T::zero(); c];
    for px in x.as_slice().chunks(c) {
        for (m, &v) in mean.iter_mut().zip(px) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut var = vec![T::zero(); c];
    for px in x.as_slice().chunks(c) {
        for ((acc, &v), &m) in var.iter_mut().zip(px).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= count);

    let eps = T::lit(p.epsilon);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut xhat = Vec::with_capacity(x.shape().len());
    let mut out = Vec::with_capacity(x.shape().len());
    for px in x.as_slice().chunks(c) {
        for k in 0..c {
            let h = (px[k] - mean[k]) * inv_std[k];
            xhat.push(h);
            out.push(p.gamma[k] * h + p.beta[k]);
        }
    }

    let momentum = T::lit(p.momentum);
    let keep = T::one() - momentum;
    let running = p.running.get_or_insert_with(|| RunningStats {
        mean: vec![T::zero(); c],
        var: vec![T::one(); c],
    });
    for k in 0..c {
        running.mean[k] = momentum * running.mean[k] + keep * mean[k];
        running.var[k] = momentum * running.var[k] + keep * var[k];
    }

    Ok((Tensor4::new(x.shape(), out)?, BatchNormCache { xhat, inv_std }))
}

pub fn batchnorm_eval<T: Scalar>(x: &Tensor4<T>, p: &BatchNormParams<T>) -> Result<Tensor4<T>> {
    p.check(x)?;
    let running = p.running.as_ref().ok_or_else(|| {
        Error::State("batchnorm running statistics were never initialized".into())
    })?;
    let c = p.channels();
    let eps = T::lit(p.epsilon);
    let scale: Vec<T> = (0..c)
        .map(|k| p.gamma[k] / (running.var[k] + eps).sqrt())
        .collect();
    let mut out = Vec::with_capacity(x.shape().len());
    for px in x.as_slice().chunks(c) {
        for k in 0..c {
            out.push((px[k] - running.mean[k]) * scale[k] + p.beta[k]);
        }
    }
    Tensor4::new(x.shape(), out)
}

pub fn batchnorm_backward<T: Scalar>(
    dout: &Tensor4<T>,
    p: &BatchNormParams<T>,
    cache: &BatchNormCache<T>,
) -> Result<(Tensor4<T>, BatchNormGrads<T>)> {
    let c = p.channels();
    if dout.shape().c != c || dout.shape().len() != cache.xhat.len() {
        return Err(Error::Shape("batchnorm gradient does not match cached batch".into()));
    }
    let count = T::lit((cache.xhat.len() / c) as f64);
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for (g, h) in dout.as_slice().chunks(c).zip(cache.xhat.chunks(c)) {
        for k in 0..c {
            dgamma[k] += g[k] * h[k];
            dbeta[k] += g[k];
        }
    }
    // with dxhat = g·gamma: Σdxhat = gamma·dbeta, Σ dxhat·xhat = gamma·dgamma
    let mut dx = Vec::with_capacity(cache.xhat.len());
    for (g, h) in dout.as_slice().chunks(c).zip(cache.xhat.chunks(c)) {
        for k in 0..c {
            let dxhat = g[k] * p.gamma[k];
            let v = count * dxhat - p.gamma[k] * dbeta[k] - h[k] * p.gamma[k] * dgamma[k];
            dx.push(v * cache.inv_std[k] / count);
        }
    }
    Ok((
        Tensor4::new(dout.shape(), dx)?,
        BatchNormGrads {
            gamma: dgamma,
            beta: dbeta,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: Shape4, seed: u64) -> Tensor4<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor4::from_fn(shape, |_, _, _, c| rng.random_range(-3.0..3.0) + c as f64)
    }

    #[test]
    fn train_mode_normalizes() {
        let x = random(Shape4::new(4, 3, 3, 2).unwrap(), 1);
        let mut p = BatchNormParams::new(2, DEFAULT_MOMENTUM, DEFAULT_EPSILON).unwrap();
        let out = batchnorm_forward(&x, &mut p, Mode::Train).unwrap();
        for k in 0..2 {
            let vals: Vec<f64> = out.as_slice().iter().skip(k).step_by(2).copied().collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / vals.len() as f64;
            // raw variance σ² becomes σ²/(σ²+ε)
            let raw: Vec<f64> = x.as_slice().iter().skip(k).step_by(2).copied().collect();
            let rm = raw.iter().sum::<f64>() / raw.len() as f64;
            let rv = raw.iter().map(|a| (a - rm).powi(2)).sum::<f64>() / raw.len() as f64;
            assert!(m.abs() < 1e-5);
            assert!((v - rv / (rv + DEFAULT_EPSILON)).abs() < 1e-5);
            assert!((v - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn running_stats_follow_ema() {
        let x = random(Shape4::new(2, 2, 2, 1).unwrap(), 2);
        let mut p = BatchNormParams::new(1, 0.9, DEFAULT_EPSILON).unwrap();
        batchnorm_train(&x, &mut p).unwrap();
        let vals = x.as_slice();
        let m = vals.iter().sum::<f64>() / 8.0;
        let v = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 8.0;
        let r = p.running.unwrap();
        assert!((r.mean[0] - 0.1 * m).abs() < 1e-12);
        assert!((r.var[0] - (0.9 + 0.1 * v)).abs() < 1e-12);
    }

    #[test]
    fn eval_with_neutral_stats() {
        let x = random(Shape4::new(2, 3, 3, 3).unwrap(), 3);
        let mut p = BatchNormParams::new(3, DEFAULT_MOMENTUM, DEFAULT_EPSILON).unwrap();
        let out = batchnorm_forward(&x, &mut p, Mode::Eval).unwrap();
        let factor = 1.0 / (1.0 + DEFAULT_EPSILON).sqrt();
        for (o, i) in out.as_slice().iter().zip(x.as_slice()) {
            assert!((o - i * factor).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_without_stats_is_state_error() {
        let x = random(Shape4::new(1, 2, 2, 1).unwrap(), 4);
        let p = BatchNormParams::untracked(1, DEFAULT_MOMENTUM, DEFAULT_EPSILON).unwrap();
        assert!(matches!(batchnorm_eval(&x, &p), Err(Error::State(_))));
    }

    #[test]
    fn bad_constants_rejected() {
        assert!(BatchNormParams::<f32>::new(1, 1.0, 1e-3).is_err());
        assert!(BatchNormParams::<f32>::new(1, 0.9, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let shape = Shape4::new(3, 2, 2, 2).unwrap();
        let x = random(shape, 5);
        let w = random(shape, 6);
        let mut p = BatchNormParams::new(2, DEFAULT_MOMENTUM, DEFAULT_EPSILON).unwrap();
        p.gamma = vec![1.3, -0.7];
        p.beta = vec![0.2, 0.5];
        let loss = |x: &Tensor4<f64>, p: &BatchNormParams<f64>| {
            let (y, _) = batchnorm_train(x, &mut p.clone()).unwrap();
            y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum::<f64>()
        };
        let (_, cache) = batchnorm_train(&x, &mut p.clone()).unwrap();
        let (dx, grads) = batchnorm_backward(&w, &p, &cache).unwrap();
        let h = 1e-6;
        for i in 0..shape.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.as_mut_slice()[i] += h;
            xm.as_mut_slice()[i] -= h;
            let num = (loss(&xp, &p) - loss(&xm, &p)) / (2.0 * h);
            let ana = dx.as_slice()[i];
            assert!((num - ana).abs() <= 1e-4 * num.abs().max(ana.abs()).max(1e-3));
        }
        for k in 0..2 {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.gamma[k] += h;
            pm.gamma[k] -= h;
            let num = (loss(&x, &pp) - loss(&x, &pm)) / (2.0 * h);
            assert!((num - grads.gamma[k]).abs() < 1e-4 * num.abs().max(1e-3));
        }
    }
}
