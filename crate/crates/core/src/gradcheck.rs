//! Central finite-difference checks of every hand-written backward pass, in
//! f64. Each check returns one relative error per checked tensor:
//! `‖analytic − numeric‖ / (‖analytic‖ + ‖numeric‖)`. Single layers are
//! checked through the scalar `Σ out·R` for a fixed random `R`, whose output
//! gradient is `R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layers::activation::activation_backward;
use crate::layers::batchnorm::{batchnorm_backward, batchnorm_train};
use crate::layers::{
    activation_apply, conv2d_backward, conv2d_forward, dense_backward, dense_forward,
    dropout_backward, dropout_forward, gap_backward, gap_forward, maxpool_backward,
    maxpool_forward, softmax, softmax_cross_entropy_grad, ActivationKind, BatchNormParams,
    ConvParams, DenseParams, Mode,
};
use crate::model::{cross_entropy_loss, ModelSpec, Network, Params};
use crate::tensor::{Matrix, Shape4, Tensor4};
use crate::train::{init_params, InitKind};

pub const STEP: f64 = 1e-6;
/// Gradients whose analytic and numeric norms are both below this are
/// identically zero up to rounding noise, where a ratio is meaningless (the
/// conv bias ahead of batchnorm with a linear activation is one).
pub const VANISHING: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub relative_error: f64,
    /// `max(‖analytic‖, ‖numeric‖)`.
    pub magnitude: f64,
    /// `‖analytic − numeric‖`.
    pub absolute_error: f64,
}

impl Check {
    pub fn vanishing(&self) -> bool {
        self.magnitude < VANISHING
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.relative_error < tolerance || (self.vanishing() && self.absolute_error < VANISHING)
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = norm(analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(analytic.iter().copied()) + norm(numeric.iter().copied());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `loss` with respect to every entry of `x`.
pub fn numeric_gradient(x: &[f64], mut loss: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + STEP;
        let up = loss(&probe)?;
        probe[i] = x[i] - STEP;
        let down = loss(&probe)?;
        probe[i] = x[i];
        g.push((up - down) / (2.0 * STEP));
    }
    Ok(g)
}

fn check(name: &str, analytic: &[f64], numeric: &[f64]) -> Check {
    Check {
        name: name.into(),
        relative_error: relative_error(analytic, numeric),
        magnitude: norm(analytic.iter().copied()).max(norm(numeric.iter().copied())),
        absolute_error: norm(analytic.iter().zip(numeric).map(|(a, n)| a - n)),
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn tensor(rng: &mut ChaCha8Rng, s: [usize; 4]) -> Result<Tensor4<f64>> {
    let shape = Shape4::new(s[0], s[1], s[2], s[3])?;
    Tensor4::new(shape, uniform(rng, shape.len(), -1.0, 1.0))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn with_shape(t: &Tensor4<f64>, data: &[f64]) -> Result<Tensor4<f64>> {
    Tensor4::new(t.shape(), data.to_vec())
}

pub fn check_conv(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = tensor(&mut rng, [2, 5, 5, 2])?;
    let p = ConvParams::new(tensor(&mut rng, [3, 3, 3, 2])?, uniform(&mut rng, 3, -1.0, 1.0))?;
    let r = uniform(&mut rng, 2 * 5 * 5 * 3, -1.0, 1.0);
    let dout = Tensor4::new(Shape4::new(2, 5, 5, 3)?, r.clone())?;
    let (dx, g) = conv2d_backward(&x, &p, &dout, true)?;
    let dx = dx.expect("input gradient requested");

    let nx = numeric_gradient(x.as_slice(), |v| Ok(dot(conv2d_forward(&with_shape(&x, v)?, &p)?.as_slice(), &r)))?;
    let nk = numeric_gradient(p.kernels.as_slice(), |v| {
        let q = ConvParams::new(with_shape(&p.kernels, v)?, p.bias.clone())?;
        Ok(dot(conv2d_forward(&x, &q)?.as_slice(), &r))
    })?;
    let nb = numeric_gradient(&p.bias, |v| {
        let q = ConvParams::new(p.kernels.clone(), v.to_vec())?;
        Ok(dot(conv2d_forward(&x, &q)?.as_slice(), &r))
    })?;
    Ok(vec![
        check("conv.input", dx.as_slice(), &nx),
        check("conv.kernel", &g.kernels, &nk),
        check("conv.bias", &g.bias, &nb),
    ])
}

pub fn check_maxpool(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = tensor(&mut rng, [2, 4, 4, 2])?;
    let r = uniform(&mut rng, 2 * 2 * 2 * 2, -1.0, 1.0);
    let (out, rec) = maxpool_forward(&x)?;
    let dx = maxpool_backward(&Tensor4::new(out.shape(), r.clone())?, &rec)?;
    let nx = numeric_gradient(x.as_slice(), |v| Ok(dot(maxpool_forward(&with_shape(&x, v)?)?.0.as_slice(), &r)))?;
    Ok(vec![check("maxpool.input", dx.as_slice(), &nx)])
}

pub fn check_batchnorm(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = tensor(&mut rng, [2, 3, 3, 2])?;
    let mut p = BatchNormParams::<f64>::new(2, 0.99, 1e-3)?;
    p.gamma = uniform(&mut rng, 2, 0.5, 1.5);
    p.beta = uniform(&mut rng, 2, -0.5, 0.5);
    let r = uniform(&mut rng, x.shape().len(), -1.0, 1.0);
    let (_, cache) = batchnorm_train(&x, &mut p.clone())?;
    let (dx, g) = batchnorm_backward(&Tensor4::new(x.shape(), r.clone())?, &p, &cache)?;

    let eval = |x: &Tensor4<f64>, p: &BatchNormParams<f64>| -> Result<f64> {
        Ok(dot(batchnorm_train(x, &mut p.clone())?.0.as_slice(), &r))
    };
    let nx = numeric_gradient(x.as_slice(), |v| eval(&with_shape(&x, v)?, &p))?;
    let ng = numeric_gradient(&p.gamma, |v| {
        let mut q = p.clone();
        q.gamma = v.to_vec();
        eval(&x, &q)
    })?;
    let nb = numeric_gradient(&p.beta, |v| {
        let mut q = p.clone();
        q.beta = v.to_vec();
        eval(&x, &q)
    })?;
    Ok(vec![
        check("batchnorm.input", dx.as_slice(), &nx),
        check("batchnorm.gamma", &g.gamma, &ng),
        check("batchnorm.beta", &g.beta, &nb),
    ])
}

pub fn check_dropout(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = tensor(&mut rng, [2, 4, 4, 3])?;
    let r = uniform(&mut rng, x.shape().len(), -1.0, 1.0);
    let mask_seed = rng.random::<u64>();
    let fwd = |x: &Tensor4<f64>| dropout_forward(x, 0.2, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed));
    let (_, mask) = fwd(&x)?;
    let dx = dropout_backward(&Tensor4::new(x.shape(), r.clone())?, mask.as_ref())?;
    let nx = numeric_gradient(x.as_slice(), |v| Ok(dot(fwd(&with_shape(&x, v)?)?.0.as_slice(), &r)))?;
    Ok(vec![check("dropout.input", dx.as_slice(), &nx)])
}

pub fn check_dense(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Matrix::new(3, 4, uniform(&mut rng, 12, -1.0, 1.0))?;
    let p = DenseParams::new(Matrix::new(4, 5, uniform(&mut rng, 20, -1.0, 1.0))?, uniform(&mut rng, 5, -1.0, 1.0))?;
    let r = uniform(&mut rng, 15, -1.0, 1.0);
    let (dx, g) = dense_backward(&x, &p, &Matrix::new(3, 5, r.clone())?)?;
    let f = |x: &Matrix<f64>, p: &DenseParams<f64>| -> Result<f64> { Ok(dot(dense_forward(x, p)?.as_slice(), &r)) };
    let nx = numeric_gradient(x.as_slice(), |v| f(&Matrix::new(3, 4, v.to_vec())?, &p))?;
    let nw = numeric_gradient(p.weights.as_slice(), |v| {
        f(&x, &DenseParams::new(Matrix::new(4, 5, v.to_vec())?, p.bias.clone())?)
    })?;
    let nb = numeric_gradient(&p.bias, |v| f(&x, &DenseParams::new(p.weights.clone(), v.to_vec())?))?;
    Ok(vec![
        check("dense.input", dx.as_slice(), &nx),
        check("dense.weight", &g.weights, &nw),
        check("dense.bias", &g.bias, &nb),
    ])
}

pub fn check_activations(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep clear of the ReLU kink
    let x: Vec<f64> = (0..40)
        .map(|_| {
            let v: f64 = rng.random_range(0.01..2.0);
            if rng.random::<bool>() { v } else { -v }
        })
        .collect();
    let r = uniform(&mut rng, x.len(), -1.0, 1.0);
    ActivationKind::ALL
        .iter()
        .map(|&kind| {
            let y = activation_apply(&x, kind);
            let dx = activation_backward(&y, &r, kind);
            let nx = numeric_gradient(&x, |v| Ok(dot(&activation_apply(v, kind), &r)))?;
            Ok(check(&format!("activation.{kind}"), &dx, &nx))
        })
        .collect()
}

pub fn check_gap(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = tensor(&mut rng, [2, 3, 3, 4])?;
    let r = uniform(&mut rng, 8, -1.0, 1.0);
    let dx = gap_backward(&Matrix::new(2, 4, r.clone())?, x.shape())?;
    let nx = numeric_gradient(x.as_slice(), |v| Ok(dot(gap_forward(&with_shape(&x, v)?).as_slice(), &r)))?;
    Ok(vec![check("gap.input", dx.as_slice(), &nx)])
}

pub fn check_softmax_cross_entropy(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = Matrix::new(4, 5, uniform(&mut rng, 20, -3.0, 3.0))?;
    let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..5)).collect();
    let y = crate::data::one_hot::<f64>(&labels, 5)?;
    let dz = softmax_cross_entropy_grad(&softmax(&logits), &y)?;
    let nz = numeric_gradient(logits.as_slice(), |v| cross_entropy_loss(&softmax(&Matrix::new(4, 5, v.to_vec())?), &y))?;
    Ok(vec![check("softmax_cross_entropy.logits", dz.as_slice(), &nz)])
}

/// Two blocks on 8×8 single-channel input, three classes.
pub fn tiny_spec(activation: ActivationKind) -> ModelSpec {
    ModelSpec {
        input_side: 8,
        filters: vec![2, 3],
        classes: 3,
        ..ModelSpec::digits()
    }
    .with_activation(activation)
}

/// Every trainable tensor of the tiny network, batch of 2, dropout active
/// with a fixed mask seed, batchnorm on batch statistics.
pub fn check_network(seed: u64, activation: ActivationKind) -> Result<Vec<Check>> {
    let spec = tiny_spec(activation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init_params::<f64>(&spec, InitKind::Normal, seed)?;
    // larger weights than the stock initializer so no gradient is negligible
    for t in params.trainable_mut() {
        for v in t.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let x = tensor(&mut rng, [2, 8, 8, 1])?;
    let labels = [rng.random_range(0..3), rng.random_range(0..3)];
    let y = crate::data::one_hot::<f64>(&labels, 3)?;
    let mask_seed = rng.random::<u64>();

    let loss = |p: &Params<f64>| -> Result<f64> {
        let mut net = Network::new(spec.clone(), p.clone())?;
        let probs = net.forward_train(&x, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
        cross_entropy_loss(&probs, &y)
    };
    let mut net = Network::new(spec.clone(), params.clone())?;
    net.forward_train(&x, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
    let grads = net.backward(&y)?;

    let mut checks = Vec::new();
    for (i, (name, analytic)) in grads.entries.iter().enumerate() {
        let base = params.trainable_mut()[i].to_vec();
        let numeric = numeric_gradient(&base, |v| {
            let mut q = params.clone();
            q.trainable_mut()[i].copy_from_slice(v);
            loss(&q)
        })?;
        checks.push(check(&format!("network[{activation}].{name}"), analytic, &numeric));
    }
    Ok(checks)
}

/// Every layer check plus the network under each activation.
pub fn check_all(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.extend(check_conv(seed)?);
    out.extend(check_maxpool(seed)?);
    out.extend(check_batchnorm(seed)?);
    out.extend(check_dropout(seed)?);
    out.extend(check_dense(seed)?);
    out.extend(check_activations(seed)?);
    out.extend(check_gap(seed)?);
    out.extend(check_softmax_cross_entropy(seed)?);
    for kind in ActivationKind::ALL {
        out.extend(check_network(seed, kind)?);
    }
    Ok(out)
}
