//! The network: a stack of conv blocks, global average pooling and a softmax
//! dense head.
//!
//! Each block is `conv 3×3 → activation → batchnorm → maxpool 2×2 → dropout`
//! (see [`BLOCK_ORDER`]). On a 64×64 input the stock configuration produces
//!
//! ```text
//! (64,64,1) → conv16 (64,64,16) → pool (32,32,16)
//!           → conv34 (32,32,34) → pool (16,16,34)
//!           → conv64 (16,16,64) → pool (8,8,64)
//!           → conv128 (8,8,128) → pool (4,4,128)
//!           → GAP 128 → dense {10 | 28} → softmax
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::activation::{activation_backward, softmax, softmax_cross_entropy_grad};
use crate::layers::batchnorm::{
    batchnorm_backward, batchnorm_eval, batchnorm_train, BatchNormCache, DEFAULT_EPSILON,
    DEFAULT_MOMENTUM,
};
use crate::layers::dropout::{check_rate, dropout_backward, dropout_forward, DropoutMask};
use crate::layers::pool::{gap_backward, gap_forward, maxpool_backward, maxpool_forward, ArgmaxRecord};
use crate::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, ActivationKind,
    BatchNormParams, ConvParams, DenseParams, Mode,
};
use crate::tensor::{Matrix, Scalar, Shape4, Tensor4};

/// Filter counts of the four conv blocks, as published (34, not 32).
pub const PAPER_FILTERS: [usize; 4] = [16, 34, 64, 128];
pub const PAPER_DROPOUT: f64 = 0.2;
pub const PAPER_INPUT_SIDE: usize = 64;
pub const DIGIT_CLASSES: usize = 10;
pub const LETTER_CLASSES: usize = 28;

/// Position of batchnorm relative to the activation inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockOrder {
    ActivationThenNorm,
    NormThenActivation,
}

pub const BLOCK_ORDER: BlockOrder = BlockOrder::ActivationThenNorm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_side: usize,
    pub input_channels: usize,
    pub filters: Vec<usize>,
    pub dropout: f64,
    pub classes: usize,
    pub activation: ActivationKind,
    pub block_order: BlockOrder,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

/// Output shape of one stage, `(h, w, c)` per sample or `(features,)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub layer: String,
    pub dims: Vec<usize>,
}

/// Name and shape of one persisted parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSlot {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

impl TensorSlot {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ModelSpec {
    pub fn paper(classes: usize, activation: ActivationKind) -> Self {
        ModelSpec {
            input_side: PAPER_INPUT_SIDE,
            input_channels: 1,
            filters: PAPER_FILTERS.to_vec(),
            dropout: PAPER_DROPOUT,
            classes,
            activation,
            block_order: BLOCK_ORDER,
            bn_momentum: DEFAULT_MOMENTUM,
            bn_epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn letters() -> Self {
        Self::paper(LETTER_CLASSES, ActivationKind::Relu)
    }

    pub fn digits() -> Self {
        Self::paper(DIGIT_CLASSES, ActivationKind::Relu)
    }

    pub fn with_input_side(mut self, side: usize) -> Self {
        self.input_side = side;
        self
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() || self.filters.contains(&0) {
            return Err(Error::Consistency("every block needs at least one filter".into()));
        }
        if self.classes == 0 || self.input_channels == 0 {
            return Err(Error::Consistency("class and channel counts must be positive".into()));
        }
        check_rate(self.dropout)?;
        let factor = 1usize << self.filters.len();
        if self.input_side == 0 || !self.input_side.is_multiple_of(factor) {
            return Err(Error::Shape(format!(
                "input side {} is not divisible by {factor} ({} poolings)",
                self.input_side,
                self.filters.len()
            )));
        }
        BatchNormParams::<f32>::new(1, self.bn_momentum, self.bn_epsilon)?;
        Ok(())
    }

    /// Per-sample output shape after every stage.
    pub fn shape_chain(&self) -> Result<Vec<ChainStep>> {
        self.validate()?;
        let mut side = self.input_side;
        let mut chain = vec![ChainStep {
            layer: "input".into(),
            dims: vec![side, side, self.input_channels],
        }];
        for (b, &f) in self.filters.iter().enumerate() {
            chain.push(ChainStep {
                layer: format!("block{}.conv{f}", b + 1),
                dims: vec![side, side, f],
            });
            side /= 2;
            chain.push(ChainStep {
                layer: format!("block{}.pool", b + 1),
                dims: vec![side, side, f],
            });
        }
        let last = *self.filters.last().expect("validated non-empty");
        chain.push(ChainStep {
            layer: "gap".into(),
            dims: vec![last],
        });
        chain.push(ChainStep {
            layer: "dense".into(),
            dims: vec![self.classes],
        });
        Ok(chain)
    }

    /// Every persisted tensor in blob order.
    pub fn parameter_layout(&self) -> Vec<TensorSlot> {
        let slot = |name: String, shape: Vec<usize>, trainable| TensorSlot {
            name,
            shape,
            trainable,
        };
        let mut slots = Vec::new();
        let mut cin = self.input_channels;
        for (b, &f) in self.filters.iter().enumerate() {
            let p = format!("block{}", b + 1);
            slots.push(slot(format!("{p}.conv.kernel"), vec![f, 3, 3, cin], true));
            slots.push(slot(format!("{p}.conv.bias"), vec![f], true));
            slots.push(slot(format!("{p}.bn.gamma"), vec![f], true));
            slots.push(slot(format!("{p}.bn.beta"), vec![f], true));
            slots.push(slot(format!("{p}.bn.running_mean"), vec![f], false));
            slots.push(slot(format!("{p}.bn.running_var"), vec![f], false));
            cin = f;
        }
        slots.push(slot("dense.weight".into(), vec![cin, self.classes], true));
        slots.push(slot("dense.bias".into(), vec![self.classes], true));
        slots
    }

    pub fn parameter_count(&self) -> usize {
        self.parameter_layout().iter().map(TensorSlot::len).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.parameter_layout()
            .iter()
            .filter(|s| s.trainable)
            .map(TensorSlot::len)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<T> {
    pub conv: ConvParams<T>,
    pub bn: BatchNormParams<T>,
}

/// Complete parameter set, including batchnorm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub blocks: Vec<BlockParams<T>>,
    pub dense: DenseParams<T>,
}

/// Gradients in the order of the trainable entries of [`ModelSpec::parameter_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub entries: Vec<(String, Vec<T>)>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, name: &str) -> Option<&[T]> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

impl<T: Scalar> Params<T> {
    /// All-zero weights, unit gamma, neutral running statistics.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut cin = spec.input_channels;
        let mut blocks = Vec::with_capacity(spec.filters.len());
        for &f in &spec.filters {
            blocks.push(BlockParams {
                conv: ConvParams::zeros(cin, f)?,
                bn: BatchNormParams::new(f, spec.bn_momentum, spec.bn_epsilon)?,
            });
            cin = f;
        }
        Ok(Params {
            blocks,
            dense: DenseParams::zeros(cin, spec.classes),
        })
    }

    /// Every tensor in blob order. Missing running statistics are an error.
    pub fn tensors(&self) -> Result<Vec<&[T]>> {
        let mut out: Vec<&[T]> = Vec::new();
        for (b, blk) in self.blocks.iter().enumerate() {
            let running = blk.bn.running.as_ref().ok_or_else(|| {
                Error::State(format!("block{} has no running statistics", b + 1))
            })?;
            out.push(blk.conv.kernels.as_slice());
            out.push(&blk.conv.bias);
            out.push(&blk.bn.gamma);
            out.push(&blk.bn.beta);
            out.push(&running.mean);
            out.push(&running.var);
        }
        out.push(self.dense.weights.as_slice());
        out.push(&self.dense.bias);
        Ok(out)
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for blk in &mut self.blocks {
            let c = blk.bn.gamma.len();
            let running = blk.bn.running.get_or_insert_with(|| crate::layers::RunningStats {
                mean: vec![T::zero(); c],
                var: vec![T::one(); c],
            });
            out.push(blk.conv.kernels.as_mut_slice());
            out.push(&mut blk.conv.bias);
            out.push(&mut blk.bn.gamma);
            out.push(&mut blk.bn.beta);
            out.push(&mut running.mean);
            out.push(&mut running.var);
        }
        out.push(self.dense.weights.as_mut_slice());
        out.push(&mut self.dense.bias);
        out
    }

    /// Trainable tensors, aligned with [`Gradients::entries`].
    pub fn trainable_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for blk in &mut self.blocks {
            out.push(blk.conv.kernels.as_mut_slice());
            out.push(&mut blk.conv.bias);
            out.push(&mut blk.bn.gamma);
            out.push(&mut blk.bn.beta);
        }
        out.push(self.dense.weights.as_mut_slice());
        out.push(&mut self.dense.bias);
        out
    }

    /// Checks every tensor against the layout the spec implies.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        spec.validate()?;
        if self.blocks.len() != spec.filters.len() {
            return Err(Error::Consistency(format!(
                "spec has {} blocks, parameters have {}",
                spec.filters.len(),
                self.blocks.len()
            )));
        }
        let layout = spec.parameter_layout();
        let tensors = self.tensors()?;
        for (slot, t) in layout.iter().zip(&tensors) {
            if slot.len() != t.len() {
                return Err(Error::Consistency(format!(
                    "`{}` has {} values, expected {:?}",
                    slot.name,
                    t.len(),
                    slot.shape
                )));
            }
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            let want = &layout[b * 6].shape;
            let s = blk.conv.kernels.shape();
            if [s.n, s.h, s.w, s.c] != want[..] {
                return Err(Error::Consistency(format!(
                    "block{} kernels are {s}, expected {want:?}",
                    b + 1
                )));
            }
        }
        if self.dense.in_features() != *spec.filters.last().unwrap_or(&0)
            || self.dense.out_features() != spec.classes
        {
            return Err(Error::Consistency("dense layer does not match spec".into()));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        let v = |s: &[T]| s.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        Params {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockParams {
                    conv: ConvParams {
                        kernels: b.conv.kernels.cast(),
                        bias: v(&b.conv.bias),
                    },
                    bn: BatchNormParams {
                        gamma: v(&b.bn.gamma),
                        beta: v(&b.bn.beta),
                        running: b.bn.running.as_ref().map(|r| crate::layers::RunningStats {
                            mean: v(&r.mean),
                            var: v(&r.var),
                        }),
                        momentum: b.bn.momentum,
                        epsilon: b.bn.epsilon,
                    },
                })
                .collect(),
            dense: DenseParams {
                weights: self.dense.weights.cast(),
                bias: v(&self.dense.bias),
            },
        }
    }
}

struct BlockTape<T> {
    input: Tensor4<T>,
    activated: Tensor4<T>,
    bn: BatchNormCache<T>,
    pool: ArgmaxRecord,
    dropout: Option<DropoutMask<T>>,
}

/// Records kept by a train-mode forward pass for the matching backward pass.
struct Tape<T> {
    blocks: Vec<BlockTape<T>>,
    last_shape: Shape4,
    features: Matrix<T>,
    probs: Matrix<T>,
}

/// A model specification bound to its parameters.
pub struct Network<T> {
    spec: ModelSpec,
    params: Params<T>,
    tape: Option<Box<Tape<T>>>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for Network<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Network")
            .field("spec", &self.spec)
            .field("params", &self.params)
            .field("tape", &self.tape.is_some())
            .finish()
    }
}

fn check_input<T: Scalar>(spec: &ModelSpec, x: &Tensor4<T>) -> Result<()> {
    let s = x.shape();
    if s.h != spec.input_side || s.w != spec.input_side || s.c != spec.input_channels {
        return Err(Error::Shape(format!(
            "model expects ({0},{0},{1}) samples, got {s}",
            spec.input_side, spec.input_channels
        )));
    }
    Ok(())
}

fn apply_activation<T: Scalar>(t: &Tensor4<T>, kind: ActivationKind) -> Tensor4<T> {
    t.map(|v| kind.apply(v))
}

/// Eval-mode forward pass: dropout off, batchnorm on running statistics.
pub fn predict_probs<T: Scalar>(spec: &ModelSpec, params: &Params<T>, x: &Tensor4<T>) -> Result<Matrix<T>> {
    let h = block_outputs(spec, params, x)?
        .pop()
        .ok_or_else(|| Error::Consistency("model has no blocks".into()))?;
    let logits = dense_forward(&gap_forward(&h), &params.dense)?;
    Ok(softmax(&logits))
}

/// Eval-mode output of every block.
pub fn block_outputs<T: Scalar>(
    spec: &ModelSpec,
    params: &Params<T>,
    x: &Tensor4<T>,
) -> Result<Vec<Tensor4<T>>> {
    check_input(spec, x)?;
    let mut outs = Vec::with_capacity(params.blocks.len());
    let mut h = x.clone();
    for blk in &params.blocks {
        let z = conv2d_forward(&h, &blk.conv)?;
        let n = match spec.block_order {
            BlockOrder::ActivationThenNorm => {
                batchnorm_eval(&apply_activation(&z, spec.activation), &blk.bn)?
            }
            BlockOrder::NormThenActivation => {
                apply_activation(&batchnorm_eval(&z, &blk.bn)?, spec.activation)
            }
        };
        h = maxpool_forward(&n)?.0;
        outs.push(h.clone());
    }
    Ok(outs)
}

/// Mean categorical cross-entropy with probabilities floored at 1e-12.
pub fn cross_entropy_loss<T: Scalar>(probs: &Matrix<T>, onehot: &Matrix<T>) -> Result<f64> {
    if probs.rows() != onehot.rows() || probs.cols() != onehot.cols() {
        return Err(Error::Shape(format!(
            "probabilities are {}x{}, targets are {}x{}",
            probs.rows(),
            probs.cols(),
            onehot.rows(),
            onehot.cols()
        )));
    }
    if probs.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = probs
        .as_slice()
        .iter()
        .zip(onehot.as_slice())
        .filter(|(_, y)| y.as_f64() != 0.0)
        .map(|(p, y)| -y.as_f64() * p.as_f64().max(1e-12).ln())
        .sum();
    Ok(total / probs.rows() as f64)
}

impl<T: Scalar> Network<T> {
    /// Binds parameters to a spec, asserting the shape chain closes.
    pub fn new(spec: ModelSpec, params: Params<T>) -> Result<Self> {
        spec.shape_chain()?;
        params.check_against(&spec)?;
        Ok(Network {
            spec,
            params,
            tape: None,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    pub fn into_params(self) -> Params<T> {
        self.params
    }

    pub fn predict(&self, x: &Tensor4<T>) -> Result<Matrix<T>> {
        predict_probs(&self.spec, &self.params, x)
    }

    /// Train-mode forward pass. Updates batchnorm running statistics and
    /// records everything [`Network::backward`] needs.
    pub fn forward_train<R: Rng + ?Sized>(&mut self, x: &Tensor4<T>, rng: &mut R) -> Result<Matrix<T>> {
        check_input(&self.spec, x)?;
        let kind = self.spec.activation;
        let mut blocks = Vec::with_capacity(self.params.blocks.len());
        let mut h = x.clone();
        for blk in &mut self.params.blocks {
            let z = conv2d_forward(&h, &blk.conv)?;
            let (normed, activated, bn) = match self.spec.block_order {
                BlockOrder::ActivationThenNorm => {
                    let a = apply_activation(&z, kind);
                    let (n, cache) = batchnorm_train(&a, &mut blk.bn)?;
                    (n, a, cache)
                }
                BlockOrder::NormThenActivation => {
                    let (n, cache) = batchnorm_train(&z, &mut blk.bn)?;
                    let a = apply_activation(&n, kind);
                    (a.clone(), a, cache)
                }
            };
            let (pooled, pool) = maxpool_forward(&normed)?;
            let (dropped, dropout) = dropout_forward(&pooled, self.spec.dropout, Mode::Train, rng)?;
            blocks.push(BlockTape {
                input: std::mem::replace(&mut h, dropped),
                activated,
                bn,
                pool,
                dropout,
            });
        }
        let features = gap_forward(&h);
        let probs = softmax(&dense_forward(&features, &self.params.dense)?);
        self.tape = Some(Box::new(Tape {
            blocks,
            last_shape: h.shape(),
            features,
            probs: probs.clone(),
        }));
        Ok(probs)
    }

    /// Gradients of mean cross-entropy against `onehot` for the last
    /// train-mode forward pass. Consumes the recorded tape.
    pub fn backward(&mut self, onehot: &Matrix<T>) -> Result<Gradients<T>> {
        let tape = self
            .tape
            .take()
            .ok_or_else(|| Error::State("backward called without a matching forward pass".into()))?;
        let kind = self.spec.activation;
        let dlogits = softmax_cross_entropy_grad(&tape.probs, onehot)?;
        let (dfeat, dense_grads) = dense_backward(&tape.features, &self.params.dense, &dlogits)?;
        let mut g = gap_backward(&dfeat, tape.last_shape)?;

        let mut per_block = Vec::with_capacity(tape.blocks.len());
        for (b, (rec, blk)) in tape.blocks.iter().zip(&self.params.blocks).enumerate().rev() {
            g = dropout_backward(&g, rec.dropout.as_ref())?;
            g = maxpool_backward(&g, &rec.pool)?;
            let act_grad = |g: &Tensor4<T>| {
                Tensor4::new(
                    g.shape(),
                    activation_backward(rec.activated.as_slice(), g.as_slice(), kind),
                )
            };
            let (dz, bn_grads) = match self.spec.block_order {
                BlockOrder::ActivationThenNorm => {
                    let (da, bn_grads) = batchnorm_backward(&g, &blk.bn, &rec.bn)?;
                    (act_grad(&da)?, bn_grads)
                }
                BlockOrder::NormThenActivation => {
                    let dn = act_grad(&g)?;
                    batchnorm_backward(&dn, &blk.bn, &rec.bn)?
                }
            };
            let (dx, conv_grads) = conv2d_backward(&rec.input, &blk.conv, &dz, b > 0)?;
            per_block.push((b, conv_grads, bn_grads));
            if let Some(dx) = dx {
                g = dx;
            }
        }
        per_block.reverse();

        let mut entries = Vec::with_capacity(per_block.len() * 4 + 2);
        for (b, conv, bn) in per_block {
            let p = format!("block{}", b + 1);
            entries.push((format!("{p}.conv.kernel"), conv.kernels));
            entries.push((format!("{p}.conv.bias"), conv.bias));
            entries.push((format!("{p}.bn.gamma"), bn.gamma));
            entries.push((format!("{p}.bn.beta"), bn.beta));
        }
        entries.push(("dense.weight".into(), dense_grads.weights));
        entries.push(("dense.bias".into(), dense_grads.bias));
        Ok(Gradients { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letters_shape_chain() {
        let chain = ModelSpec::letters().shape_chain().unwrap();
        let dims: Vec<Vec<usize>> = chain.iter().map(|s| s.dims.clone()).collect();
        assert_eq!(
            dims,
            vec![
                vec![64, 64, 1],
                vec![64, 64, 16],
                vec![32, 32, 16],
                vec![32, 32, 34],
                vec![16, 16, 34],
                vec![16, 16, 64],
                vec![8, 8, 64],
                vec![8, 8, 128],
                vec![4, 4, 128],
                vec![128],
                vec![28],
            ]
        );
        assert_eq!(ModelSpec::digits().shape_chain().unwrap().last().unwrap().dims, vec![10]);
    }

    #[test]
    fn indivisible_side_rejected() {
        assert!(ModelSpec::letters().with_input_side(40).shape_chain().is_err());
        assert!(ModelSpec::letters().with_input_side(32).shape_chain().is_ok());
    }

    #[test]
    fn forward_shapes_on_real_model() {
        let spec = ModelSpec::digits();
        let net = Network::new(spec.clone(), Params::<f32>::zeros(&spec).unwrap()).unwrap();
        let x = Tensor4::zeros(Shape4::new(2, 64, 64, 1).unwrap());
        let outs = block_outputs(&spec, net.params(), &x).unwrap();
        let shapes: Vec<Shape4> = outs.iter().map(Tensor4::shape).collect();
        assert_eq!(shapes[3], Shape4::new(2, 4, 4, 128).unwrap());
        let p = net.predict(&x).unwrap();
        assert_eq!((p.rows(), p.cols()), (2, 10));
    }

    #[test]
    fn backward_without_forward() {
        let spec = ModelSpec::digits().with_input_side(16);
        let mut net = Network::new(spec.clone(), Params::<f64>::zeros(&spec).unwrap()).unwrap();
        assert!(matches!(net.backward(&Matrix::zeros(1, 10)), Err(Error::State(_))));
    }

    #[test]
    fn cross_entropy_values() {
        let onehot = Matrix::from_rows(&[vec![0.0f64, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(cross_entropy_loss(&onehot, &onehot).unwrap().abs() < 1e-9);
        let uniform = Matrix::new(2, 3, vec![1.0 / 3.0; 6]).unwrap();
        assert!((cross_entropy_loss(&uniform, &onehot).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(cross_entropy_loss(&uniform, &Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn cross_entropy_random_batch() {
        // independently evaluated: mean of -ln(p_true) over the 4 rows
        let probs = Matrix::from_rows(&[
            vec![0.7f64, 0.2, 0.1],
            vec![0.1, 0.3, 0.6],
            vec![0.25, 0.5, 0.25],
            vec![0.05, 0.05, 0.9],
        ])
        .unwrap();
        let labels = [0usize, 2, 1, 0];
        let mut y = Matrix::zeros(4, 3);
        for (r, &l) in labels.iter().enumerate() {
            y.row_mut(r)[l] = 1.0;
        }
        let expected = 1.139_095_005_454_665;
        assert!((cross_entropy_loss(&probs, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn parameter_count_of_letters_model() {
        // conv: 9·cin·f + f; bn: 4f; dense: 128·28 + 28
        let spec = ModelSpec::letters();
        let mut cin = 1;
        let mut total = 0;
        for f in [16, 34, 64, 128] {
            total += 9 * cin * f + f + 4 * f;
            cin = f;
        }
        total += 128 * 28 + 28;
        assert_eq!(spec.parameter_count(), total);
    }
}
