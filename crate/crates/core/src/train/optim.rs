//! Adam, RMSprop, Nadam and Adagrad, with the update forms and default
//! constants of the Keras/TensorFlow 2 optimizers.

use crate::error::{Error, Result};
use crate::model::{Gradients, ModelSpec, Params};
use crate::tensor::Scalar;
use crate::train::OptimizerKind;

pub const BETA_1: f64 = 0.9;
pub const BETA_2: f64 = 0.999;
pub const RHO: f64 = 0.9;
pub const EPSILON: f64 = 1e-7;
const NADAM_SCHEDULE_DECAY: f64 = 0.004;

/// Slot tensors and step counter of one optimizer instance.
///
/// `first` holds first moments (Adam, Nadam); `second` holds second moments
/// (Adam, Nadam, RMSprop) or the squared-gradient accumulator (Adagrad).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    kind: OptimizerKind,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
    momentum_product: f64,
}

impl<T: Scalar> OptimizerState<T> {
    /// Zeroed slots for tensors of the given lengths.
    pub fn new(kind: OptimizerKind, sizes: &[usize]) -> Self {
        let zeros = || sizes.iter().map(|&n| vec![T::zero(); n]).collect::<Vec<_>>();
        let first = match kind {
            OptimizerKind::Adam | OptimizerKind::Nadam => zeros(),
            _ => Vec::new(),
        };
        OptimizerState {
            kind,
            first,
            second: zeros(),
            step: 0,
            momentum_product: 1.0,
        }
    }

    pub fn for_spec(kind: OptimizerKind, spec: &ModelSpec) -> Self {
        let sizes: Vec<usize> = spec
            .parameter_layout()
            .iter()
            .filter(|s| s.trainable)
            .map(|s| s.len())
            .collect();
        Self::new(kind, &sizes)
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Second-moment / accumulator slot of tensor `i`.
    pub fn second_moment(&self, i: usize) -> &[T] {
        &self.second[i]
    }

    pub fn step(&mut self, params: &mut Params<T>, grads: &Gradients<T>, lr: f64) -> Result<()> {
        self.apply(params.trainable_mut(), grads, lr)
    }

    /// One update of every tensor in `params` (aligned with `grads.entries`).
    pub fn apply(&mut self, mut params: Vec<&mut [T]>, grads: &Gradients<T>, lr: f64) -> Result<()> {
        if params.len() != grads.entries.len() || params.len() != self.second.len() {
            return Err(Error::Shape(format!(
                "{} parameter tensors, {} gradients, {} optimizer slots",
                params.len(),
                grads.entries.len(),
                self.second.len()
            )));
        }
        for (i, (name, g)) in grads.entries.iter().enumerate() {
            if g.len() != params[i].len() || g.len() != self.second[i].len() {
                return Err(Error::Shape(format!(
                    "gradient `{name}` has {} values, parameter has {}",
                    g.len(),
                    params[i].len()
                )));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    tensor: name.clone(),
                });
            }
        }

        self.step += 1;
        let t = self.step as f64;
        let lr_t = T::lit(lr);
        let eps = T::lit(EPSILON);
        match self.kind {
            OptimizerKind::Adam => {
                let (b1, b2) = (T::lit(BETA_1), T::lit(BETA_2));
                let alpha = T::lit(lr * (1.0 - BETA_2.powf(t)).sqrt() / (1.0 - BETA_1.powf(t)));
                for (i, p) in params.iter_mut().enumerate() {
                    let g = &grads.entries[i].1;
                    let (m, v) = (&mut self.first[i], &mut self.second[i]);
                    for k in 0..g.len() {
                        m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                        v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                        p[k] -= alpha * m[k] / (v[k].sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Rmsprop => {
                let rho = T::lit(RHO);
                for (i, p) in params.iter_mut().enumerate() {
                    let g = &grads.entries[i].1;
                    let v = &mut self.second[i];
                    for k in 0..g.len() {
                        v[k] = rho * v[k] + (T::one() - rho) * g[k] * g[k];
                        p[k] -= lr_t * g[k] / (v[k] + eps).sqrt();
                    }
                }
            }
            OptimizerKind::Adagrad => {
                for (i, p) in params.iter_mut().enumerate() {
                    let g = &grads.entries[i].1;
                    let acc = &mut self.second[i];
                    for k in 0..g.len() {
                        acc[k] += g[k] * g[k];
                        p[k] -= lr_t * g[k] / (acc[k].sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Nadam => {
                let cache = |step: f64| {
                    BETA_1 * (1.0 - 0.5 * 0.96f64.powf(NADAM_SCHEDULE_DECAY * step))
                };
                let (mu_t, mu_next) = (cache(t), cache(t + 1.0));
                let schedule_new = self.momentum_product * mu_t;
                let schedule_next = schedule_new * mu_next;
                self.momentum_product = schedule_new;

                let (b1, b2) = (T::lit(BETA_1), T::lit(BETA_2));
                let g_scale = T::lit(1.0 / (1.0 - schedule_new));
                let m_scale = T::lit(1.0 / (1.0 - schedule_next));
                let v_scale = T::lit(1.0 / (1.0 - BETA_2.powf(t)));
                let (w_g, w_m) = (T::lit(1.0 - mu_t), T::lit(mu_next));
                for (i, p) in params.iter_mut().enumerate() {
                    let g = &grads.entries[i].1;
                    let (m, v) = (&mut self.first[i], &mut self.second[i]);
                    for k in 0..g.len() {
                        m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                        v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                        let m_bar = w_g * g[k] * g_scale + w_m * m[k] * m_scale;
                        p[k] -= lr_t * m_bar / ((v[k] * v_scale).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_grad(g: f64) -> Gradients<f64> {
        Gradients {
            entries: vec![("x".into(), vec![g])],
        }
    }

    fn step_scalar(state: &mut OptimizerState<f64>, x: &mut f64, g: f64, lr: f64) {
        state
            .apply(vec![std::slice::from_mut(x)], &scalar_grad(g), lr)
            .unwrap();
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        for kind in OptimizerKind::ALL {
            let mut s = OptimizerState::new(kind, &[1]);
            let mut x = 0.75;
            step_scalar(&mut s, &mut x, 0.0, 0.001);
            assert_eq!(x, 0.75, "{kind}");
        }
    }

    #[test]
    fn adam_first_step_by_hand() {
        // t=1: m = 0.1g, v = 0.001g², α = lr·√0.001/0.1
        // Δ = α·m/(√v + ε) = lr·g/(|g| + ε/√0.001)
        for g in [0.5, 3.0, 1e-3] {
            let mut s = OptimizerState::new(OptimizerKind::Adam, &[1]);
            let mut x = 1.0;
            step_scalar(&mut s, &mut x, g, 0.001);
            let expected = 1.0 - 0.001 * g / (g + EPSILON / 0.001f64.sqrt());
            assert!((x - expected).abs() < 1e-15, "g={g}: {x} vs {expected}");
            if g >= 0.5 {
                // ε is negligible: the first step has magnitude lr
                assert!((1.0 - x - 0.001).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn updates_oppose_gradient() {
        for kind in [OptimizerKind::Adam, OptimizerKind::Rmsprop, OptimizerKind::Adagrad, OptimizerKind::Nadam] {
            for g in [-2.0, -0.01, 0.3, 5.0] {
                let mut s = OptimizerState::new(kind, &[1]);
                let mut x = 0.0;
                for _ in 0..3 {
                    let before = x;
                    step_scalar(&mut s, &mut x, g, 0.01);
                    assert!((x - before) * g < 0.0, "{kind} g={g}");
                }
            }
        }
    }

    #[test]
    fn zero_learning_rate_is_bitwise_noop() {
        for kind in OptimizerKind::ALL {
            let mut s = OptimizerState::new(kind, &[3]);
            let mut p = vec![0.1, -2.5, 1e-30];
            let before = p.clone();
            let g = Gradients {
                entries: vec![("w".into(), vec![1.0, -3.0, 0.5])],
            };
            s.apply(vec![p.as_mut_slice()], &g, 0.0).unwrap();
            assert_eq!(p, before);
            assert_eq!(s.step_count(), 1);
        }
    }

    #[test]
    fn adagrad_accumulator_monotone() {
        let mut s = OptimizerState::new(OptimizerKind::Adagrad, &[2]);
        let mut p = vec![0.0, 0.0];
        let mut last = vec![0.0, 0.0];
        for t in 0..10 {
            let g = Gradients {
                entries: vec![("w".into(), vec![(t as f64).sin(), -0.5])],
            };
            s.apply(vec![p.as_mut_slice()], &g, 0.01).unwrap();
            let acc = s.second_moment(0).to_vec();
            assert!(acc.iter().zip(&last).all(|(a, b)| a >= b));
            last = acc;
        }
    }

    #[test]
    fn non_finite_gradient_named() {
        let mut s = OptimizerState::new(OptimizerKind::Adam, &[1, 2]);
        let (mut a, mut b) = (vec![0.0], vec![0.0, 0.0]);
        let g = Gradients {
            entries: vec![("ok".into(), vec![1.0]), ("dense.bias".into(), vec![0.0, f64::NAN])],
        };
        match s.apply(vec![a.as_mut_slice(), b.as_mut_slice()], &g, 0.1) {
            Err(Error::NonFiniteGradient { tensor }) => assert_eq!(tensor, "dense.bias"),
            other => panic!("{other:?}"),
        }
        assert_eq!(a, vec![0.0]);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn nadam_first_step_by_hand() {
        let g = 0.4;
        let mu1 = 0.9 * (1.0 - 0.5 * 0.96f64.powf(0.004));
        let mu2 = 0.9 * (1.0 - 0.5 * 0.96f64.powf(0.008));
        let g_prime = g / (1.0 - mu1);
        let m_prime = 0.1 * g / (1.0 - mu1 * mu2);
        let v_prime = 0.001 * g * g / 0.001;
        let m_bar = (1.0 - mu1) * g_prime + mu2 * m_prime;
        let expected = -0.002 * m_bar / (v_prime.sqrt() + EPSILON);
        let mut s = OptimizerState::new(OptimizerKind::Nadam, &[1]);
        let mut x = 0.0;
        step_scalar(&mut s, &mut x, g, 0.002);
        assert!((x - expected).abs() < 1e-15);
    }
}
