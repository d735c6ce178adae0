use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::Result;
use crate::model::{ModelSpec, Params};
use crate::rng::{stream_rng, Stream};
use crate::tensor::Scalar;
use crate::train::InitKind;

pub const INIT_LIMIT: f64 = 0.05;
pub const INIT_STDDEV: f64 = 0.05;

/// Weight sampler for the two initializer kinds.
pub enum WeightSampler {
    Uniform(Uniform<f64>),
    Normal(Normal<f64>),
}

impl WeightSampler {
    pub fn new(kind: InitKind) -> Self {
        match kind {
            InitKind::Uniform => WeightSampler::Uniform(
                Uniform::new_inclusive(-INIT_LIMIT, INIT_LIMIT).expect("valid bounds"),
            ),
            InitKind::Normal => {
                WeightSampler::Normal(Normal::new(0.0, INIT_STDDEV).expect("valid stddev"))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightSampler::Uniform(d) => d.sample(rng),
            WeightSampler::Normal(d) => d.sample(rng),
        }
    }
}

/// Conv kernels and dense weights drawn i.i.d.; biases and beta zero, gamma
/// one, running statistics neutral. Deterministic in `(spec, kind, seed)`.
pub fn init_params<T: Scalar>(spec: &ModelSpec, kind: InitKind, seed: u64) -> Result<Params<T>> {
    let mut params = Params::<T>::zeros(spec)?;
    let sampler = WeightSampler::new(kind);
    let mut rng = stream_rng(seed, Stream::Init, 0);
    for blk in &mut params.blocks {
        for w in blk.conv.kernels.as_mut_slice() {
            *w = T::lit(sampler.sample(&mut rng));
        }
    }
    for w in params.dense.weights.as_mut_slice() {
        *w = T::lit(sampler.sample(&mut rng));
    }
    Ok(params)
}
