//! Seeded toy dataset: three classes of soft Gaussian strokes (horizontal,
//! vertical, round) with jittered position, size and intensity plus pixel
//! noise. Used for convergence checks and demos.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, LabelMap, Split};
use crate::error::Result;
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Shape4, Tensor4};

pub const BLOB_CLASS_NAMES: [&str; 3] = ["horizontal", "vertical", "round"];

#[derive(Debug, Clone, Copy)]
pub struct BlobConfig {
    pub samples: usize,
    pub side: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            samples: 300,
            side: 64,
            noise: 0.05,
            seed: 7,
        }
    }
}

/// Labels cycle 0,1,2 so every class gets `samples / 3` images (±1).
pub fn blob_dataset(cfg: &BlobConfig) -> Result<Dataset> {
    let mut rng = stream_rng(cfg.seed, Stream::Synthetic, 0);
    let noise = Normal::new(0.0, cfg.noise.max(0.0)).expect("finite noise level");
    let s = cfg.side as f64;
    let mut data = Vec::with_capacity(cfg.samples * cfg.side * cfg.side);
    let mut labels = Vec::with_capacity(cfg.samples);
    for i in 0..cfg.samples {
        let label = i % 3;
        let cy = s * rng.random_range(0.35..0.65);
        let cx = s * rng.random_range(0.35..0.65);
        let long = s * rng.random_range(0.18..0.26);
        let short = s * rng.random_range(0.04..0.07);
        let round = s * rng.random_range(0.09..0.13);
        let (sy, sx) = match label {
            0 => (short, long),
            1 => (long, short),
            _ => (round, round),
        };
        let amp = rng.random_range(0.7..1.0);
        for y in 0..cfg.side {
            for x in 0..cfg.side {
                let dy = (y as f64 + 0.5 - cy) / sy;
                let dx = (x as f64 + 0.5 - cx) / sx;
                let v = amp * (-0.5 * (dx * dx + dy * dy)).exp() + noise.sample(&mut rng);
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        labels.push(label);
    }
    let images = Tensor4::new(Shape4::new(cfg.samples, cfg.side, cfg.side, 1)?, data)?;
    let names = BLOB_CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    Dataset::new(images, labels, LabelMap::custom(names), Split::Train)
}
