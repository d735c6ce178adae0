//! Browser-independent half of the demo, so it can be tested natively.

use huruf::data::LabelMap;
use huruf::model::ModelSpec;
use huruf::predict::Recognizer;
use huruf::store::{decode_model, encode_model, ModelMeta};
use huruf::synthetic::{blob_dataset, BlobConfig, BLOB_CLASS_NAMES};
use huruf::tensor::Tensor4;
use huruf::train::TrainConfig;
use huruf::Result;

pub const TOY_SIDE: usize = 32;
pub const TOY_SAMPLES: usize = 150;
pub const TOY_EPOCHS: usize = 6;
const TOY_LEARNING_RATE: f64 = 0.003;

/// Small network for the stroke toy set; trains in seconds in a browser tab.
///
/// A run is only ~90 steps, so the batchnorm running averages use momentum
/// 0.9; at 0.99 they would still be dominated by their initial values.
pub fn toy_spec() -> ModelSpec {
    ModelSpec {
        filters: vec![8, 16, 32],
        classes: BLOB_CLASS_NAMES.len(),
        bn_momentum: 0.9,
        ..ModelSpec::letters()
    }
    .with_input_side(TOY_SIDE)
}

/// Trains on seeded horizontal/vertical/round strokes and returns the model
/// with its per-epoch train accuracy.
pub fn train_toy(epochs: usize, seed: u64) -> Result<(Recognizer, Vec<f64>)> {
    let ds = blob_dataset(&BlobConfig {
        samples: TOY_SAMPLES,
        side: TOY_SIDE,
        seed,
        ..Default::default()
    })?;
    let cfg = TrainConfig {
        epochs,
        batch_size: 10,
        learning_rate: TOY_LEARNING_RATE,
        seed,
        ..TrainConfig::default()
    };
    let out = huruf::train::fit::<f32>(&toy_spec(), &ds, None, &cfg)?;
    let meta = ModelMeta {
        labels: LabelMap::custom(BLOB_CLASS_NAMES.iter().map(|s| s.to_string()).collect()),
        training: None,
    };
    let (manifest, blob) = encode_model(&out.params, &out.spec, &meta)?;
    let json = serde_json::to_string(&manifest).expect("manifest serializes");
    let accuracy = out.history.epochs.iter().map(|r| r.accuracy).collect();
    Ok((Recognizer::new(decode_model(&json, &blob)?), accuracy))
}

pub fn recognizer_from_files(manifest_json: &str, blob: &[u8]) -> Result<Recognizer> {
    decode_model(manifest_json, blob).map(Recognizer::new)
}

/// Downsamples an RGBA canvas (light ink on a dark background) to a
/// `side × side` image in `[0,1]`.
///
/// The ink's bounding box is centred in a square 25% larger than its longer
/// edge, each output pixel averages the canvas pixels whose centres fall in
/// its cell, and the result is scaled so the darkest-ink pixel is 1. A blank
/// canvas gives all zeros.
pub fn rasterize(rgba: &[u8], width: usize, height: usize, side: usize) -> Vec<f64> {
    let mut out = vec![0.0; side * side];
    if side == 0 || width == 0 || height == 0 || rgba.len() < width * height * 4 {
        return out;
    }
    let ink = |x: usize, y: usize| {
        let p = &rgba[(y * width + x) * 4..][..4];
        let level = p[0].max(p[1]).max(p[2]) as f64 / 255.0;
        level * p[3] as f64 / 255.0
    };
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..height {
        for x in 0..width {
            if ink(x, y) > 0.0 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == usize::MAX {
        return out;
    }
    let extent = ((x1 - x0 + 1).max(y1 - y0 + 1) as f64 * 1.25).max(side as f64);
    let cx = (x0 + x1 + 1) as f64 / 2.0;
    let cy = (y0 + y1 + 1) as f64 / 2.0;
    let (left, top) = (cx - extent / 2.0, cy - extent / 2.0);
    let cell = extent / side as f64;

    let mut sums = vec![0.0; side * side];
    let mut counts = vec![0usize; side * side];
    for y in 0..height {
        let r = ((y as f64 + 0.5 - top) / cell).floor();
        if r < 0.0 || r >= side as f64 {
            continue;
        }
        for x in 0..width {
            let c = ((x as f64 + 0.5 - left) / cell).floor();
            if c < 0.0 || c >= side as f64 {
                continue;
            }
            let k = r as usize * side + c as usize;
            sums[k] += ink(x, y);
            counts[k] += 1;
        }
    }
    // cells outside the canvas, or not hit by any pixel centre, stay 0
    let area = cell * cell;
    for k in 0..out.len() {
        if counts[k] > 0 {
            out[k] = sums[k] / area.max(counts[k] as f64);
        }
    }
    let peak = out.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v = (*v / peak).clamp(0.0, 1.0));
    }
    out
}

/// One conv block's activations as 8-bit grayscale tiles, channel after
/// channel, each `side × side` and min-max scaled on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiles {
    pub side: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn tiles(map: &Tensor4<f32>) -> Tiles {
    let s = map.shape();
    let mut data = Vec::with_capacity(s.h * s.w * s.c);
    for c in 0..s.c {
        let vals: Vec<f32> = (0..s.h * s.w).map(|k| map.get(0, k / s.w, k % s.w, c)).collect();
        let lo = vals.iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = vals.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let span = hi - lo;
        data.extend(vals.iter().map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        }));
    }
    Tiles {
        side: s.h,
        channels: s.c,
        data,
    }
}
