//! Single-image recognition shared by the command line, the HTTP service and
//! the browser build.

use serde::{Deserialize, Serialize};

use crate::data::{preprocess_raw, LabelMap};
use crate::error::{Error, Result};
use crate::model::{block_outputs, predict_probs, ModelSpec, Params};
use crate::store::{load_model, LoadedModel, ModelManifest};
use crate::tensor::{Shape4, Tensor4};

pub const DEFAULT_TOPK: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub name: String,
    pub probability: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub class_index: usize,
    pub probabilities: Vec<f32>,
    /// Descending by probability; ties keep the lower class index first.
    pub topk: Vec<Ranked>,
}

/// A loaded model ready for eval-mode inference. Immutable once built.
#[derive(Debug, Clone)]
pub struct Recognizer {
    spec: ModelSpec,
    params: Params<f32>,
    manifest: ModelManifest,
    labels: LabelMap,
}

impl Recognizer {
    pub fn new(model: LoadedModel) -> Self {
        let labels = model.manifest.label_map();
        Recognizer {
            spec: model.spec,
            params: model.params,
            manifest: model.manifest,
            labels,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        load_model(path).map(Self::new)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn manifest(&self) -> &ModelManifest {
        &self.manifest
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn side(&self) -> usize {
        self.spec.input_side
    }

    pub fn expected_pixels(&self) -> usize {
        self.spec.input_side * self.spec.input_side * self.spec.input_channels
    }

    /// Validates an upright row-major image in `[0,1]`; values are clamped.
    pub fn image(&self, pixels: &[f64]) -> Result<Tensor4<f32>> {
        let want = self.expected_pixels();
        if pixels.len() != want {
            return Err(Error::Shape(format!(
                "expected {want} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("pixel {i} is not a finite number")));
        }
        let s = self.spec.input_side;
        let data = pixels.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
        Tensor4::new(Shape4::new(1, s, s, self.spec.input_channels)?, data)
    }

    pub fn predict(&self, pixels: &[f64], topk: usize) -> Result<Prediction> {
        let x = self.image(pixels)?;
        self.predict_tensor(&x, topk)
    }

    /// A dataset-style row of 0–255 values: orientation fix and upscale first.
    pub fn predict_dataset_row(&self, raw: &[u8], topk: usize) -> Result<Prediction> {
        let x = preprocess_raw::<f32>(raw, self.side())?;
        self.predict_tensor(&x, topk)
    }

    pub fn predict_tensor(&self, x: &Tensor4<f32>, topk: usize) -> Result<Prediction> {
        if topk == 0 {
            return Err(Error::Parameter("top-k must be at least 1".into()));
        }
        if x.shape().n != 1 {
            return Err(Error::Shape(format!("expected one image, got {}", x.shape().n)));
        }
        let probs = predict_probs(&self.spec, &self.params, x)?;
        let probabilities = probs.row(0).to_vec();
        let class_index = probs.argmax_rows()[0];
        let mut order: Vec<usize> = (0..probabilities.len()).collect();
        // stable sort keeps lower indices first among equal probabilities
        order.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]));
        let name = |i: usize| self.labels.name(i).map_or_else(|| i.to_string(), str::to_owned);
        Ok(Prediction {
            label: name(class_index),
            class_index,
            topk: order
                .iter()
                .take(topk)
                .map(|&i| Ranked {
                    name: name(i),
                    probability: probabilities[i],
                })
                .collect(),
            probabilities,
        })
    }

    /// Eval-mode output of every conv block for one image.
    pub fn feature_maps(&self, pixels: &[f64]) -> Result<Vec<Tensor4<f32>>> {
        let x = self.image(pixels)?;
        block_outputs(&self.spec, &self.params, &x)
    }
}
