//! WebAssembly bindings for the drawing demo in `www/`.

pub mod demo;

use huruf::predict::Recognizer;
use wasm_bindgen::prelude::*;

fn js(e: huruf::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Convert a canvas `ImageData` buffer into model input.
#[wasm_bindgen]
pub fn rasterize(rgba: &[u8], width: usize, height: usize, side: usize) -> Vec<f64> {
    demo::rasterize(rgba, width, height, side)
}

#[wasm_bindgen]
pub struct FeatureMaps {
    side: usize,
    channels: usize,
    data: Vec<u8>,
}

#[wasm_bindgen]
impl FeatureMaps {
    #[wasm_bindgen(getter)]
    pub fn side(&self) -> usize {
        self.side
    }

    #[wasm_bindgen(getter)]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `channels` grayscale tiles of `side²` bytes each.
    #[wasm_bindgen(getter)]
    pub fn data(&self) -> Vec<u8> {
        self.data.clone()
    }
}

#[wasm_bindgen]
pub struct Classifier {
    inner: Recognizer,
    accuracy: Vec<f64>,
}

#[wasm_bindgen]
impl Classifier {
    /// A model saved by `huruf train`: manifest text plus weight bytes.
    #[wasm_bindgen(js_name = fromFiles)]
    pub fn from_files(manifest: &str, weights: &[u8]) -> Result<Classifier, JsError> {
        Ok(Classifier {
            inner: demo::recognizer_from_files(manifest, weights).map_err(js)?,
            accuracy: Vec::new(),
        })
    }

    /// Trains the small stroke-direction model in the page.
    #[wasm_bindgen(js_name = trainToy)]
    pub fn train_toy(epochs: usize, seed: u32) -> Result<Classifier, JsError> {
        let (inner, accuracy) = demo::train_toy(epochs, seed as u64).map_err(js)?;
        Ok(Classifier { inner, accuracy })
    }

    #[wasm_bindgen(getter)]
    pub fn side(&self) -> usize {
        self.inner.side()
    }

    #[wasm_bindgen(getter)]
    pub fn kind(&self) -> String {
        self.inner.manifest().kind.to_string()
    }

    #[wasm_bindgen(getter, js_name = classNames)]
    pub fn class_names(&self) -> Vec<String> {
        self.inner.labels().names.clone()
    }

    #[wasm_bindgen(getter, js_name = blockCount)]
    pub fn block_count(&self) -> usize {
        self.inner.spec().filters.len()
    }

    /// Train accuracy per epoch; empty for loaded models.
    #[wasm_bindgen(getter, js_name = trainAccuracy)]
    pub fn train_accuracy(&self) -> Vec<f64> {
        self.accuracy.clone()
    }

    /// JSON `{label, class_index, probabilities, topk: [{name, probability}]}`.
    pub fn predict(&self, pixels: &[f64], topk: usize) -> Result<String, JsError> {
        let p = self.inner.predict(pixels, topk).map_err(js)?;
        Ok(serde_json::to_string(&p).expect("prediction serializes"))
    }

    #[wasm_bindgen(js_name = featureMaps)]
    pub fn feature_maps(&self, pixels: &[f64], block: usize) -> Result<FeatureMaps, JsError> {
        let maps = self.inner.feature_maps(pixels).map_err(js)?;
        let map = maps
            .get(block)
            .ok_or_else(|| JsError::new(&format!("block {block} of {}", maps.len())))?;
        let t = demo::tiles(map);
        Ok(FeatureMaps {
            side: t.side,
            channels: t.channels,
            data: t.data,
        })
    }
}
