//! Model directories: `manifest.json` (architecture, class names, tensor
//! layout, blob digest) next to `weights.bin` (every tensor in manifest order
//! as little-endian f32).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{LabelMap, ModelKind};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Params};
use crate::train::TrainConfig;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in values (not bytes).
    pub offset: usize,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub config: TrainConfig,
    pub epochs_run: usize,
    pub final_loss: Option<f64>,
    pub final_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub kind: ModelKind,
    pub input_side: usize,
    pub class_names: Vec<String>,
    pub spec: ModelSpec,
    pub layers: Vec<LayerEntry>,
    pub parameter_count: usize,
    pub training: Option<TrainingSummary>,
    pub blob: String,
    pub blob_sha256: String,
}

impl ModelManifest {
    pub fn label_map(&self) -> LabelMap {
        LabelMap {
            kind: self.kind,
            names: self.class_names.clone(),
        }
    }
}

/// Descriptive fields supplied by the caller when saving.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub labels: LabelMap,
    pub training: Option<TrainingSummary>,
}

#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub spec: ModelSpec,
    pub params: Params<f32>,
    pub manifest: ModelManifest,
}

fn layer_entries(spec: &ModelSpec) -> Vec<LayerEntry> {
    let mut offset = 0;
    spec.parameter_layout()
        .into_iter()
        .map(|s| {
            let e = LayerEntry {
                offset,
                trainable: s.trainable,
                shape: s.shape.clone(),
                name: s.name,
            };
            offset += s.shape.iter().product::<usize>();
            e
        })
        .collect()
}

/// Blob bytes and the manifest describing them.
pub fn encode_model(params: &Params<f32>, spec: &ModelSpec, meta: &ModelMeta) -> Result<(ModelManifest, Vec<u8>)> {
    params.check_against(spec)?;
    if meta.labels.class_count() != spec.classes {
        return Err(Error::Consistency(format!(
            "{} class names for a {}-class head",
            meta.labels.class_count(),
            spec.classes
        )));
    }
    let mut blob = Vec::with_capacity(spec.parameter_count() * 4);
    for t in params.tensors()? {
        for v in t {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = ModelManifest {
        format_version: FORMAT_VERSION,
        kind: meta.labels.kind,
        input_side: spec.input_side,
        class_names: meta.labels.names.clone(),
        spec: spec.clone(),
        layers: layer_entries(spec),
        parameter_count: spec.parameter_count(),
        training: meta.training.clone(),
        blob: BLOB_FILE.into(),
        blob_sha256: hex::encode(Sha256::digest(&blob)),
    };
    Ok((manifest, blob))
}

/// Validates a manifest against its blob and rebuilds the parameters.
pub fn decode_model(manifest_json: &str, blob: &[u8]) -> Result<LoadedModel> {
    let version: serde_json::Value = serde_json::from_str(manifest_json)?;
    let found = version.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    let manifest: ModelManifest = serde_json::from_str(manifest_json)?;
    let spec = manifest.spec.clone();
    spec.shape_chain()?;

    if manifest.input_side != spec.input_side {
        return Err(Error::Consistency(format!(
            "manifest input side {} disagrees with architecture side {}",
            manifest.input_side, spec.input_side
        )));
    }
    if manifest.class_names.len() != spec.classes {
        return Err(Error::Consistency(format!(
            "{} class names for a {}-class head",
            manifest.class_names.len(),
            spec.classes
        )));
    }
    if manifest.layers != layer_entries(&spec) || manifest.parameter_count != spec.parameter_count() {
        return Err(Error::Consistency(
            "layer list does not reproduce the architecture's tensor layout".into(),
        ));
    }
    let expected = manifest.parameter_count * 4;
    if blob.len() != expected {
        return Err(Error::BlobLength {
            expected,
            found: blob.len(),
        });
    }
    let digest = hex::encode(Sha256::digest(blob));
    if !digest.eq_ignore_ascii_case(&manifest.blob_sha256) {
        return Err(Error::Digest {
            expected: manifest.blob_sha256.clone(),
            found: digest,
        });
    }

    let mut params = Params::<f32>::zeros(&spec)?;
    let mut values = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    for t in params.tensors_mut() {
        for (dst, v) in t.iter_mut().zip(values.by_ref()) {
            *dst = v;
        }
    }
    params.check_against(&spec)?;
    Ok(LoadedModel {
        spec,
        params,
        manifest,
    })
}

/// Accepts either the model directory or its manifest file.
fn model_dir(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        path.to_path_buf()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::storage(&tmp, e))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::storage(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::storage(path, e))
}

/// Writes `dir/weights.bin` then `dir/manifest.json`, each via temp file and
/// rename.
pub fn save_model(params: &Params<f32>, spec: &ModelSpec, meta: &ModelMeta, dir: &Path) -> Result<ModelManifest> {
    let (manifest, blob) = encode_model(params, spec, meta)?;
    fs::create_dir_all(dir).map_err(|e| Error::storage(dir, e))?;
    write_atomic(&dir.join(BLOB_FILE), &blob)?;
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let dir = model_dir(path);
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = fs::read_to_string(&manifest_path).map_err(|e| Error::storage(&manifest_path, e))?;
    let blob_name = serde_json::from_str::<serde_json::Value>(&json)
        .ok()
        .and_then(|v| v.get("blob").and_then(|b| b.as_str()).map(str::to_owned))
        .unwrap_or_else(|| BLOB_FILE.into());
    if Path::new(&blob_name).components().count() != 1 {
        return Err(Error::Consistency(format!("blob name `{blob_name}` must be a plain file name")));
    }
    let blob_path = dir.join(blob_name);
    let blob = fs::read(&blob_path).map_err(|e| Error::storage(&blob_path, e))?;
    decode_model(&json, &blob)
}
