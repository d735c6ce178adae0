use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use huruf::data::ModelKind;
use huruf::predict::Recognizer;
use huruf::store::MANIFEST_FILE;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("model directory {0} does not exist")]
    MissingDir(PathBuf),

    #[error("cannot list {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to load model from {path}: {source}")]
    Model {
        path: PathBuf,
        source: huruf::Error,
    },

    #[error("two models claim the name `{0}`")]
    Duplicate(String),
}

/// Immutable set of recognizers keyed by the name clients send.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, Arc<Recognizer>>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, model: Recognizer) -> Result<(), RegistryError> {
        if self.models.contains_key(name) {
            return Err(RegistryError::Duplicate(name.to_owned()));
        }
        self.models.insert(name.to_owned(), Arc::new(model));
        Ok(())
    }

    /// Loads `dir` itself if it is a model directory, otherwise every
    /// immediate subdirectory holding a manifest. Digit and letter models are
    /// named by kind, anything else by its directory name.
    pub fn load_dir(dir: &Path) -> Result<Self, RegistryError> {
        if !dir.is_dir() {
            return Err(RegistryError::MissingDir(dir.to_owned()));
        }
        let mut candidates = Vec::new();
        if dir.join(MANIFEST_FILE).is_file() {
            candidates.push(dir.to_owned());
        } else {
            let io = |source| RegistryError::Io {
                path: dir.to_owned(),
                source,
            };
            for entry in std::fs::read_dir(dir).map_err(io)? {
                let path = entry.map_err(io)?.path();
                if path.join(MANIFEST_FILE).is_file() {
                    candidates.push(path);
                }
            }
            candidates.sort();
        }
        let mut registry = Self::new();
        for path in candidates {
            let model = Recognizer::load(&path).map_err(|source| RegistryError::Model {
                path: path.clone(),
                source,
            })?;
            let name = match model.manifest().kind {
                ModelKind::Custom => path
                    .file_name()
                    .map_or_else(|| "custom".to_owned(), |n| n.to_string_lossy().into_owned()),
                kind => kind.name().to_owned(),
            };
            log::info!(
                "loaded {name} from {} ({} classes, side {})",
                path.display(),
                model.labels().class_count(),
                model.side()
            );
            registry.insert(&name, model)?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Recognizer>> {
        self.models.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Recognizer)> {
        self.models.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
