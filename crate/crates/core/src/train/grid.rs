//! Exhaustive search over optimizer × initializer × activation, with a
//! line-delimited JSON checkpoint so an interrupted run can resume.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::layers::ActivationKind;
use crate::model::ModelSpec;
use crate::rng::{derive_seed, Stream};
use crate::train::{fit, EpochRecord, InitKind, OptimizerKind, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub index: usize,
    pub config: TrainConfig,
    pub val_accuracy: f64,
    /// Seconds.
    pub wall_time: f64,
    pub epoch_history: Vec<EpochRecord>,
    /// Set when the combo failed (for example diverged); the grid continues.
    pub error: Option<String>,
}

impl GridResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub checkpoint: Option<PathBuf>,
    /// Worker threads for independent combos.
    pub jobs: usize,
    /// Stop after this many newly trained combos.
    pub max_new: Option<usize>,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            checkpoint: None,
            jobs: 1,
            max_new: None,
        }
    }
}

/// The 24 combinations in optimizer-major order, each with its own derived
/// seed. Epochs, batch size and learning rate come from `base`.
pub fn grid_configs(base: &TrainConfig) -> Vec<TrainConfig> {
    let mut out = Vec::with_capacity(24);
    for optimizer in OptimizerKind::ALL {
        for initializer in InitKind::ALL {
            for activation in ActivationKind::ALL {
                let index = out.len() as u64;
                out.push(TrainConfig {
                    optimizer,
                    initializer,
                    activation,
                    seed: derive_seed(base.seed, Stream::Combo, index),
                    ..*base
                });
            }
        }
    }
    out
}

/// Sorts by validation accuracy (descending), failed combos last, ties by index.
pub fn rank(results: &mut [GridResult]) {
    results.sort_by(|a, b| {
        a.failed()
            .cmp(&b.failed())
            .then(b.val_accuracy.total_cmp(&a.val_accuracy))
            .then(a.index.cmp(&b.index))
    });
}

/// Complete records from a checkpoint file; a trailing partial line is cut off.
pub fn read_checkpoint(path: &Path) -> Result<Vec<GridResult>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::storage(path, e)),
    };
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        log::warn!("{}: dropping incomplete trailing record", path.display());
        let f = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::storage(path, e))?;
        f.set_len(complete as u64).map_err(|e| Error::storage(path, e))?;
    }
    text[..complete]
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::Checkpoint(format!("{} line {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

fn append(file: &Mutex<File>, path: &Path, r: &GridResult) -> Result<()> {
    let mut line = serde_json::to_string(r)?;
    line.push('\n');
    let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
    f.write_all(line.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::storage(path, e))
}

/// Runs `train_one(index, config) -> (val_accuracy, history)` for every combo
/// not already in the checkpoint and returns all results ranked.
pub fn run_grid<F>(configs: &[TrainConfig], opts: &GridOptions, train_one: F) -> Result<Vec<GridResult>>
where
    F: Fn(usize, &TrainConfig) -> Result<(f64, Vec<EpochRecord>)> + Sync,
{
    let mut done: Vec<GridResult> = Vec::new();
    if let Some(path) = &opts.checkpoint {
        for r in read_checkpoint(path)? {
            match configs.get(r.index) {
                Some(c) if *c == r.config => {
                    if !done.iter().any(|d| d.index == r.index) {
                        done.push(r);
                    }
                }
                _ => {
                    return Err(Error::Checkpoint(format!(
                        "{} holds combo {} with a configuration this grid does not contain",
                        path.display(),
                        r.index
                    )))
                }
            }
        }
        if !done.is_empty() {
            log::info!("resuming: {} of {} combos complete", done.len(), configs.len());
        }
    }

    let mut pending: Vec<usize> = (0..configs.len())
        .filter(|i| !done.iter().any(|d| d.index == *i))
        .collect();
    if let Some(limit) = opts.max_new {
        pending.truncate(limit);
    }

    let file = match &opts.checkpoint {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::storage(dir, e))?;
            }
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::storage(path, e))?;
            Some((Mutex::new(f), path.as_path()))
        }
        None => None,
    };

    let run_one = |index: usize| -> Result<GridResult> {
        let config = configs[index];
        let start = Instant::now();
        let outcome = train_one(index, &config);
        let wall_time = start.elapsed().as_secs_f64();
        let result = match outcome {
            Ok((val_accuracy, epoch_history)) => GridResult {
                index,
                config,
                val_accuracy,
                wall_time,
                epoch_history,
                error: None,
            },
            Err(e) => {
                log::warn!("combo {index} ({}) failed: {e}", config.summary());
                GridResult {
                    index,
                    config,
                    val_accuracy: 0.0,
                    wall_time,
                    epoch_history: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        };
        log::info!(
            "combo {:>2}: {} val_accuracy={:.4} ({:.1}s)",
            index,
            config.summary(),
            result.val_accuracy,
            wall_time
        );
        if let Some((f, path)) = &file {
            append(f, path, &result)?;
        }
        Ok(result)
    };

    let fresh = run_pending(&pending, opts.jobs, &run_one)?;
    done.extend(fresh);
    rank(&mut done);
    Ok(done)
}

#[cfg(feature = "parallel")]
fn run_pending<F>(pending: &[usize], jobs: usize, run_one: &F) -> Result<Vec<GridResult>>
where
    F: Fn(usize) -> Result<GridResult> + Sync,
{
    use rayon::prelude::*;
    if jobs <= 1 {
        return pending.iter().map(|&i| run_one(i)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| pending.par_iter().map(|&i| run_one(i)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_pending<F>(pending: &[usize], _jobs: usize, run_one: &F) -> Result<Vec<GridResult>>
where
    F: Fn(usize) -> Result<GridResult> + Sync,
{
    pending.iter().map(|&i| run_one(i)).collect()
}

/// Trains every combo of [`grid_configs`] from scratch on `train` and scores
/// it by eval-mode accuracy on `val`.
pub fn grid_search(
    spec: &ModelSpec,
    train: &Dataset,
    val: &Dataset,
    base: &TrainConfig,
    opts: &GridOptions,
) -> Result<Vec<GridResult>> {
    let configs = grid_configs(base);
    run_grid(&configs, opts, |_, cfg| {
        let out = fit::<f32>(spec, train, Some(val), cfg)?;
        let acc = match out.history.epochs.last() {
            Some(r) => r.val_accuracy.unwrap_or(0.0),
            None => crate::train::evaluate_loss_accuracy(&out.spec, &out.params, val)?.1,
        };
        Ok((acc, out.history.epochs))
    })
}
