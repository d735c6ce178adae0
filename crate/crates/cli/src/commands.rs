use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use huruf::data::{load_csv_pair, parse_pixel_row, CsvOptions, Dataset, LabelMap, Split};
use huruf::eval::{evaluate_model, render_table};
use huruf::model::ModelSpec;
use huruf::predict::{Prediction, Recognizer};
use huruf::store::{load_model, save_model, ModelMeta, TrainingSummary};
use huruf::train::{fit_with, grid_search, EpochRecord, GridOptions, GridResult, TrainConfig};
use huruf_service::{serve_blocking, ModelRegistry, RegistryError, ServiceConfig};

use crate::{Command, DataArgs, EvalArgs, GridArgs, HyperArgs, PredictArgs, ServeArgs, TrainArgs, MODEL_DIR_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] huruf::Error),

    #[error(transparent)]
    Registry(#[from] RegistryError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("server: {0}")]
    Serve(std::io::Error),

    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::Serve(a) => serve(a),
    }
}

fn kind_dir(head: usize) -> &'static str {
    if head == 10 {
        "digits"
    } else {
        "letters"
    }
}

fn models_root() -> Result<PathBuf> {
    std::env::var_os(MODEL_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Usage(format!("no --model given and {MODEL_DIR_ENV} is not set")))
}

/// `--model` if given, else `$HURUF_MODEL_DIR/<letters|digits>`.
fn model_path(explicit: Option<PathBuf>, head: Option<usize>) -> Result<PathBuf> {
    match explicit {
        Some(p) => Ok(p),
        None => Ok(models_root()?.join(kind_dir(head.unwrap_or(28)))),
    }
}

fn load_split(images: &Path, labels: &Path, header: bool, map: &LabelMap, side: usize, split: Split) -> Result<Dataset> {
    let opts = CsvOptions {
        header,
        split: Some(split),
    };
    Ok(load_csv_pair(images, labels, map, side, opts)?)
}

/// Training rows plus the validation set the flags ask for, if any.
fn load_train_val(data: &DataArgs, hyper: &HyperArgs, map: &LabelMap) -> Result<(Dataset, Option<Dataset>)> {
    let all = load_split(&data.images, &data.labels, data.header, map, hyper.side, Split::Train)?;
    if let (Some(vi), Some(vl)) = (&hyper.val_images, &hyper.val_labels) {
        let val = load_split(vi, vl, data.header, map, hyper.side, Split::Test)?;
        return Ok((all, Some(val)));
    }
    if hyper.val_fraction > 0.0 {
        let (train, val) = all.holdout(hyper.val_fraction, hyper.seed)?;
        return Ok((train, Some(val)));
    }
    Ok((all, None))
}

fn epoch_line(r: &EpochRecord, total: usize) -> String {
    let mut line = format!("epoch {}/{total}  loss {:.4}  accuracy {:.4}", r.epoch, r.loss, r.accuracy);
    if let (Some(l), Some(a)) = (r.val_loss, r.val_accuracy) {
        line.push_str(&format!("  val_loss {l:.4}  val_accuracy {a:.4}"));
    }
    line
}

fn train(a: TrainArgs) -> Result<()> {
    let map = LabelMap::for_head(a.hyper.head)?;
    let out_dir = model_path(a.model.clone(), Some(a.hyper.head))?;
    let (train, val) = load_train_val(&a.data, &a.hyper, &map)?;
    log::info!(
        "{} training rows, {} validation rows, side {}",
        train.len(),
        val.as_ref().map_or(0, Dataset::len),
        a.hyper.side
    );
    let spec = ModelSpec::paper(a.hyper.head, a.activation).with_input_side(a.hyper.side);
    let cfg = TrainConfig {
        optimizer: a.optimizer,
        initializer: a.initializer,
        activation: a.activation,
        epochs: a.epochs,
        batch_size: a.hyper.batch,
        learning_rate: a.hyper.lr,
        seed: a.hyper.seed,
    };
    println!("{}", cfg.summary());
    if cfg.epochs == 0 {
        log::warn!("--epochs 0: saving the initialized, untrained model");
    }
    let out = fit_with::<f32>(&spec, &train, val.as_ref(), &cfg, |r| println!("{}", epoch_line(r, cfg.epochs)))?;
    let last = out.history.epochs.last();
    let meta = ModelMeta {
        labels: map,
        training: Some(TrainingSummary {
            config: cfg,
            epochs_run: out.history.epochs.len(),
            final_loss: last.map(|r| r.loss),
            final_accuracy: last.map(|r| r.accuracy),
        }),
    };
    let manifest = save_model(&out.params, &out.spec, &meta, &out_dir)?;
    log::info!("saved {} parameters to {}", manifest.parameter_count, out_dir.display());
    Ok(())
}

fn ranked_table(results: &[GridResult]) -> String {
    let mut s = format!(
        "{:>4}  {:>5}  {:<9}  {:<11}  {:<10}  {:>12}  {:>8}\n",
        "rank", "combo", "optimizer", "initializer", "activation", "val_accuracy", "seconds"
    );
    for (rank, r) in results.iter().enumerate() {
        s.push_str(&format!(
            "{:>4}  {:>5}  {:<9}  {:<11}  {:<10}  {:>12.4}  {:>8.1}",
            rank + 1,
            r.index,
            r.config.optimizer,
            r.config.initializer,
            r.config.activation,
            r.val_accuracy,
            r.wall_time
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("  failed: {e}"));
        }
        s.push('\n');
    }
    s
}

/// Each combo applies its own activation on top of this.
fn base_activation() -> huruf::layers::ActivationKind {
    TrainConfig::default().activation
}

fn gridsearch(a: GridArgs) -> Result<()> {
    let map = LabelMap::for_head(a.hyper.head)?;
    let (train, val) = load_train_val(&a.data, &a.hyper, &map)?;
    let val = val.ok_or_else(|| {
        CliError::Usage("grid search ranks on validation accuracy: set --val-fraction or --val-images".into())
    })?;
    let spec = ModelSpec::paper(a.hyper.head, base_activation()).with_input_side(a.hyper.side);
    let base = TrainConfig {
        epochs: a.epochs,
        batch_size: a.hyper.batch,
        learning_rate: a.hyper.lr,
        seed: a.hyper.seed,
        ..TrainConfig::grid_probe()
    };
    let opts = GridOptions {
        checkpoint: Some(a.checkpoint.clone()),
        jobs: a.jobs.max(1),
        max_new: a.max_new,
    };
    log::info!("grid search: {} training rows, {} validation rows, checkpoint {}", train.len(), val.len(), a.checkpoint.display());
    let results = grid_search(&spec, &train, &val, &base, &opts)?;
    print!("{}", ranked_table(&results));
    if results.len() < 24 {
        log::warn!("{} of 24 combos finished; rerun to resume from {}", results.len(), a.checkpoint.display());
    }
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&results).expect("grid results serialize");
        std::fs::write(path, json).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let path = model_path(a.model.clone(), a.head)?;
    let model = load_model(&path)?;
    if let Some(h) = a.head {
        if h != model.spec.classes {
            return Err(CliError::Usage(format!(
                "--head {h} does not match the model's {} classes",
                model.spec.classes
            )));
        }
    }
    let map = model.manifest.label_map();
    let ds = load_split(&a.data.images, &a.data.labels, a.data.header, &map, model.spec.input_side, Split::Test)?;
    let (report, cm) = evaluate_model(&model.params, &model.spec, &ds)?;
    print!("{}", render_table(&report));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&a.report, json).map_err(|source| CliError::Io {
        path: a.report.clone(),
        source,
    })?;
    log::info!("wrote report to {}", a.report.display());
    if let Some(p) = &a.confusion {
        std::fs::write(p, cm.to_csv(&map.names)).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        })?;
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn csv_row(path: &Path, row: usize, header: bool) -> Result<Vec<u8>> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| CliError::Usage(format!("{} is not UTF-8 text", path.display())))?;
    let line = text
        .lines()
        .skip(usize::from(header))
        .filter(|l| !l.trim().is_empty())
        .nth(row)
        .ok_or_else(|| CliError::Usage(format!("{} has no data row {row}", path.display())))?;
    parse_pixel_row(line).map_err(|message| {
        huruf::Error::Format {
            file: path.display().to_string(),
            row: row + 1 + usize::from(header),
            message,
        }
        .into()
    })
}

fn predict(a: PredictArgs) -> Result<()> {
    let path = model_path(a.model.clone(), a.head)?;
    let rec = Recognizer::load(&path)?;
    if let Some(h) = a.head {
        if h != rec.spec().classes {
            return Err(CliError::Usage(format!(
                "--head {h} does not match the model's {} classes",
                rec.spec().classes
            )));
        }
    }
    let p: Prediction = match (&a.input, &a.raw) {
        (Some(csv), _) => rec.predict_dataset_row(&csv_row(csv, a.row, a.header)?, a.topk)?,
        (None, Some(raw)) => {
            let px: Vec<f64> = read_file(raw)?.iter().map(|&b| f64::from(b) / 255.0).collect();
            rec.predict(&px, a.topk)?
        }
        (None, None) => return Err(CliError::Usage("one of --input or --raw is required".into())),
    };
    if a.json {
        println!("{}", serde_json::to_string(&p).expect("prediction serializes"));
    } else {
        for r in &p.topk {
            println!("{}\t{:.4}", r.name, r.probability);
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let root = match a.model {
        Some(p) => p,
        None => models_root()?,
    };
    let models = ModelRegistry::load_dir(&root)?;
    if models.is_empty() {
        log::warn!("no models found under {}", root.display());
    }
    let cfg = ServiceConfig {
        permissive_cors: !a.restrict_cors,
        static_dir: a.static_dir,
    };
    serve_blocking(SocketAddr::new(a.host, a.port), models, cfg).map_err(CliError::Serve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_dirs() {
        assert_eq!(kind_dir(10), "digits");
        assert_eq!(kind_dir(28), "letters");
    }

    #[test]
    fn explicit_model_wins() {
        let p = model_path(Some(PathBuf::from("m")), Some(10)).unwrap();
        assert_eq!(p, PathBuf::from("m"));
    }

    #[test]
    fn csv_row_skips_header_and_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.csv");
        std::fs::write(&f, "a,b,c,d\n1,2,3,4\n\n5,6,7,8\n").unwrap();
        assert_eq!(csv_row(&f, 1, true).unwrap(), vec![5, 6, 7, 8]);
        assert!(csv_row(&f, 2, true).is_err());
    }

    #[test]
    fn table_has_one_line_per_result() {
        let r = GridResult {
            index: 3,
            config: TrainConfig::default(),
            val_accuracy: 0.5,
            wall_time: 1.0,
            epoch_history: vec![],
            error: Some("diverged".into()),
        };
        let t = ranked_table(&[r.clone(), r]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.contains("failed: diverged"));
    }
}
