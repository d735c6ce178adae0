//! `huruf`: train, grid-search, evaluate, predict and serve.
//!
//! Data goes to stdout, diagnostics to stderr (`RUST_LOG` adjusts verbosity).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use huruf::layers::ActivationKind;
use huruf::train::{
    InitKind, OptimizerKind, DEFAULT_BATCH_SIZE, DEFAULT_LEARNING_RATE, DEFAULT_SEED, GRID_EPOCHS,
};

pub const MODEL_DIR_ENV: &str = "HURUF_MODEL_DIR";

#[derive(Debug, Parser)]
#[command(name = "huruf", version, about = "Arabic handwritten character and digit recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and save it.
    Train(TrainArgs),
    /// Train all 24 optimizer/initializer/activation combos and rank them.
    Gridsearch(GridArgs),
    /// Class-wise report of a saved model on a labelled dataset.
    Eval(EvalArgs),
    /// Classify one image.
    Predict(PredictArgs),
    /// Serve saved models over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Pixel CSV, one image per row.
    #[arg(long)]
    pub images: PathBuf,
    /// Label CSV, one class index per row.
    #[arg(long)]
    pub labels: PathBuf,
    /// Skip a header line in both files.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Output classes: 10 for digits, 28 for letters.
    #[arg(long, default_value_t = 28, value_parser = parse_head)]
    pub head: usize,
    /// Network input side; source images are upscaled by an integer factor.
    #[arg(long, default_value_t = 64)]
    pub side: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Fraction of the training rows held out for validation (0 disables).
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    /// Validation pixel CSV (for example the test split); replaces the holdout.
    #[arg(long, requires = "val_labels")]
    pub val_images: Option<PathBuf>,
    #[arg(long, requires = "val_images")]
    pub val_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Output model directory [default: $HURUF_MODEL_DIR/<letters|digits>].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = huruf::train::DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value = "adam")]
    pub optimizer: OptimizerKind,
    #[arg(long = "init", default_value = "uniform")]
    pub initializer: InitKind,
    #[arg(long, default_value = "relu")]
    pub activation: ActivationKind,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Epochs per combo.
    #[arg(long, default_value_t = GRID_EPOCHS)]
    pub epochs: usize,
    /// JSON-lines checkpoint; finished combos found here are not retrained.
    #[arg(long, default_value = "gridsearch.jsonl")]
    pub checkpoint: PathBuf,
    /// Combos trained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Stop after training this many new combos.
    #[arg(long)]
    pub max_new: Option<usize>,
    /// Write the ranked results as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model directory or manifest [default: $HURUF_MODEL_DIR/<letters|digits>].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Expected head size; must agree with the model.
    #[arg(long, value_parser = parse_head)]
    pub head: Option<usize>,
    /// Structured report (JSON).
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Confusion matrix (CSV).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model directory or manifest [default: $HURUF_MODEL_DIR/<letters|digits>].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Expected head size; also picks the default model directory.
    #[arg(long, value_parser = parse_head)]
    pub head: Option<usize>,
    /// Pixel CSV in dataset orientation; `--row` picks the line.
    #[arg(long, conflicts_with = "raw", required_unless_present = "raw")]
    pub input: Option<PathBuf>,
    /// Zero-based data row of `--input`.
    #[arg(long, default_value_t = 0, requires = "input")]
    pub row: usize,
    /// Skip a header line of `--input`.
    #[arg(long, requires = "input")]
    pub header: bool,
    /// Binary file of side² upright 0-255 bytes.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, default_value_t = huruf::predict::DEFAULT_TOPK)]
    pub topk: usize,
    /// Print the full prediction as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of model directories [default: $HURUF_MODEL_DIR].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = huruf_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Send no cross-origin headers.
    #[arg(long)]
    pub restrict_cors: bool,
    /// Static files to serve under /app.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

fn parse_head(s: &str) -> Result<usize, String> {
    match s {
        "10" => Ok(10),
        "28" => Ok(28),
        _ => Err("head must be 10 (digits) or 28 (letters)".into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
