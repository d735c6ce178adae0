//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. The full-scale dataset criterion runs only when AHCD_DIR and/or
//! MADBASE_DIR point at the public CSV releases, and prints SKIP otherwise.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use huruf::data::{batch_iter, load_csv_pair, orient_fix, CsvOptions, Dataset, LabelMap, Split};
use huruf::eval::{class_metrics, confusion, evaluate_model, ConfusionMatrix};
use huruf::gradcheck::check_all;
use huruf::layers::{conv2d_forward, maxpool_forward, ConvParams};
use huruf::model::{predict_probs, ModelSpec};
use huruf::store::{load_model, save_model, ModelMeta};
use huruf::synthetic::{blob_dataset, BlobConfig};
use huruf::tensor::{Shape4, Tensor4};
use huruf::train::{
    fit, grid_configs, grid_search, init_params, read_checkpoint, GridOptions, InitKind, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_TOLERANCE: f64 = 1e-4;
const GRAD_SEEDS: u64 = 20;
const GRAD_BUDGET_SECS: f64 = 60.0;
const ORACLE_CASES: usize = 50;
const CONVERGENCE_TARGET: f64 = 0.95;
const CONVERGENCE_EPOCHS: usize = 20;
const CONVERGENCE_BUDGET_SECS: f64 = 300.0;
const AHCD_TARGET: f64 = 0.9693;
const AHCD_BAND: f64 = 0.015;
const MADBASE_TARGET: f64 = 0.9935;
const MADBASE_BAND: f64 = 0.005;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion = fn() -> Outcome;

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    let mut checked = 0;
    for seed in 0..GRAD_SEEDS {
        match check_all(seed) {
            Ok(checks) => {
                for c in checks {
                    checked += 1;
                    if !c.passes(GRAD_TOLERANCE) {
                        failures.push(format!("seed {seed} {} {:.2e}", c.name, c.relative_error));
                    }
                    if !c.vanishing() && c.relative_error > worst.0 {
                        worst = (c.relative_error, c.name.clone());
                    }
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass_if(
        failures.is_empty() && secs < GRAD_BUDGET_SECS,
        format!(
            "{checked} tensor checks over {GRAD_SEEDS} seeds, worst relative error {:.2e} ({}), {secs:.1}s{}",
            worst.0,
            worst.1,
            if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
        ),
    )
}

fn int_tensor(rng: &mut ChaCha8Rng, s: Shape4) -> Tensor4<f64> {
    Tensor4::from_fn(s, |_, _, _, _| rng.random_range(-4i32..=4) as f64)
}

#[allow(clippy::needless_range_loop)]
fn conv_oracle(x: &Tensor4<f64>, k: &Tensor4<f64>, bias: &[f64]) -> Vec<f64> {
    let s = x.shape();
    let ks = k.shape();
    let mut out = Vec::with_capacity(s.n * s.h * s.w * ks.n);
    for n in 0..s.n {
        for i in 0..s.h {
            for j in 0..s.w {
                for o in 0..ks.n {
                    let mut acc = bias[o];
                    for di in 0..3 {
                        for dj in 0..3 {
                            let (y, x_) = (i as isize + di as isize - 1, j as isize + dj as isize - 1);
                            if y < 0 || x_ < 0 || y >= s.h as isize || x_ >= s.w as isize {
                                continue;
                            }
                            for c in 0..s.c {
                                acc += x.get(n, y as usize, x_ as usize, c) * k.get(o, di, dj, c);
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

fn pool_oracle(x: &Tensor4<f64>) -> Vec<f64> {
    let s = x.shape();
    let mut out = Vec::new();
    for n in 0..s.n {
        for i in 0..s.h / 2 {
            for j in 0..s.w / 2 {
                for c in 0..s.c {
                    let mut m = f64::NEG_INFINITY;
                    for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        m = m.max(x.get(n, 2 * i + di, 2 * j + dj, c));
                    }
                    out.push(m);
                }
            }
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut conv_ok, mut pool_ok) = (0, 0);
    for _ in 0..ORACLE_CASES {
        let n = rng.random_range(1..=3);
        let h = 2 * rng.random_range(1..=5);
        let w = 2 * rng.random_range(1..=5);
        let cin = rng.random_range(1..=4);
        let cout = rng.random_range(1..=5);
        let x = int_tensor(&mut rng, Shape4::new(n, h, w, cin).unwrap());
        let k = int_tensor(&mut rng, Shape4::new(cout, 3, 3, cin).unwrap());
        let bias: Vec<f64> = (0..cout).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let p = ConvParams::new(k.clone(), bias.clone()).unwrap();
        if conv2d_forward(&x, &p).unwrap().as_slice() == conv_oracle(&x, &k, &bias).as_slice() {
            conv_ok += 1;
        }
        let xp = Tensor4::from_fn(x.shape(), |_, _, _, _| rng.random_range(-1.0..1.0));
        if maxpool_forward(&xp).unwrap().0.as_slice() == pool_oracle(&xp).as_slice() {
            pool_ok += 1;
        }
    }
    pass_if(
        conv_ok == ORACLE_CASES && pool_ok == ORACLE_CASES,
        format!("conv {conv_ok}/{ORACLE_CASES}, maxpool {pool_ok}/{ORACLE_CASES} bitwise equal to nested loops"),
    )
}

fn shape_chain() -> Outcome {
    let letters = ModelSpec::letters().shape_chain().unwrap();
    let digits = ModelSpec::digits().shape_chain().unwrap();
    let tail: Vec<Vec<usize>> = letters[letters.len() - 3..].iter().map(|s| s.dims.clone()).collect();
    let ok = letters[0].dims == vec![64, 64, 1]
        && tail == vec![vec![4, 4, 128], vec![128], vec![28]]
        && digits.last().unwrap().dims == vec![10];
    pass_if(
        ok,
        format!(
            "letters {} ; digits head {:?}",
            letters.iter().map(|s| format!("{:?}", s.dims)).collect::<Vec<_>>().join(" -> "),
            digits.last().unwrap().dims
        ),
    )
}

fn metrics_oracle() -> Outcome {
    // 120 test images per letter: 105 hits, 15 misses, no false alarms
    let cm = ConfusionMatrix::from_counts(vec![vec![105, 15], vec![0, 120]]).unwrap();
    let za = class_metrics(&cm, &[]).classes[0].clone();
    let row = format!("{:.2} / {:.2} / {:.2}", za.precision, za.recall, za.f1);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let k = 28;
    let truth: Vec<usize> = (0..1000).map(|_| rng.random_range(0..k)).collect();
    let pred: Vec<usize> = truth
        .iter()
        .map(|&t| if rng.random::<f64>() < 0.7 { t } else { rng.random_range(0..k) })
        .collect();
    let report = class_metrics(&confusion(&truth, &pred, k).unwrap(), &[]);
    let mut mismatches = 0;
    for c in 0..k {
        let tp = truth.iter().zip(&pred).filter(|(t, p)| **t == c && **p == c).count() as u64;
        let fp = truth.iter().zip(&pred).filter(|(t, p)| **t != c && **p == c).count() as u64;
        let fneg = truth.iter().zip(&pred).filter(|(t, p)| **t == c && **p != c).count() as u64;
        let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fneg == 0 { 0.0 } else { tp as f64 / (tp + fneg) as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let m = &report.classes[c];
        if (m.precision, m.recall, m.f1, m.support) != (p, r, f, tp + fneg) {
            mismatches += 1;
        }
    }
    pass_if(
        row == "1.00 / 0.88 / 0.93" && mismatches == 0,
        format!("Za row {row} from [[105,15],[0,120]]; brute-force recount on 1000 pairs: {mismatches} mismatching classes"),
    )
}

fn synthetic_convergence() -> Outcome {
    let start = Instant::now();
    let ds = blob_dataset(&BlobConfig::default()).unwrap();
    let spec = ModelSpec { classes: 3, ..ModelSpec::letters() };
    let cfg = TrainConfig { epochs: CONVERGENCE_EPOCHS, ..TrainConfig::default() };
    let out = match fit::<f32>(&spec, &ds, None, &cfg) {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(format!("training failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let reached = out.history.epochs.iter().find(|e| e.accuracy >= CONVERGENCE_TARGET).map(|e| e.epoch);
    // a deterministic run reproduces its own prefix exactly
    let rerun = fit::<f32>(&spec, &ds, None, &TrainConfig { epochs: 3, ..cfg }).unwrap();
    let deterministic = rerun.history.epochs[..] == out.history.epochs[..3];
    let last = out.history.epochs.last().map_or(0.0, |e| e.accuracy);
    pass_if(
        reached.is_some() && deterministic && secs < CONVERGENCE_BUDGET_SECS,
        format!(
            "{} on 300 blobs: {:.1}% train accuracy at epoch {}, {:.1}% after {CONVERGENCE_EPOCHS}; rerun identical: {deterministic}; {secs:.0}s",
            cfg.summary(),
            100.0 * reached.and_then(|e| out.history.epochs.get(e - 1)).map_or(0.0, |r| r.accuracy),
            reached.map_or("never".into(), |e| e.to_string()),
            100.0 * last,
        ),
    )
}

fn grid_integrity() -> Outcome {
    let base = TrainConfig { epochs: 1, batch_size: 10, ..TrainConfig::grid_probe() };
    let configs = grid_configs(&base);
    let distinct: HashSet<_> = configs.iter().map(|c| (c.optimizer, c.initializer, c.activation)).collect();

    let ds = blob_dataset(&BlobConfig { samples: 30, side: 16, ..Default::default() }).unwrap();
    let (train, val) = ds.holdout(0.2, 1).unwrap();
    let spec = ModelSpec { filters: vec![4, 8], classes: 3, ..ModelSpec::letters() }.with_input_side(16);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.jsonl");
    let interrupted = GridOptions { checkpoint: Some(path.clone()), max_new: Some(5), ..Default::default() };
    let first = grid_search(&spec, &train, &val, &base, &interrupted).unwrap();
    let before = std::fs::read_to_string(&path).unwrap();
    let resumed = GridOptions { checkpoint: Some(path.clone()), ..Default::default() };
    let all = grid_search(&spec, &train, &val, &base, &resumed).unwrap();
    let after = std::fs::read_to_string(&path).unwrap();
    let records = read_checkpoint(&path).unwrap();
    let indices: HashSet<_> = records.iter().map(|r| r.index).collect();
    let sorted = all.windows(2).all(|w| w[0].val_accuracy >= w[1].val_accuracy || w[1].failed());
    let ok = configs.len() == 24
        && distinct.len() == 24
        && first.len() == 5
        && after.starts_with(&before)
        && records.len() == 24
        && indices.len() == 24
        && all.len() == 24
        && sorted;
    pass_if(
        ok,
        format!(
            "{} configs ({} distinct); interrupted after {}, resume trained {} more, checkpoint holds {} unique combos, ranked: {sorted}",
            configs.len(),
            distinct.len(),
            first.len(),
            records.len() - first.len(),
            indices.len()
        ),
    )
}

fn fixture(set: &str, side: usize) -> Dataset {
    let d = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let map = if set == "letters" { LabelMap::letters() } else { LabelMap::digits() };
    load_csv_pair(&d.join(format!("{set}_images.csv")), &d.join(format!("{set}_labels.csv")), &map, side, CsvOptions::default())
        .unwrap()
}

fn round_trips() -> Outcome {
    let spec = ModelSpec::letters();
    let params = init_params::<f32>(&spec, InitKind::Normal, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_model(&params, &spec, &ModelMeta { labels: LabelMap::letters(), training: None }, dir.path()).unwrap();
    let loaded = load_model(dir.path()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape4::new(100, 64, 64, 1).unwrap();
    let x = Tensor4::new(shape, (0..shape.len()).map(|_| rng.random::<f32>()).collect()).unwrap();
    let a = predict_probs(&spec, &params, &x).unwrap();
    let b = predict_probs(&loaded.spec, &loaded.params, &x).unwrap();
    let bitwise = a.as_slice().iter().zip(b.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits());

    let mut union_ok = true;
    for ds in [fixture("letters", 64), fixture("digits", 32), blob_dataset(&BlobConfig { samples: 101, side: 16, ..Default::default() }).unwrap()] {
        for epoch in 0..3 {
            let mut seen: Vec<(usize, Vec<f32>)> = batch_iter::<f32>(&ds, 20, 11, epoch)
                .flat_map(|b| b.indices.iter().enumerate().map(|(k, &i)| (i, b.x.sample(k).to_vec())).collect::<Vec<_>>())
                .collect();
            seen.sort_by_key(|s| s.0);
            union_ok &= seen.len() == ds.len()
                && seen.iter().enumerate().all(|(i, (j, px))| i == *j && px.as_slice() == ds.images().sample(i));
        }
    }

    let mut involution = true;
    for side in [1, 2, 5, 32, 64] {
        let t = Tensor4::from_fn(Shape4::new(3, side, side, 2).unwrap(), |_, _, _, _| rng.random::<f32>());
        involution &= orient_fix(&orient_fix(&t).unwrap()).unwrap() == t;
    }
    pass_if(
        bitwise && union_ok && involution,
        format!("save/load predictions bitwise on 100 inputs: {bitwise}; batch union reproduces data: {union_ok}; orientation fix involution: {involution}"),
    )
}

fn find_csv(dir: &Path, split: &str, what: &str) -> Option<PathBuf> {
    std::fs::read_dir(dir).ok()?.filter_map(|e| e.ok()).map(|e| e.path()).find(|p| {
        let name = p.file_name().map(|n| n.to_string_lossy().to_lowercase()).unwrap_or_default();
        name.ends_with(".csv") && name.contains(split) && name.contains(what)
    })
}

/// Smallest multiple of the source side that is at least 64 and divisible by 16.
fn model_side(images: &Path) -> Option<usize> {
    let first = std::fs::read_to_string(images).ok()?.lines().next()?.split(',').count();
    let src = (first as f64).sqrt().round() as usize;
    (1..).map(|k| k * src).find(|s| *s >= 64 && s % 16 == 0)
}

fn full_scale_run(var: &str, map: LabelMap, target: f64, band: f64) -> Option<Result<(f64, String), String>> {
    let dir = PathBuf::from(std::env::var_os(var)?);
    Some((|| {
        let files = ["train", "test"].map(|s| (find_csv(&dir, s, "image"), find_csv(&dir, s, "label")));
        let [(Some(tri), Some(trl)), (Some(tei), Some(tel))] = files else {
            return Err(format!("{var}: expected train/test image and label CSVs in {}", dir.display()));
        };
        let side = model_side(&tri).ok_or("cannot infer source side")?;
        let opts = |split| CsvOptions { header: false, split: Some(split) };
        let train = load_csv_pair(&tri, &trl, &map, side, opts(Split::Train)).map_err(|e| e.to_string())?;
        let test = load_csv_pair(&tei, &tel, &map, side, opts(Split::Test)).map_err(|e| e.to_string())?;
        let spec = ModelSpec::paper(map.class_count(), huruf::layers::ActivationKind::Relu).with_input_side(side);
        let out = fit::<f32>(&spec, &train, None, &TrainConfig::default()).map_err(|e| e.to_string())?;
        let (report, _) = evaluate_model(&out.params, &out.spec, &test).map_err(|e| e.to_string())?;
        Ok((
            report.accuracy,
            format!("{var}: test accuracy {:.2}% (target {:.2}% ± {:.1} points, side {side})", 100.0 * report.accuracy, 100.0 * target, 100.0 * band),
        ))
    })())
}

fn full_scale() -> Outcome {
    let runs = [
        full_scale_run("AHCD_DIR", LabelMap::letters(), AHCD_TARGET, AHCD_BAND).map(|r| (r, AHCD_TARGET, AHCD_BAND)),
        full_scale_run("MADBASE_DIR", LabelMap::digits(), MADBASE_TARGET, MADBASE_BAND).map(|r| (r, MADBASE_TARGET, MADBASE_BAND)),
    ];
    if runs.iter().all(Option::is_none) {
        return Outcome::Skip("set AHCD_DIR and/or MADBASE_DIR to the CSV releases to run".into());
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for (r, target, band) in runs.into_iter().flatten() {
        match r {
            Ok((acc, line)) => {
                ok &= (acc - target).abs() <= band;
                lines.push(line);
            }
            Err(e) => {
                ok = false;
                lines.push(e);
            }
        }
    }
    pass_if(ok, lines.join("; "))
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("gradient correctness", gradient_correctness),
        ("oracle equivalence", oracle_equivalence),
        ("shape chain", shape_chain),
        ("metrics oracle", metrics_oracle),
        ("synthetic convergence", synthetic_convergence),
        ("grid integrity", grid_integrity),
        ("round trips", round_trips),
        ("full-scale accuracy (optional)", full_scale),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
