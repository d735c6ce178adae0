//! Confusion matrices, per-class precision/recall/F1 and report rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{predict_probs, ModelSpec, Params};
use crate::tensor::{Matrix, Scalar, Shape4, Tensor4};

/// Samples per eval-mode forward chunk.
const EVAL_CHUNK: usize = 256;

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, k: usize) -> u64 {
        self.counts[k][k]
    }

    pub fn support(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn predicted(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    pub fn false_positives(&self, k: usize) -> u64 {
        self.predicted(k) - self.true_positives(k)
    }

    pub fn false_negatives(&self, k: usize) -> u64 {
        self.support(k) - self.true_positives(k)
    }

    /// CSV with a header row of predicted-class names and one row per true class.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            out.push_str(names.get(t).map_or("", String::as_str));
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Label(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (i, (&t, &p)) in truth.iter().zip(predicted).enumerate() {
        if t >= k || p >= k {
            return Err(Error::Label(format!(
                "sample {i}: pair ({t}, {p}) outside [0, {k})"
            )));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub index: usize,
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class metrics; a zero denominator yields 0. Classes are named
/// positionally from `names` (or by index when the table is short).
pub fn class_metrics(cm: &ConfusionMatrix, names: &[String]) -> ClassReport {
    let k = cm.class_count();
    let classes: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = cm.true_positives(c);
            let precision = ratio(tp, cm.predicted(c));
            let recall = ratio(tp, cm.support(c));
            ClassMetrics {
                index: c,
                name: names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                precision,
                recall,
                f1: f1(precision, recall),
                support: cm.support(c),
            }
        })
        .collect();
    let total = cm.total();
    let trace: u64 = (0..k).map(|c| cm.true_positives(c)).sum();
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if k == 0 {
            0.0
        } else {
            classes.iter().map(f).sum::<f64>() / k as f64
        }
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            0.0
        } else {
            classes.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
        }
    };
    ClassReport {
        accuracy: ratio(trace, total),
        macro_avg: Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
        total,
        classes,
    }
}

/// Text table with 2-decimal metrics and an accuracy/macro/weighted footer.
pub fn render_table(report: &ClassReport) -> String {
    let width = report
        .classes
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0)
        .max(12);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5}  {:<width$}  {:>9}  {:>6}  {:>8}  {:>7}",
        "class", "name", "precision", "recall", "f1-score", "support"
    );
    for c in &report.classes {
        let _ = writeln!(
            out,
            "{:>5}  {:<width$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>7}",
            c.index, c.name, c.precision, c.recall, c.f1, c.support
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{:>5}  {:<width$}  {:>9}  {:>6}  {:>8.2}  {:>7}",
        "", "accuracy", "", "", report.accuracy, report.total
    );
    for (label, a) in [("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)] {
        let _ = writeln!(
            out,
            "{:>5}  {:<width$}  {:>9.2}  {:>6.2}  {:>8.2}  {:>7}",
            "", label, a.precision, a.recall, a.f1, report.total
        );
    }
    out
}

/// Eval-mode class probabilities for every sample, in dataset order.
pub fn predict_dataset<T: Scalar>(spec: &ModelSpec, params: &Params<T>, ds: &Dataset) -> Result<Matrix<T>> {
    if ds.class_count() != spec.classes {
        return Err(Error::Shape(format!(
            "dataset has {} classes, model head has {}",
            ds.class_count(),
            spec.classes
        )));
    }
    let s = ds.images().shape();
    let per = s.sample_len();
    let chunks: Vec<(usize, usize)> = (0..ds.len())
        .step_by(EVAL_CHUNK)
        .map(|start| (start, (start + EVAL_CHUNK).min(ds.len())))
        .collect();
    let parts = crate::parallel::map_indices(chunks.len(), |i| {
        let (a, b) = chunks[i];
        let data = ds.images().as_slice()[a * per..b * per]
            .iter()
            .map(|&v| T::lit(v as f64))
            .collect();
        let x = Tensor4::new(Shape4::new(b - a, s.h, s.w, s.c)?, data)?;
        predict_probs(spec, params, &x)
    });
    let mut out = Vec::with_capacity(ds.len() * spec.classes);
    for p in parts {
        out.extend_from_slice(p?.as_slice());
    }
    Matrix::new(ds.len(), spec.classes, out)
}

pub fn predict_labels<T: Scalar>(spec: &ModelSpec, params: &Params<T>, ds: &Dataset) -> Result<Vec<usize>> {
    Ok(predict_dataset(spec, params, ds)?.argmax_rows())
}

pub fn evaluate_model<T: Scalar>(
    params: &Params<T>,
    spec: &ModelSpec,
    ds: &Dataset,
) -> Result<(ClassReport, ConfusionMatrix)> {
    let predicted = predict_labels(spec, params, ds)?;
    let cm = confusion(ds.labels(), &predicted, spec.classes)?;
    Ok((class_metrics(&cm, ds.class_names()), cm))
}
