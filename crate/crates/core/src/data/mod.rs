//! Datasets: CSV ingestion, orientation fix, one-hot targets and seeded batches.

mod csv;
mod labels;

pub use self::csv::{load_csv_pair, parse_pixel_row, preprocess_raw, CsvOptions};
pub use labels::{LabelMap, ModelKind, DIGIT_NAMES, LETTER_NAMES};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{Matrix, Scalar, Shape4, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Images `(n, side, side, 1)` scaled to `[0,1]`, with labels in `[0, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Tensor4<f32>,
    labels: Vec<usize>,
    label_map: LabelMap,
    split: Split,
}

impl Dataset {
    pub fn new(images: Tensor4<f32>, labels: Vec<usize>, label_map: LabelMap, split: Split) -> Result<Self> {
        let s = images.shape();
        if s.n != labels.len() {
            return Err(Error::Pairing {
                images: s.n,
                labels: labels.len(),
            });
        }
        if s.h != s.w || s.c != 1 {
            return Err(Error::Shape(format!(
                "dataset images must be square single-channel, got {s}"
            )));
        }
        let k = label_map.class_count();
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::Label(format!(
                "sample {i} has label {l}, outside [0, {k})"
            )));
        }
        Ok(Dataset {
            images,
            labels,
            label_map,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn side(&self) -> usize {
        self.images.shape().h
    }

    pub fn images(&self) -> &Tensor4<f32> {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn class_names(&self) -> &[String] {
        &self.label_map.names
    }

    pub fn class_count(&self) -> usize {
        self.label_map.class_count()
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_count()];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// Samples at `indices` (in that order) and their one-hot targets.
    pub fn gather<T: Scalar>(&self, indices: &[usize]) -> Result<(Tensor4<T>, Matrix<T>)> {
        let s = self.images.shape();
        let per = s.sample_len();
        let mut x = Vec::with_capacity(indices.len() * per);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= s.n {
                return Err(Error::Shape(format!("sample index {i} out of range (n = {})", s.n)));
            }
            x.extend(self.images.sample(i).iter().map(|&v| T::lit(v as f64)));
            labels.push(self.labels[i]);
        }
        let shape = Shape4::new(indices.len(), s.h, s.w, s.c)?;
        Ok((Tensor4::new(shape, x)?, one_hot(&labels, self.class_count())?))
    }

    /// Subset in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let (x, _) = self.gather::<f32>(indices)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(x, labels, self.label_map.clone(), self.split)
    }

    /// Seeded split into `(rest, held_out)` with `round(fraction·n)` held out
    /// (at least one sample on each side).
    pub fn holdout(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let n = self.len();
        if n < 2 || !(0.0 < fraction && fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "cannot hold out fraction {fraction} of {n} samples"
            )));
        }
        let k = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut stream_rng(seed, Stream::Holdout, 0));
        let (held, rest) = idx.split_at(k);
        let (mut held, mut rest) = (held.to_vec(), rest.to_vec());
        held.sort_unstable();
        rest.sort_unstable();
        Ok((self.subset(&rest)?, self.subset(&held)?))
    }
}

/// `n × class_count` binary matrix with a single 1 per row.
pub fn one_hot<T: Scalar>(labels: &[usize], class_count: usize) -> Result<Matrix<T>> {
    let mut m = Matrix::zeros(labels.len(), class_count);
    for (r, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::Label(format!(
                "label {l} outside [0, {class_count})"
            )));
        }
        m.row_mut(r)[l] = T::one();
    }
    Ok(m)
}

/// Horizontal flip followed by a 90° counter-clockwise rotation, which turns
/// row-major-decoded dataset rows upright. The composition is the h/w
/// transpose.
pub fn orient_fix<T: Scalar>(img: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = img.shape();
    if s.h != s.w {
        return Err(Error::Shape(format!(
            "orientation fix needs square images, got {}x{}",
            s.h, s.w
        )));
    }
    Ok(img.transpose_hw())
}

/// Nearest-neighbour upscaling by an integral factor.
pub fn upsample_nearest<T: Scalar>(img: &Tensor4<T>, side: usize) -> Result<Tensor4<T>> {
    let s = img.shape();
    if s.h == side && s.w == side {
        return Ok(img.clone());
    }
    if s.h != s.w || side < s.h || !side.is_multiple_of(s.h) {
        return Err(Error::Shape(format!(
            "cannot scale {}x{} images to {side}x{side} by an integral factor",
            s.h, s.w
        )));
    }
    let f = side / s.h;
    let shape = Shape4::new(s.n, side, side, s.c)?;
    Ok(Tensor4::from_fn(shape, |n, i, j, c| img.get(n, i / f, j / f, c)))
}

/// Seeded permutation of `0..n` for one epoch (Fisher–Yates).
pub fn epoch_permutation(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, Stream::Shuffle, epoch as u64));
    idx
}

#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub indices: Vec<usize>,
    pub x: Tensor4<T>,
    pub y: Matrix<T>,
}

pub struct BatchIter<'a, T> {
    ds: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Iterator for BatchIter<'_, T> {
    type Item = Batch<T>;

    fn next(&mut self) -> Option<Batch<T>> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let indices = self.order[self.pos..end].to_vec();
        self.pos = end;
        // indices come from a permutation of 0..n
        let (x, y) = self.ds.gather(&indices).expect("permutation indices are in range");
        Some(Batch { indices, x, y })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.pos).div_ceil(self.batch_size);
        (left, Some(left))
    }
}

impl<T: Scalar> ExactSizeIterator for BatchIter<'_, T> {}

/// Consecutive batches of a seeded permutation; the last batch may be short.
///
/// # Panics
/// If `batch_size` is zero.
pub fn batch_iter<T: Scalar>(ds: &Dataset, batch_size: usize, seed: u64, epoch: usize) -> BatchIter<'_, T> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    BatchIter {
        ds,
        order: epoch_permutation(ds.len(), seed, epoch),
        batch_size,
        pos: 0,
        _marker: std::marker::PhantomData,
    }
}
