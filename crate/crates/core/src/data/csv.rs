//! Plain comma-separated pixel and label files: no quoting, optional header
//! row, optional trailing newline.

use std::path::Path;

use crate::data::{orient_fix, upsample_nearest, Dataset, LabelMap, Split};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape4, Tensor4};

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Skip the first line of both files.
    pub header: bool,
    pub split: Option<Split>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::storage(path, e))
}

/// Data rows as `(1-based line number, text)`.
fn rows(text: &str, header: bool) -> Vec<(usize, &str)> {
    let mut out: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(usize::from(header))
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .collect();
    while out.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        out.pop();
    }
    out
}

/// Parses one row of 0–255 integer pixel values.
pub fn parse_pixel_row(line: &str) -> std::result::Result<Vec<u8>, String> {
    line.split(',')
        .enumerate()
        .map(|(col, field)| {
            let f = field.trim();
            f.parse::<u8>()
                .map_err(|_| format!("field {} (`{f}`) is not an integer in [0,255]", col + 1))
        })
        .collect()
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n && r > 0).then_some(r)
}

/// Turns one raw dataset row into an upright `(1, side, side, 1)` tensor in
/// `[0,1]`: decode row-major, orientation fix, rescale, integral upscale.
pub fn preprocess_raw<T: Scalar>(raw: &[u8], side: usize) -> Result<Tensor4<T>> {
    let src = exact_sqrt(raw.len()).ok_or_else(|| {
        Error::Shape(format!("{} pixels is not a square image", raw.len()))
    })?;
    let data = raw.iter().map(|&p| T::lit(p as f64 / 255.0)).collect();
    let img = Tensor4::new(Shape4::new(1, src, src, 1)?, data)?;
    upsample_nearest(&orient_fix(&img)?, side)
}

/// Loads an images/labels CSV pair.
///
/// The source side is inferred from the row length (it must be a perfect
/// square); when it differs from `side` the images are upscaled by an integral
/// nearest-neighbour factor. A labels file numbered `1..=K` is shifted to
/// `0..K` with a warning.
pub fn load_csv_pair(
    images_path: &Path,
    labels_path: &Path,
    map: &LabelMap,
    side: usize,
    opts: CsvOptions,
) -> Result<Dataset> {
    let image_text = read(images_path)?;
    let label_text = read(labels_path)?;
    let image_rows = rows(&image_text, opts.header);
    let label_rows = rows(&label_text, opts.header);
    let img_file = images_path.display().to_string();
    let lbl_file = labels_path.display().to_string();

    if image_rows.len() != label_rows.len() {
        return Err(Error::Pairing {
            images: image_rows.len(),
            labels: label_rows.len(),
        });
    }
    if image_rows.is_empty() {
        return Err(Error::Format {
            file: img_file,
            row: 0,
            message: "no data rows".into(),
        });
    }

    let mut source_side = None;
    let mut pixels: Vec<f32> = Vec::new();
    for &(line, text) in &image_rows {
        let row = parse_pixel_row(text).map_err(|message| Error::Format {
            file: img_file.clone(),
            row: line,
            message,
        })?;
        let expected = match source_side {
            Some(s) => s * s,
            None => {
                let s = exact_sqrt(row.len()).ok_or_else(|| Error::Format {
                    file: img_file.clone(),
                    row: line,
                    message: format!("{} fields is not a square image", row.len()),
                })?;
                source_side = Some(s);
                s * s
            }
        };
        if row.len() != expected {
            return Err(Error::Format {
                file: img_file.clone(),
                row: line,
                message: format!("expected {expected} pixel values, found {}", row.len()),
            });
        }
        pixels.extend(row.iter().map(|&p| p as f32 / 255.0));
    }
    let src = source_side.expect("at least one row");

    let mut labels = Vec::with_capacity(label_rows.len());
    for &(line, text) in &label_rows {
        let v: i64 = text.trim().parse().map_err(|_| Error::Format {
            file: lbl_file.clone(),
            row: line,
            message: format!("`{}` is not an integer label", text.trim()),
        })?;
        labels.push((line, v));
    }
    let k = map.class_count() as i64;
    let min = labels.iter().map(|l| l.1).min().unwrap_or(0);
    let max = labels.iter().map(|l| l.1).max().unwrap_or(0);
    let shift = if min == 1 && max == k {
        log::warn!("{lbl_file}: labels run 1..={k}; shifting to 0..{k}");
        1
    } else {
        0
    };
    let labels = labels
        .into_iter()
        .map(|(line, v)| {
            let l = v - shift;
            if (0..k).contains(&l) {
                Ok(l as usize)
            } else {
                Err(Error::Label(format!(
                    "{lbl_file} row {line}: label {v} outside [0, {k})"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let raw = Tensor4::new(Shape4::new(labels.len(), src, src, 1)?, pixels)?;
    let images = upsample_nearest(&orient_fix(&raw)?, side)?;
    Dataset::new(images, labels, map.clone(), opts.split.unwrap_or(Split::Train))
}
