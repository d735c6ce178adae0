use std::path::PathBuf;

use huruf::data::{batch_iter, load_csv_pair, orient_fix, CsvOptions, Dataset, LabelMap};
use huruf::tensor::Tensor4;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn load(set: &str, side: usize) -> Dataset {
    let map = if set == "letters" { LabelMap::letters() } else { LabelMap::digits() };
    let d = data_dir();
    load_csv_pair(
        &d.join(format!("{set}_images.csv")),
        &d.join(format!("{set}_labels.csv")),
        &map,
        side,
        CsvOptions::default(),
    )
    .unwrap()
}

/// `(set, row, y, x, value)` lines of the sidecar file.
fn sidecar() -> Vec<(String, usize, usize, usize, f64)> {
    std::fs::read_to_string(data_dir().join("expected_values.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn fixture_values_match_sidecar() {
    let probes = sidecar();
    assert!(probes.len() >= 80);
    for set in ["letters", "digits"] {
        let native = load(set, 32);
        let upscaled = load(set, 64);
        for (_, n, y, x, v) in probes.iter().filter(|p| p.0 == set) {
            assert_eq!(native.images().get(*n, *y, *x, 0), *v as f32, "{set} {n} {y} {x}");
            for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                assert_eq!(upscaled.images().get(*n, 2 * y + dy, 2 * x + dx, 0), *v as f32);
            }
        }
    }
}

#[test]
fn fixture_shapes_and_labels() {
    let letters = load("letters", 64);
    assert_eq!(letters.len(), 8);
    assert_eq!(letters.class_count(), 28);
    assert_eq!(letters.class_names()[letters.labels()[0]], "alef");
    let digits = load("digits", 64);
    assert_eq!(digits.class_count(), 10);
    assert_eq!(digits.class_names()[0], "sifr");
    for ds in [&letters, &digits] {
        let px = ds.images().as_slice();
        assert!(px.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(px.iter().any(|&v| v > 0.5), "double rescaling");
    }
}

#[test]
fn alef_is_upright_vertical_stroke() {
    let ds = load("letters", 32);
    let img = ds.images();
    let ink: Vec<(usize, usize)> = (0..32)
        .flat_map(|y| (0..32).map(move |x| (y, x)))
        .filter(|&(y, x)| img.get(0, y, x, 0) > 0.0)
        .collect();
    let rows: std::collections::BTreeSet<_> = ink.iter().map(|p| p.0).collect();
    let cols: std::collections::BTreeSet<_> = ink.iter().map(|p| p.1).collect();
    assert!(rows.len() > 20 && cols.len() <= 2, "rows {rows:?} cols {cols:?}");
}

#[test]
fn orientation_fix_is_an_involution_on_fixtures() {
    for set in ["letters", "digits"] {
        let ds = load(set, 32);
        let imgs: &Tensor4<f32> = ds.images();
        assert_eq!(&orient_fix(&orient_fix(imgs).unwrap()).unwrap(), imgs);
    }
}

#[test]
fn batches_reassemble_fixture() {
    let ds = load("digits", 32);
    for epoch in 0..3 {
        let mut rows: Vec<(usize, Vec<f32>, Vec<f32>)> = Vec::new();
        for b in batch_iter::<f32>(&ds, 3, 5, epoch) {
            for (k, &i) in b.indices.iter().enumerate() {
                rows.push((i, b.x.sample(k).to_vec(), b.y.row(k).to_vec()));
            }
        }
        rows.sort_by_key(|r| r.0);
        assert_eq!(rows.len(), 8);
        for (i, x, y) in rows {
            assert_eq!(x, ds.images().sample(i));
            assert_eq!(y.iter().position(|&v| v == 1.0), Some(ds.labels()[i]));
        }
    }
}
