use std::path::PathBuf;

use huruf::data::LabelMap;
use huruf::model::{predict_probs, ModelSpec};
use huruf::store::{load_model, save_model, ModelMeta, BLOB_FILE};
use huruf::tensor::{Shape4, Tensor4};
use huruf::train::{init_params, InitKind};
use rand::{Rng, SeedableRng};

#[test]
fn reference_fixture_loads() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/tiny_model");
    let m = load_model(&dir).unwrap();
    let chain = m.spec.shape_chain().unwrap();
    assert_eq!(chain.last().unwrap().dims, vec![10]);
    assert_eq!(chain[chain.len() - 2].dims, vec![3]);
    assert_eq!(m.manifest.class_names[0], "sifr");
    // value i of the blob is ((37 i mod 101) − 50) / 100
    let v = |i: usize| (((i * 37) % 101) as f32 - 50.0) / 100.0;
    assert_eq!(m.params.blocks[0].conv.kernels.as_slice()[4], v(4));
    let dense_off = m.manifest.layers.iter().find(|l| l.name == "dense.weight").unwrap().offset;
    assert_eq!(m.params.dense.weights.get(1, 2), v(dense_off + 10 + 2));
    let x = Tensor4::filled(Shape4::new(2, 16, 16, 1).unwrap(), 0.5f32);
    let p = predict_probs(&m.spec, &m.params, &x).unwrap();
    let sum: f32 = p.row(0).iter().sum();
    assert!((sum - 1.0).abs() < 1e-5);
}

#[test]
fn predictions_bitwise_identical_after_reload() {
    let spec = ModelSpec::letters();
    let mut params = init_params::<f32>(&spec, InitKind::Normal, 42).unwrap();
    // non-trivial running statistics
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(0.0f32..0.1);
        }
    }
    let meta = ModelMeta { labels: LabelMap::letters(), training: None };
    let dir = tempfile::tempdir().unwrap();
    save_model(&params, &spec, &meta, dir.path()).unwrap();
    let loaded = load_model(dir.path()).unwrap();
    assert_eq!(loaded.spec, spec);
    assert_eq!(loaded.manifest.class_names.len(), 28);

    let shape = Shape4::new(100, 64, 64, 1).unwrap();
    let x = Tensor4::new(shape, (0..shape.len()).map(|_| rng.random::<f32>()).collect()).unwrap();
    let a = predict_probs(&spec, &params, &x).unwrap();
    let b = predict_probs(&loaded.spec, &loaded.params, &x).unwrap();
    let bits = |m: &huruf::Matrix<f32>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));

    let first = std::fs::read(dir.path().join(BLOB_FILE)).unwrap();
    let again = tempfile::tempdir().unwrap();
    save_model(&loaded.params, &loaded.spec, &meta, again.path()).unwrap();
    assert_eq!(std::fs::read(again.path().join(BLOB_FILE)).unwrap(), first);
}

/// Walks the architecture independently of the layout table.
fn count_by_walk(input_channels: usize, filters: &[usize], classes: usize) -> usize {
    let mut total = 0;
    let mut cin = input_channels;
    for &f in filters {
        total += 3 * 3 * cin * f + f; // conv
        total += 4 * f; // gamma, beta, running mean, running var
        cin = f;
    }
    total + cin * classes + classes
}

#[test]
fn manifest_states_parameter_count() {
    for (spec, labels) in [(ModelSpec::letters(), LabelMap::letters()), (ModelSpec::digits(), LabelMap::digits())] {
        let params = init_params::<f32>(&spec, InitKind::Uniform, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = save_model(&params, &spec, &ModelMeta { labels, training: None }, dir.path()).unwrap();
        assert_eq!(m.parameter_count, count_by_walk(1, &[16, 34, 64, 128], spec.classes));
        assert_eq!(std::fs::metadata(dir.path().join(BLOB_FILE)).unwrap().len() as usize, 4 * m.parameter_count);
    }
    assert_eq!(count_by_walk(1, &[16, 34, 64, 128], 28), 103_174);
}
