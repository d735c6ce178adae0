use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use huruf::data::LabelMap;
use huruf::model::ModelSpec;
use huruf::predict::{Prediction, Recognizer};
use huruf::store::{save_model, ModelMeta};
use huruf::train::{init_params, InitKind};
use huruf_service::{router, Catalog, Health, ModelRegistry, ServiceConfig, MAX_BODY_BYTES};
use tower::ServiceExt;

fn fixture_model() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/tiny_model")
}

/// A models directory with the reference digits model and a small letters model.
fn models_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let digits = dir.path().join("digits");
    std::fs::create_dir(&digits).unwrap();
    for f in ["manifest.json", "weights.bin"] {
        std::fs::copy(fixture_model().join(f), digits.join(f)).unwrap();
    }
    let spec = ModelSpec {
        filters: vec![2, 4],
        classes: 28,
        ..ModelSpec::letters()
    }
    .with_input_side(16);
    let params = init_params::<f32>(&spec, InitKind::Uniform, 3).unwrap();
    let meta = ModelMeta {
        labels: LabelMap::letters(),
        training: None,
    };
    save_model(&params, &spec, &meta, &dir.path().join("letters")).unwrap();
    dir
}

fn app(dir: &Path) -> Router {
    router(ModelRegistry::load_dir(dir).unwrap(), &ServiceConfig::default())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>, header::HeaderMap) {
    let mut req = Request::builder().method(method).uri(uri).header(header::ORIGIN, "http://localhost:5173");
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let (parts, body) = resp.into_parts();
    (parts.status, body.collect().await.unwrap().to_bytes().to_vec(), parts.headers)
}

fn predict_body(model: &str, pixels: &[f64], topk: Option<usize>) -> String {
    serde_json::json!({ "model": model, "pixels": pixels, "topk": topk }).to_string()
}

#[tokio::test]
async fn predict_matches_direct_recognizer() {
    let dir = models_dir();
    let app = app(dir.path());
    let pixels: Vec<f64> = (0..256).map(|i| ((i * 29) % 17) as f64 / 16.0).collect();
    let (status, body, _) = call(&app, Method::POST, "/api/predict", Some(predict_body("digits", &pixels, None))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let got: Prediction = serde_json::from_slice(&body).unwrap();
    let want = Recognizer::load(&fixture_model()).unwrap().predict(&pixels, 3).unwrap();
    assert_eq!(got, want);
    let bits = |p: &Prediction| p.probabilities.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&got), bits(&want));
    let sum: f64 = got.probabilities.iter().map(|&v| v as f64).sum();
    assert!((sum - 1.0).abs() < 1e-5);
    assert_eq!(got.topk.len(), 3);
}

#[tokio::test]
async fn blank_canvas_and_full_topk() {
    let dir = models_dir();
    let app = app(dir.path());
    let (status, body, _) = call(&app, Method::POST, "/api/predict", Some(predict_body("letters", &[0.0; 256], Some(40)))).await;
    assert_eq!(status, StatusCode::OK);
    let p: Prediction = serde_json::from_slice(&body).unwrap();
    assert_eq!(p.probabilities.len(), 28);
    assert_eq!(p.topk.len(), 28);
    assert!(p.topk.windows(2).all(|w| w[0].probability >= w[1].probability));
    assert_eq!(p.label, p.topk[0].name);
}

#[tokio::test]
async fn validation_errors() {
    let dir = models_dir();
    let app = app(dir.path());

    let (status, body, _) = call(&app, Method::POST, "/api/predict", Some(predict_body("letters", &[0.0; 255], None))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(String::from_utf8_lossy(&body).contains("expected 256"));

    let (status, body, _) = call(&app, Method::POST, "/api/predict", Some(predict_body("runes", &[0.0; 256], None))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(String::from_utf8_lossy(&body).contains("runes"));

    // JSON has no NaN; non-finite values arrive as unparseable numbers
    let (status, _, _) = call(&app, Method::POST, "/api/predict", Some(r#"{"model":"digits","pixels":[NaN]}"#.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, Method::POST, "/api/predict", Some(r#"{"model":"digits","pixels":[1e999]}"#.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _, _) = call(&app, Method::POST, "/api/predict", Some(r#"{"pixels":[0.1]}"#.into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _, _) = call(&app, Method::POST, "/api/predict", Some(predict_body("digits", &[0.0; 256], Some(0)))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn oversized_body_rejected() {
    let dir = models_dir();
    let app = app(dir.path());
    let big = format!(r#"{{"model":"digits","pixels":[{}0]}}"#, "0,".repeat(MAX_BODY_BYTES / 2 + 1));
    assert!(big.len() > MAX_BODY_BYTES);
    let (status, _, _) = call(&app, Method::POST, "/api/predict", Some(big)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn health_lists_models_and_is_stable() {
    let dir = models_dir();
    let app = app(dir.path());
    let (status, first, _) = call(&app, Method::GET, "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, second, _) = call(&app, Method::GET, "/api/health", None).await;
    assert_eq!(first, second);
    let h: Health = serde_json::from_slice(&first).unwrap();
    let names: Vec<_> = h.models.iter().map(|m| (m.name.as_str(), m.input_side, m.format_version)).collect();
    assert_eq!(names, vec![("digits", 16, 1), ("letters", 16, 1)]);

    let empty = tempfile::tempdir().unwrap();
    let (status, body, _) = call(&router(ModelRegistry::load_dir(empty.path()).unwrap(), &ServiceConfig::default()), Method::GET, "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(serde_json::from_slice::<Health>(&body).unwrap().models.is_empty());
}

#[tokio::test]
async fn catalog_carries_class_tables() {
    let dir = models_dir();
    let (status, body, headers) = call(&app(dir.path()), Method::GET, "/api/models", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers.get(header::ACCESS_CONTROL_ALLOW_ORIGIN).unwrap(), "*");
    let c: Catalog = serde_json::from_slice(&body).unwrap();
    let letters = c.models.iter().find(|m| m.name == "letters").unwrap();
    let digits = c.models.iter().find(|m| m.name == "digits").unwrap();
    assert_eq!(letters.class_names.len(), 28);
    assert_eq!(letters.class_names[0], "alef");
    assert_eq!(letters.class_names[27], "yeh");
    assert_eq!(digits.class_names.len(), 10);
    assert_eq!(digits.class_names[0], "sifr");
    // re-serializing the parsed catalog reproduces the body
    assert_eq!(serde_json::to_vec(&c).unwrap(), body);
}

#[tokio::test]
async fn cors_can_be_restricted() {
    let dir = models_dir();
    let cfg = ServiceConfig {
        permissive_cors: false,
        ..Default::default()
    };
    let app = router(ModelRegistry::load_dir(dir.path()).unwrap(), &cfg);
    let (status, _, headers) = call(&app, Method::GET, "/api/models", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(headers.get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
}

#[tokio::test]
async fn static_page_mounted() {
    let dir = models_dir();
    let www = tempfile::tempdir().unwrap();
    std::fs::write(www.path().join("index.html"), "<!doctype html><title>draw</title>").unwrap();
    let cfg = ServiceConfig {
        static_dir: Some(www.path().to_owned()),
        ..Default::default()
    };
    let app = router(ModelRegistry::load_dir(dir.path()).unwrap(), &cfg);
    let (status, body, _) = call(&app, Method::GET, "/app/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8_lossy(&body).contains("draw"));
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let dir = models_dir();
    let app = app(dir.path());
    let body = predict_body("letters", &vec![0.3; 256], Some(5));
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (app, body) = (app.clone(), body.clone());
            tokio::spawn(async move { call(&app, Method::POST, "/api/predict", Some(body)).await.1 })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn registry_rejects_missing_dir() {
    let err = ModelRegistry::load_dir(Path::new("/nonexistent/huruf-models")).unwrap_err();
    assert!(err.to_string().contains("does not exist"));
}

#[test]
fn registry_loads_single_model_dir() {
    let r = ModelRegistry::load_dir(&fixture_model()).unwrap();
    assert_eq!(r.len(), 1);
    assert!(r.get("digits").is_some());
}
