//! JSON inference API over the saved recognizers.
//!
//! `POST /api/predict`, `GET /api/health` and `GET /api/models`, plus an
//! optional static directory mounted at `/app` for the drawing page.

mod registry;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use huruf::predict::{Prediction, DEFAULT_TOPK};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use registry::{ModelRegistry, RegistryError};

pub const DEFAULT_PORT: u16 = 8700;
pub const MAX_BODY_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictRequest {
    pub model: String,
    /// Upright, row-major, side² values in `[0,1]`.
    pub pixels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topk: Option<usize>,
}

pub type PredictResponse = Prediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthEntry {
    pub name: String,
    pub input_side: usize,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub models: Vec<HealthEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: String,
    pub input_side: usize,
    pub class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub models: Vec<CatalogEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{0}")]
    BadRequest(String),

    #[error("{1}")]
    Body(StatusCode, String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownModel(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Body(s, _) => *s,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        // malformed or mistyped bodies are plain client errors
        let status = match r.status() {
            StatusCode::UNPROCESSABLE_ENTITY => StatusCode::BAD_REQUEST,
            s => s,
        };
        ApiError::Body(status, r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Allow any origin. When off, no cross-origin headers are sent.
    pub permissive_cors: bool,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            permissive_cors: true,
            static_dir: None,
        }
    }
}

type Shared = Arc<ModelRegistry>;

pub fn router(models: ModelRegistry, config: &ServiceConfig) -> Router {
    let mut app = Router::new()
        .route("/api/predict", post(predict))
        .route("/api/health", get(health))
        .route("/api/models", get(models_catalog))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(Arc::new(models));
    if let Some(dir) = &config.static_dir {
        app = app.nest_service("/app", ServeDir::new(dir));
    }
    if config.permissive_cors {
        app = app.layer(CorsLayer::permissive());
    }
    app
}

/// Runs the same computation as the handler, without HTTP.
pub fn predict_request(models: &ModelRegistry, req: &PredictRequest) -> Result<PredictResponse, ApiError> {
    let model = models
        .get(&req.model)
        .ok_or_else(|| ApiError::UnknownModel(req.model.clone()))?;
    model
        .predict(&req.pixels, req.topk.unwrap_or(DEFAULT_TOPK))
        .map_err(|e| match e {
            huruf::Error::Shape(_) | huruf::Error::Parameter(_) => ApiError::BadRequest(e.to_string()),
            other => ApiError::Internal(other.to_string()),
        })
}

async fn predict(
    State(models): State<Shared>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let Json(req) = body?;
    let out = tokio::task::spawn_blocking(move || predict_request(&models, &req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(out))
}

pub fn health_document(models: &ModelRegistry) -> Health {
    Health {
        status: "ok".into(),
        models: models
            .iter()
            .map(|(name, m)| HealthEntry {
                name: name.to_owned(),
                input_side: m.side(),
                format_version: m.manifest().format_version,
            })
            .collect(),
    }
}

pub fn catalog(models: &ModelRegistry) -> Catalog {
    Catalog {
        models: models
            .iter()
            .map(|(name, m)| CatalogEntry {
                name: name.to_owned(),
                kind: m.manifest().kind.to_string(),
                input_side: m.side(),
                class_names: m.labels().names.clone(),
            })
            .collect(),
    }
}

async fn health(State(models): State<Shared>) -> Json<Health> {
    Json(health_document(&models))
}

async fn models_catalog(State(models): State<Shared>) -> Json<Catalog> {
    Json(catalog(&models))
}

/// Binds and serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, models: ModelRegistry, config: ServiceConfig) -> std::io::Result<()> {
    let app = router(models, &config);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(addr: SocketAddr, models: ModelRegistry, config: ServiceConfig) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, models, config))
}
