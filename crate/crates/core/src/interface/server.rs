//! HTTP generation service. The model is loaded once and shared read-only;
//! until it is in place every model-backed endpoint answers 503.

use std::future::IntoFuture;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde_json::json;

use super::api;
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Clone, Default)]
pub struct AppState {
    model: Arc<OnceLock<Model>>,
}

impl AppState {
    pub fn loading() -> Self {
        Self::default()
    }

    pub fn ready(model: Model) -> Self {
        let s = Self::default();
        s.install(model);
        s
    }

    /// Publishes the model. Later calls are ignored.
    pub fn install(&self, model: Model) {
        let _ = self.model.set(model);
    }

    pub fn model(&self) -> Option<&Model> {
        self.model.get()
    }
}

fn json_response(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(err: &Error) -> Response {
    let status = StatusCode::from_u16(api::status_code(err)).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    if status.is_server_error() && status != StatusCode::SERVICE_UNAVAILABLE {
        log::error!("{err}");
    }
    json_response(status, api::error_body(err).to_string().into_bytes())
}

async fn health() -> Response {
    json_response(StatusCode::OK, json!({"status": "ok"}).to_string().into_bytes())
}

async fn labels(State(state): State<AppState>) -> Response {
    match state.model().ok_or(Error::ModelNotLoaded).and_then(api::labels_json) {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => error_response(&e),
    }
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Response {
    // Decoding is CPU-bound; keep it off the async workers.
    let result = tokio::task::spawn_blocking(move || api::generate_json(state.model(), &body)).await;
    match result {
        Ok(Ok(body)) => json_response(StatusCode::OK, body),
        Ok(Err(e)) => error_response(&e),
        Err(join) => error_response(&Error::InvalidConfig(format!("generation task failed: {join}"))),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/labels", get(labels))
        .route("/generate", post(generate))
        .with_state(state)
}

/// Binds `addr`, loads `ckpt` in the background and serves until ctrl-c.
pub async fn serve(ckpt: PathBuf, addr: SocketAddr) -> Result<()> {
    let state = AppState::loading();
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
    let bound = listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!("listening on http://{bound}");
    let loader = state.clone();
    let load = tokio::task::spawn_blocking(move || -> Result<()> {
        let model = Model::load(&ckpt)?;
        loader.install(model);
        log::info!("model loaded from {}", ckpt.display());
        Ok(())
    });
    let server = tokio::spawn(
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .into_future(),
    );
    // A checkpoint that fails to load stops the service instead of
    // leaving it in 503 forever.
    match load.await {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            server.abort();
            return Err(e);
        }
        Err(e) => {
            server.abort();
            return Err(Error::InvalidConfig(format!("model loader failed: {e}")));
        }
    }
    match server.await {
        Ok(served) => served.map_err(|e| Error::io(bound.to_string(), e)),
        Err(e) => Err(Error::InvalidConfig(format!("server task failed: {e}"))),
    }
}
