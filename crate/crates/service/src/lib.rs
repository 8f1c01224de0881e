//! Read-only HTTP/JSON API over a loaded snapshot.
//!
//! Routes live under `/api/v1`: `GET snapshot`, `POST risk`, `GET sweep` and
//! `GET fixtures[/{id}]`. Every error body is `{"code":..,"message":..}`.

mod api;
mod config;
mod state;

use std::future::Future;
use std::sync::Arc;

use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use api::ApiError;
pub use config::ServiceConfig;
pub use state::{AppState, SnapshotSource};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot read config {path}: {message}")]
    Config { path: String, message: String },
    #[error("invalid CORS origin {0:?}")]
    CorsOrigin(String),
    #[error(transparent)]
    Msp(#[from] breakrisk_core::msp::MspError),
}

pub fn router(state: Arc<AppState>, config: &ServiceConfig) -> Result<Router, ServiceError> {
    let api = Router::new()
        .route("/snapshot", get(api::snapshot_summary))
        .route("/risk", post(api::post_risk))
        .route("/sweep", get(api::get_sweep))
        .route("/fixtures", get(api::list_fixtures))
        .route("/fixtures/{id}", get(api::get_fixture))
        .method_not_allowed_fallback(api::method_not_allowed);
    let mut app = Router::new()
        .nest("/api/v1", api)
        .fallback(api::not_found)
        .with_state(state);
    if let Some(origin) = &config.cors_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            let value = HeaderValue::from_str(origin)
                .map_err(|_| ServiceError::CorsOrigin(origin.clone()))?;
            AllowOrigin::exact(value)
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

/// Serves `app` on an already bound listener until `shutdown` resolves.
pub async fn serve<F>(listener: TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

/// Re-reads the snapshot source on every SIGHUP. A failed reload keeps the
/// current snapshot. The handler is installed before this returns, so a
/// signal sent afterwards is never lost. Must be called inside a runtime.
#[cfg(unix)]
pub fn spawn_sighup_reload(state: Arc<AppState>) -> std::io::Result<()> {
    use tokio::signal::unix::{signal, SignalKind};

    let mut hup = signal(SignalKind::hangup())?;
    tokio::spawn(async move {
        while hup.recv().await.is_some() {
            match state.reload() {
                Ok(true) => log::info!("snapshot reloaded"),
                Ok(false) => log::info!("snapshot source is not reloadable; ignoring SIGHUP"),
                Err(e) => log::error!("reload failed, keeping previous snapshot: {e}"),
            }
        }
    });
    Ok(())
}
