//! HTTP interface for the dissertation repository.
//!
//! Every endpoint speaks JSON except the file download (raw bytes) and the
//! upload (multipart with a `meta` JSON part and a `file` part). Callers
//! authenticate with `Authorization: Bearer <token>`; failures come back as
//! `{"code": ..., "message": ...}` with a fixed status per code.

pub mod access;
mod error;
mod routes;

use std::future::Future;
use std::io;
use std::sync::Arc;

use axum::extract::DefaultBodyLimit;
use axum::http::header::{AUTHORIZATION, CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::{HeaderValue, Method};
use axum::routing::{get, patch, post, put};
use axum::Router;
use drs_core::Repository;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::{status_for, ApiError, ErrorBody};
pub use routes::{AppState, FavoriteIds, Page, DEFAULT_LIMIT, MAX_LIMIT};

/// Multipart framing and the `meta` part on top of the file itself.
const UPLOAD_OVERHEAD: usize = 1 << 20;

#[derive(Debug, Clone, Default)]
pub struct ApiConfig {
    /// Origins allowed to call the API from a browser. Empty disables CORS.
    pub cors_origins: Vec<String>,
}

pub fn router(repo: Arc<Repository>, config: &ApiConfig) -> io::Result<Router> {
    let upload_limit = usize::try_from(repo.store().max_blob_bytes())
        .unwrap_or(usize::MAX)
        .saturating_add(UPLOAD_OVERHEAD);
    let state = AppState { repo };
    let router = Router::new()
        .route("/api/health", get(routes::health))
        .route("/api/signup", post(routes::sign_up))
        .route("/api/login", post(routes::login))
        .route("/api/logout", post(routes::logout))
        .route("/api/password", post(routes::change_password))
        .route("/api/search", get(routes::simple_search))
        .route("/api/search/advanced", post(routes::advanced_search))
        .route(
            "/api/dissertations",
            post(routes::upload).layer(DefaultBodyLimit::max(upload_limit)),
        )
        .route(
            "/api/dissertations/{id}",
            get(routes::get_dissertation)
                .patch(routes::edit_dissertation)
                .delete(routes::delete_dissertation),
        )
        .route("/api/dissertations/{id}/file", get(routes::download))
        .route("/api/favorites", get(routes::list_favorites))
        .route("/api/favorites/{id}", put(routes::add_favorite))
        .route("/api/favorites/remove", post(routes::remove_favorites))
        .route("/api/users", post(routes::provision_user).get(routes::find_users))
        .route("/api/users/{id}", patch(routes::edit_user).delete(routes::delete_user))
        .fallback(routes::not_found)
        .method_not_allowed_fallback(routes::method_not_allowed)
        .with_state(state);
    Ok(match cors(config)? {
        Some(layer) => router.layer(layer),
        None => router,
    })
}

fn cors(config: &ApiConfig) -> io::Result<Option<CorsLayer>> {
    if config.cors_origins.is_empty() {
        return Ok(None);
    }
    let origins = config
        .cors_origins
        .iter()
        .map(|o| {
            HeaderValue::from_str(o)
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, format!("bad CORS origin {o:?}")))
        })
        .collect::<io::Result<Vec<_>>>()?;
    Ok(Some(
        CorsLayer::new()
            .allow_origin(AllowOrigin::list(origins))
            .allow_methods([Method::GET, Method::POST, Method::PUT, Method::PATCH, Method::DELETE])
            .allow_headers([AUTHORIZATION, CONTENT_TYPE])
            .expose_headers([CONTENT_DISPOSITION]),
    ))
}

/// Serve until `shutdown` resolves, then let in-flight requests finish.
pub async fn serve(
    listener: TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        if tokio::signal::ctrl_c().await.is_err() {
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutdown requested");
}
