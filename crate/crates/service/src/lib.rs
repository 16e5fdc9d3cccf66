//! Read-only HTTP API over several segmentation schemes of one treebank.
//!
//! Endpoints (all GET, JSON):
//!
//! - `/api/schemes`
//! - `/api/sentences?scheme=&offset=&limit=`
//! - `/api/parse?scheme=&sent=`
//! - `/api/diff?left=&right=&sent=`
//! - `/api/eval?left=&right=`
//!
//! Sentence indices are 0-based positions. Anything outside `/api` is served
//! from the optional static directory (the viewer bundle).

pub mod api;
pub mod catalog;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::get;
use axum::Router;
use thiserror::Error;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use catalog::{load_catalog, parse_config, read_config, CatalogError, Scheme, SchemeCatalog, SchemeSource};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Server(#[from] std::io::Error),
}

pub fn router(catalog: Arc<SchemeCatalog>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/schemes", get(api::schemes))
        .route("/api/sentences", get(api::sentences))
        .route("/api/parse", get(api::parse))
        .route("/api/diff", get(api::diff))
        .route("/api/eval", get(api::eval))
        .route("/api/{*rest}", get(api::not_found))
        .with_state(catalog);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(api::not_found),
    };
    app.layer(CorsLayer::permissive())
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on<F>(
    listener: tokio::net::TcpListener,
    catalog: SchemeCatalog,
    static_dir: Option<PathBuf>,
    shutdown: F,
) -> Result<(), ServeError>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let local = listener.local_addr()?;
    tracing::info!(%local, schemes = catalog.len(), sentences = catalog.sentence_count(), "listening");
    axum::serve(listener, router(Arc::new(catalog), static_dir))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Serves until Ctrl-C.
pub async fn serve(
    catalog: SchemeCatalog,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    serve_on(listener, catalog, static_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
