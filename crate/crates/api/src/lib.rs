//! HTTP service under `/v1`: catalog browsing, scenario storage, evaluation, saved
//! runs, run comparison and report download. All bodies are JSON.

mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use pa_econ_core::{Catalog, RunStore, ScenarioStore, StoreError};

pub use error::{ApiError, ERROR_CODES};
pub use routes::{
    CompareRequest, CropDefaultValues, CropMeta, EvaluateResponse, InvestmentDefaults, Meta, Named,
    RunList, TechnologyEntry, TechnologyList,
};

/// Shared state behind every handler.
#[derive(Debug)]
pub struct AppState {
    pub catalog: Catalog,
    pub scenarios: ScenarioStore,
    pub runs: RunStore,
}

impl AppState {
    /// Opens the stores below `data_dir`.
    pub fn open(catalog: Catalog, data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = data_dir.into();
        Ok(AppState {
            catalog,
            scenarios: ScenarioStore::open(&dir)?,
            runs: RunStore::open(&dir)?,
        })
    }
}

/// Builds the `/v1` router. `allowed_origin` enables CORS for one UI origin, or for
/// any origin when it is `*`.
pub fn router(state: Arc<AppState>, allowed_origin: Option<&str>) -> Router {
    let app = routes::routes(state);
    match allowed_origin {
        None => app,
        Some(origin) => {
            let allow = if origin == "*" {
                AllowOrigin::from(Any)
            } else {
                match HeaderValue::from_str(origin) {
                    Ok(v) => AllowOrigin::exact(v),
                    Err(_) => return app,
                }
            };
            app.layer(
                CorsLayer::new()
                    .allow_origin(allow)
                    .allow_methods([Method::GET, Method::POST, Method::PUT, Method::DELETE])
                    .allow_headers(Any),
            )
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub allowed_origin: Option<String>,
}

/// Serves until Ctrl-C.
pub async fn serve(catalog: Catalog, config: ServerConfig) -> std::io::Result<()> {
    let state = AppState::open(catalog, &config.data_dir).map_err(std::io::Error::other)?;
    let app = router(Arc::new(state), config.allowed_origin.as_deref());
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
