//! HTTP service and command line for the Coptic corpus tools.

pub mod api;
pub mod cli;
pub mod config;
pub mod state;

use std::sync::Arc;

pub use api::router;
pub use config::Config;
pub use state::AppState;

/// Serves the API until Ctrl-C.
pub async fn serve(cfg: Config) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = Arc::new(AppState::from_config(&cfg)?);
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %cfg.data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
