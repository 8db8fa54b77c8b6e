//! Deployable platform: an HTTP/JSON API over the twin store, the market and
//! the agents, persisted as an append-only event log in a data directory.
//!
//! [`serve`] runs the service until Ctrl-C; [`Service`] gives tests and
//! embedders the router and a way to bind it themselves. The [`cli`] module
//! holds the operator command line behind the `lcw` binary.

pub mod api;
pub mod cli;
pub mod config;
pub mod store;

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;
use tokio::net::TcpListener;

use lcw_core::log::LogError;
use lcw_core::platform::PlatformError;

pub use api::{router, AppState, ErrorEnvelope};
pub use config::{ServiceConfig, TimeMode};
pub use store::DataDir;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("data directory {} is in use by another instance (delete its LOCK file if that instance is gone)", .0.display())]
    DataDirLocked(PathBuf),
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: io::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

impl ServiceError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        ServiceError::Io { path: path.to_owned(), source }
    }
}

/// A loaded platform instance, ready to be served.
pub struct Service {
    state: Arc<AppState>,
}

impl Service {
    /// Locks the data directory and rebuilds state from its log.
    pub fn open(config: &ServiceConfig) -> Result<Self, ServiceError> {
        Self::open_with(config, true)
    }

    /// Like [`Service::open`]; `sync = false` skips the per-append fsync.
    pub fn open_with(config: &ServiceConfig, sync: bool) -> Result<Self, ServiceError> {
        let dir = DataDir::open(&config.data_dir)?;
        let platform = store::load(&dir, sync)?;
        Ok(Self { state: AppState::new(platform, dir, config.time_mode, config.snapshot_every) })
    }

    pub fn router(&self) -> axum::Router {
        router(self.state.clone())
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }

    /// Serves on `listener` until `shutdown` resolves, then snapshots.
    pub async fn run(
        self,
        listener: TcpListener,
        shutdown: impl std::future::Future<Output = ()> + Send + 'static,
    ) -> Result<(), ServiceError> {
        let addr = listener.local_addr().map_err(|e| ServiceError::io(Path::new("<listener>"), e))?;
        axum::serve(listener, self.router())
            .with_graceful_shutdown(shutdown)
            .await
            .map_err(|source| ServiceError::BindFailure { addr, source })?;
        self.state.snapshot()
    }
}

/// Opens the data directory, binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let service = Service::open(&config)?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = TcpListener::bind(addr).await.map_err(|source| ServiceError::BindFailure { addr, source })?;
    eprintln!("lcw: serving {} on http://{addr} ({:?} time)", config.data_dir.display(), config.time_mode);
    service
        .run(listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
