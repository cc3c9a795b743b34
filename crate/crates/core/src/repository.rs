use std::path::Path;
use std::sync::Arc;

use crate::auth::credential::DEFAULT_ITERATIONS;
use crate::clock::{Clock, SystemClock};
use crate::error::Result;
use crate::store::{State, Store, StoreOptions, DEFAULT_MAX_BLOB_BYTES};

pub const DEFAULT_SESSION_LIFETIME_SECS: i64 = 24 * 60 * 60;

#[derive(Debug, Clone)]
pub struct Config {
    pub session_lifetime_secs: i64,
    /// PBKDF2 rounds for newly derived credentials.
    pub password_iterations: u32,
    pub max_blob_bytes: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            session_lifetime_secs: DEFAULT_SESSION_LIFETIME_SECS,
            password_iterations: DEFAULT_ITERATIONS,
            max_blob_bytes: DEFAULT_MAX_BLOB_BYTES,
        }
    }
}

/// The dissertation repository: every operation of the service, over one
/// data directory.
///
/// Operations live next to their domain types, in [`crate::auth`],
/// [`crate::catalog`], [`crate::favorites`] and [`crate::search`]. Safe to
/// share between threads.
pub struct Repository {
    pub(crate) store: Store,
    pub(crate) clock: Arc<dyn Clock>,
    pub(crate) config: Config,
}

impl Repository {
    pub fn open(data_dir: impl AsRef<Path>, config: Config) -> Result<Repository> {
        Repository::open_with_clock(data_dir, config, Arc::new(SystemClock))
    }

    pub fn open_with_clock(
        data_dir: impl AsRef<Path>,
        config: Config,
        clock: Arc<dyn Clock>,
    ) -> Result<Repository> {
        let store = Store::open_with(
            data_dir,
            StoreOptions {
                max_blob_bytes: config.max_blob_bytes,
            },
        )?;
        Ok(Repository {
            store,
            clock,
            config,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn snapshot(&self) -> Arc<State> {
        self.store.snapshot()
    }
}

impl std::fmt::Debug for Repository {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Repository")
            .field("root", &self.store.root())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}
