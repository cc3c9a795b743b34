//! Core of the dissertation repository service.
//!
//! [`Repository`] is the entry point: it owns a [`store::Store`] over one
//! data directory and exposes every account, catalog, search and favorites
//! operation. Callers identify themselves with an [`auth::Caller`].

pub mod auth;
pub mod catalog;
pub mod clock;
pub mod error;
pub mod favorites;
mod repository;
pub mod search;
pub mod store;
pub mod types;

pub use auth::{Caller, Session, UserRecord, UserView};
pub use catalog::{DissertationMeta, DissertationPatch, DissertationRecord, FileUpload, PublicDissertation};
pub use error::{Error, Result};
pub use repository::{Config, Repository, DEFAULT_SESSION_LIFETIME_SECS};
pub use search::{AdvancedQuery, ResultRow, SearchHit};
pub use types::{Degree, DissertationId, Role, UserId};
