use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the repository can report.
///
/// Variants map one-to-one onto the machine codes returned by the HTTP layer
/// (see [`Error::code`]); the message text is what an operator or end user
/// sees.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("snapshot {file} is corrupt: {reason}")]
    CorruptSnapshot { file: String, reason: String },

    #[error("snapshot {file} has schema version {found}, this build reads up to {supported}")]
    UnsupportedSchema {
        file: String,
        found: u64,
        supported: u64,
    },

    #[error("data directory {0} is locked by another process")]
    DirLocked(PathBuf),

    #[error("store is unusable after an interrupted commit; reopen the data directory")]
    Poisoned,

    #[error("simulated crash at {0}")]
    InjectedCrash(String),

    #[error("file is empty")]
    EmptyBlob,

    #[error("file is {size} bytes, the limit is {max} bytes")]
    BlobTooLarge { size: u64, max: u64 },

    #[error("stored file {0} is missing or damaged")]
    MissingBlob(String),

    #[error("login required")]
    Unauthenticated,

    #[error("incorrect username or password")]
    AuthFailed,

    #[error("this action requires administrator rights")]
    Forbidden,

    #[error("{0} not found")]
    NotFound(String),

    #[error("{0}")]
    Validation(String),

    #[error("password must be at least {min} characters long")]
    WeakPassword { min: usize },

    #[error("matrix number {0} is already in use")]
    DuplicateMatrix(String),

    #[error("matrix number {0} does not exist in the database")]
    UnknownMatrix(String),

    #[error("matrix number {0} is already registered")]
    AlreadyRegistered(String),

    #[error("username {0} is not available")]
    UsernameTaken(String),

    #[error("cannot delete the last administrator")]
    LastAdmin,

    #[error("an administrator already exists")]
    AdminExists,

    #[error("search query contains no searchable words")]
    EmptyQuery,

    #[error("document {0} is already indexed")]
    AlreadyIndexed(String),

    #[error("document {0} is not indexed")]
    NotIndexed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Unauthenticated => "UNAUTHENTICATED",
            Error::AuthFailed => "AUTH_FAILED",
            Error::Forbidden => "FORBIDDEN",
            Error::LastAdmin => "LAST_ADMIN",
            Error::NotFound(_) => "NOT_FOUND",
            Error::Validation(_) => "VALIDATION",
            Error::WeakPassword { .. } => "WEAK_PASSWORD",
            Error::EmptyBlob => "EMPTY_BLOB",
            Error::EmptyQuery => "EMPTY_QUERY",
            Error::DuplicateMatrix(_) => "DUPLICATE_MATRIX",
            Error::UnknownMatrix(_) => "UNKNOWN_MATRIX",
            Error::AlreadyRegistered(_) => "ALREADY_REGISTERED",
            Error::UsernameTaken(_) => "USERNAME_TAKEN",
            Error::AdminExists => "ADMIN_EXISTS",
            Error::BlobTooLarge { .. } => "BLOB_TOO_LARGE",
            Error::DirLocked(_) => "DIR_LOCKED",
            Error::AlreadyIndexed(_) | Error::NotIndexed(_) => "INDEX_STATE",
            Error::Io { .. }
            | Error::CorruptSnapshot { .. }
            | Error::UnsupportedSchema { .. }
            | Error::Poisoned
            | Error::InjectedCrash(_)
            | Error::MissingBlob(_) => "INTERNAL",
        }
    }
}
