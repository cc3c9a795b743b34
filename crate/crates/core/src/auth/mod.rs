//! Accounts, credentials, sessions and role checks.
//!
//! Accounts follow a two-step lifecycle. An administrator provisions a
//! student by matrix number (no credentials yet); the student then signs up
//! with that matrix number, choosing a username and password, and becomes a
//! registered member. Administrators never come from sign-up; the first one
//! is created by the operator bootstrap.

pub mod credential;
mod ops;
mod validate;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use credential::Credential;
pub use validate::{
    check_password, normalize_email, normalize_full_name, normalize_matrix, normalize_username,
};

use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::types::{Degree, Role, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UserStatus {
    Provisioned,
    Registered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    /// Uppercase, unique across all users.
    pub matrix_number: String,
    pub full_name: String,
    /// Absent only for operator-bootstrapped administrators.
    pub degree: Option<Degree>,
    pub email: Option<String>,
    /// Lowercase; present exactly when registered.
    pub username: Option<String>,
    pub credential: Option<Credential>,
    pub role: Role,
    pub status: UserStatus,
}

impl UserRecord {
    pub fn view(&self) -> UserView {
        UserView {
            user_id: self.user_id.clone(),
            matrix_number: self.matrix_number.clone(),
            full_name: self.full_name.clone(),
            degree: self.degree,
            email: self.email.clone(),
            username: self.username.clone(),
            role: self.role,
            status: self.status,
        }
    }
}

/// A user record without its credential, as returned to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserView {
    pub user_id: UserId,
    pub matrix_number: String,
    pub full_name: String,
    pub degree: Option<Degree>,
    pub email: Option<String>,
    pub username: Option<String>,
    pub role: Role,
    pub status: UserStatus,
}

/// Hex SHA-256 of a bearer token. Only digests are persisted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenDigest(String);

impl TokenDigest {
    pub fn of(token: &str) -> TokenDigest {
        TokenDigest(hex::encode(Sha256::digest(token.as_bytes())))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Stored side of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub token_digest: TokenDigest,
    pub user_id: UserId,
    pub role: Role,
    pub created_at: Timestamp,
    pub expires_at: Timestamp,
}

impl SessionRecord {
    pub fn is_live(&self, now: Timestamp) -> bool {
        now < self.expires_at
    }
}

/// What a successful login hands back. `token` is never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user_id: UserId,
    pub username: String,
    pub role: Role,
    pub created_at: Timestamp,
    pub expires_at: Timestamp,
}

/// Who is asking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Caller {
    Guest,
    Session(SessionRecord),
    /// The local operator running CLI commands. Has administrator rights but
    /// is not a user.
    Operator,
}

impl Caller {
    pub fn role(&self) -> Option<Role> {
        match self {
            Caller::Guest => None,
            Caller::Session(s) => Some(s.role),
            Caller::Operator => Some(Role::Admin),
        }
    }

    pub fn require_user(&self) -> Result<()> {
        match self {
            Caller::Guest => Err(Error::Unauthenticated),
            _ => Ok(()),
        }
    }

    pub fn require_admin(&self) -> Result<()> {
        match self.role() {
            None => Err(Error::Unauthenticated),
            Some(Role::Member) => Err(Error::Forbidden),
            Some(Role::Admin) => Ok(()),
        }
    }

    /// The caller's own session; operators have none.
    pub fn require_session(&self) -> Result<&SessionRecord> {
        match self {
            Caller::Guest => Err(Error::Unauthenticated),
            Caller::Session(s) => Ok(s),
            Caller::Operator => Err(Error::Forbidden),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewUser {
    pub matrix_number: String,
    pub full_name: String,
    pub degree: Degree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignUp {
    pub matrix_number: String,
    pub username: String,
    pub password: String,
    pub email: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserPatch {
    pub full_name: Option<String>,
    pub matrix_number: Option<String>,
    pub degree: Option<Degree>,
    pub email: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserQuery {
    pub matrix_number: Option<String>,
    pub name_substring: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdminBootstrap {
    pub matrix_number: String,
    pub full_name: String,
    pub username: String,
    pub password: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(role: Role) -> Caller {
        Caller::Session(SessionRecord {
            token_digest: TokenDigest::of("t"),
            user_id: UserId::from("u"),
            role,
            created_at: Timestamp(0),
            expires_at: Timestamp(10),
        })
    }

    #[test]
    fn role_requirements() {
        assert!(matches!(Caller::Guest.require_admin(), Err(Error::Unauthenticated)));
        assert!(matches!(session(Role::Member).require_admin(), Err(Error::Forbidden)));
        assert!(session(Role::Admin).require_admin().is_ok());
        assert!(Caller::Operator.require_admin().is_ok());
        assert!(matches!(Caller::Guest.require_user(), Err(Error::Unauthenticated)));
        assert!(session(Role::Member).require_user().is_ok());
        assert!(matches!(Caller::Operator.require_session(), Err(Error::Forbidden)));
    }

    #[test]
    fn expiry_is_exclusive() {
        let Caller::Session(s) = session(Role::Member) else { unreachable!() };
        assert!(s.is_live(Timestamp(9)));
        assert!(!s.is_live(Timestamp(10)));
    }

    #[test]
    fn token_digest_is_sha256_hex() {
        assert_eq!(
            TokenDigest::of("abc").as_str(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
