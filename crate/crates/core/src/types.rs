//! Identifiers and small enums shared across modules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::Error;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            /// A fresh id. UUIDv7, so ids sort roughly by creation time.
            pub fn generate() -> Self {
                $name(Uuid::now_v7().to_string())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(
    /// Opaque user identifier.
    UserId
);
string_id!(
    /// Opaque dissertation identifier. Never changes across edits.
    DissertationId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Degree {
    Master,
    PhD,
}

impl FromStr for Degree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Master" => Ok(Degree::Master),
            "PhD" => Ok(Degree::PhD),
            other => Err(Error::validation(format!(
                "degree must be Master or PhD, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Degree::Master => "Master",
            Degree::PhD => "PhD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Member,
    Admin,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_parses_exact_names_only() {
        assert_eq!("Master".parse::<Degree>().unwrap(), Degree::Master);
        assert_eq!(" PhD ".parse::<Degree>().unwrap(), Degree::PhD);
        assert!("Masters".parse::<Degree>().is_err());
        assert!("phd".parse::<Degree>().is_err());
    }

    #[test]
    fn generated_ids_are_unique() {
        let a = UserId::generate();
        let b = UserId::generate();
        assert_ne!(a, b);
    }
}
