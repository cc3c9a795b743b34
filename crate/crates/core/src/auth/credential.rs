use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

pub const DEFAULT_ITERATIONS: u32 = 100_000;
pub const MIN_PASSWORD_CHARS: usize = 8;

/// Salted PBKDF2-HMAC-SHA256 digest of a password.
///
/// The iteration count travels with the record so it can be raised for new
/// credentials without invalidating old ones.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    #[serde(with = "hex::serde")]
    pub salt: [u8; 16],
    #[serde(with = "hex::serde")]
    pub digest: [u8; 32],
    pub iterations: u32,
}

impl std::fmt::Debug for Credential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credential")
            .field("iterations", &self.iterations)
            .finish_non_exhaustive()
    }
}

impl Credential {
    /// Hash `password` under a fresh random salt.
    pub fn derive(password: &str, iterations: u32) -> Credential {
        let mut salt = [0u8; 16];
        rand::rng().fill(&mut salt);
        Credential::derive_with_salt(password, salt, iterations)
    }

    pub fn derive_with_salt(password: &str, salt: [u8; 16], iterations: u32) -> Credential {
        let mut digest = [0u8; 32];
        pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), &salt, iterations, &mut digest);
        Credential {
            salt,
            digest,
            iterations,
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        let candidate = Credential::derive_with_salt(password, self.salt, self.iterations);
        constant_time_eq(&candidate.digest, &self.digest)
    }
}

fn constant_time_eq(a: &[u8; 32], b: &[u8; 32]) -> bool {
    a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbkdf2_sha256_reference_vector() {
        // RFC 7914 section 11: PBKDF2-HMAC-SHA256("passwd", "salt", c=1, dkLen=64).
        // Only the first 32 bytes are used here.
        let mut out = [0u8; 32];
        pbkdf2::pbkdf2_hmac::<Sha256>(b"passwd", b"salt", 1, &mut out);
        assert_eq!(
            hex::encode(out),
            "55ac046e56e3089fec1691c22544b605f94185216dde0465e68b9d57c20dacbc"
        );
    }

    #[test]
    fn verifies_only_the_right_password() {
        let c = Credential::derive("correct horse", 1_000);
        assert!(c.verify("correct horse"));
        assert!(!c.verify("correct horsE"));
        assert!(!c.verify(""));
    }

    #[test]
    fn recomputation_with_stored_salt_matches() {
        let c = Credential::derive("s3cret-pass", 500);
        let again = Credential::derive_with_salt("s3cret-pass", c.salt, c.iterations);
        assert_eq!(again, c);
        let other = Credential::derive_with_salt("s3cret-pasS", c.salt, c.iterations);
        assert_ne!(other.digest, c.digest);
    }

    #[test]
    fn salts_differ() {
        let a = Credential::derive("same", 10);
        let b = Credential::derive("same", 10);
        assert_ne!(a.salt, b.salt);
        assert_ne!(a.digest, b.digest);
    }

    #[test]
    fn serializes_as_hex() {
        let c = Credential::derive_with_salt("pw", [7u8; 16], 3);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["salt"], "07".repeat(16));
        assert_eq!(v["iterations"], 3);
        let back: Credential = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
