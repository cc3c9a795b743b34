use super::credential::MIN_PASSWORD_CHARS;
use crate::error::{Error, Result};

/// Trim and uppercase; 1–32 ASCII letters or digits.
pub fn normalize_matrix(raw: &str) -> Result<String> {
    let m = raw.trim().to_ascii_uppercase();
    if m.is_empty() || m.len() > 32 || !m.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(Error::validation(
            "matrix number must be 1 to 32 letters or digits",
        ));
    }
    Ok(m)
}

/// Trim and lowercase; 3–32 of `a-z 0-9 . _ -`.
pub fn normalize_username(raw: &str) -> Result<String> {
    let u = raw.trim().to_lowercase();
    let allowed = |c: char| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '_' | '-');
    let len = u.chars().count();
    if !(3..=32).contains(&len) || !u.chars().all(allowed) {
        return Err(Error::validation(
            "username must be 3 to 32 characters: letters, digits, '.', '_' or '-'",
        ));
    }
    Ok(u)
}

pub fn check_password(password: &str) -> Result<()> {
    if password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(Error::WeakPassword {
            min: MIN_PASSWORD_CHARS,
        });
    }
    Ok(())
}

pub fn normalize_full_name(raw: &str) -> Result<String> {
    let n = raw.trim();
    if n.is_empty() || n.chars().count() > 200 {
        return Err(Error::validation("name must be 1 to 200 characters"));
    }
    Ok(n.to_owned())
}

/// Minimal shape check: `local@domain`, no whitespace.
pub fn normalize_email(raw: &str) -> Result<String> {
    let e = raw.trim();
    let valid = e.len() <= 254
        && !e.chars().any(char::is_whitespace)
        && matches!(e.split_once('@'), Some((local, domain))
            if !local.is_empty() && !domain.is_empty() && !domain.contains('@'));
    if !valid {
        return Err(Error::validation(format!("{e:?} is not an e-mail address")));
    }
    Ok(e.to_owned())
}
