//! Canonical JSON snapshot files.
//!
//! Each file is a single object `{"<collection>": ..., "schema": 1}` printed
//! with sorted keys, two-space indentation and a trailing LF, so identical
//! state always produces identical bytes.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u64 = 1;

pub(crate) fn encode<T: Serialize>(key: &str, body: &T) -> Result<Vec<u8>> {
    let body = serde_json::to_value(body).map_err(|e| Error::CorruptSnapshot {
        file: key.to_owned(),
        reason: format!("cannot serialize: {e}"),
    })?;
    let mut doc = serde_json::Map::new();
    doc.insert(key.to_owned(), body);
    doc.insert("schema".to_owned(), Value::from(SCHEMA_VERSION));
    let mut out = serde_json::to_vec_pretty(&Value::Object(doc)).expect("Value always serializes");
    out.push(b'\n');
    Ok(out)
}

pub(crate) fn decode<T: DeserializeOwned>(file: &str, key: &str, bytes: &[u8]) -> Result<T> {
    let corrupt = |reason: String| Error::CorruptSnapshot {
        file: file.to_owned(),
        reason,
    };
    let text = std::str::from_utf8(bytes).map_err(|e| corrupt(format!("not UTF-8: {e}")))?;
    let mut doc: serde_json::Map<String, Value> =
        serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let version = doc
        .get("schema")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt("missing schema version".to_owned()))?;
    if version > SCHEMA_VERSION {
        return Err(Error::UnsupportedSchema {
            file: file.to_owned(),
            found: version,
            supported: SCHEMA_VERSION,
        });
    }
    let body = doc
        .remove(key)
        .ok_or_else(|| corrupt(format!("missing {key:?}")))?;
    serde_json::from_value(body).map_err(|e| corrupt(e.to_string()))
}
