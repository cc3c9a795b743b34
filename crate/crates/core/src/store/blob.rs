use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::fsync_dir;
use crate::error::{Error, Result};

/// Lowercase hex SHA-256 of a blob's bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContentHash(String);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        ContentHash(hex::encode(Sha256::digest(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ContentHash {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        let ok = s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if ok {
            Ok(ContentHash(s))
        } else {
            Err(format!("{s:?} is not a lowercase hex sha-256"))
        }
    }
}

impl From<ContentHash> for String {
    fn from(h: ContentHash) -> String {
        h.0
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Content-addressed file store: `blobs/<sha256hex>`.
#[derive(Debug)]
pub(crate) struct BlobDir {
    root: PathBuf,
    max_bytes: u64,
}

impl BlobDir {
    pub(crate) fn open(root: PathBuf, max_bytes: u64) -> Result<Self> {
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(BlobDir { root, max_bytes })
    }

    pub(crate) fn max_bytes(&self) -> u64 {
        self.max_bytes
    }

    pub(crate) fn path(&self, hash: &ContentHash) -> PathBuf {
        self.root.join(hash.as_str())
    }

    pub(crate) fn check_size(&self, len: usize) -> Result<()> {
        let size = len as u64;
        if size == 0 {
            Err(Error::EmptyBlob)
        } else if size > self.max_bytes {
            Err(Error::BlobTooLarge {
                size,
                max: self.max_bytes,
            })
        } else {
            Ok(())
        }
    }

    /// Store `bytes`; a no-op when an intact copy already exists.
    pub(crate) fn put(&self, bytes: &[u8]) -> Result<ContentHash> {
        self.check_size(bytes.len())?;
        let hash = ContentHash::of(bytes);
        let path = self.path(&hash);
        if fs::metadata(&path).is_ok_and(|m| m.len() == bytes.len() as u64) {
            return Ok(hash);
        }
        let tmp = self.root.join(format!("{hash}.tmp"));
        write_synced(&tmp, bytes)?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        fsync_dir(&self.root)?;
        Ok(hash)
    }

    /// Read a blob, verifying its bytes still hash to its name.
    pub(crate) fn get(&self, hash: &ContentHash) -> Result<Vec<u8>> {
        let bytes =
            fs::read(self.path(hash)).map_err(|_| Error::MissingBlob(hash.to_string()))?;
        if ContentHash::of(&bytes) != *hash {
            return Err(Error::MissingBlob(hash.to_string()));
        }
        Ok(bytes)
    }

    pub(crate) fn size_of(&self, hash: &ContentHash) -> Option<u64> {
        fs::metadata(self.path(hash)).ok().map(|m| m.len())
    }

    pub(crate) fn list(&self) -> Result<Vec<ContentHash>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| Error::io(&self.root, e))? {
            let entry = entry.map_err(|e| Error::io(&self.root, e))?;
            if let Some(name) = entry.file_name().to_str() {
                if let Ok(h) = ContentHash::try_from(name.to_owned()) {
                    out.push(h);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub(crate) fn remove(&self, hash: &ContentHash) -> Result<()> {
        let path = self.path(hash);
        fs::remove_file(&path).map_err(|e| Error::io(&path, e))
    }

    /// Drop partially written blobs left by an interrupted upload.
    pub(crate) fn clean_temp(&self) -> Result<()> {
        super::remove_temp_files(&self.root)
    }
}

pub(crate) fn write_synced(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_test_vector() {
        // FIPS 180-2 example "abc"; also `printf abc | sha256sum`.
        assert_eq!(
            ContentHash::of(b"abc").as_str(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn put_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let blobs = BlobDir::open(dir.path().join("blobs"), 1024).unwrap();
        let a = blobs.put(b"same bytes").unwrap();
        let b = blobs.put(b"same bytes").unwrap();
        assert_eq!(a, b);
        assert_eq!(blobs.list().unwrap(), vec![a.clone()]);
        assert_eq!(fs::read_dir(dir.path().join("blobs")).unwrap().count(), 1);
        assert_eq!(blobs.get(&a).unwrap(), b"same bytes");
    }

    #[test]
    fn size_limits() {
        let dir = tempfile::tempdir().unwrap();
        let blobs = BlobDir::open(dir.path().to_path_buf(), 4).unwrap();
        assert!(matches!(blobs.put(b""), Err(Error::EmptyBlob)));
        assert!(matches!(
            blobs.put(b"12345"),
            Err(Error::BlobTooLarge { size: 5, max: 4 })
        ));
        assert!(blobs.put(b"1234").is_ok());
    }

    #[test]
    fn damaged_blob_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let blobs = BlobDir::open(dir.path().to_path_buf(), 1024).unwrap();
        let h = blobs.put(b"payload").unwrap();
        fs::write(blobs.path(&h), b"tampered").unwrap();
        assert!(matches!(blobs.get(&h), Err(Error::MissingBlob(_))));
        // a re-upload repairs it
        blobs.put(b"payload").unwrap();
        assert_eq!(blobs.get(&h).unwrap(), b"payload");
    }

    #[test]
    fn hash_parsing() {
        assert!(ContentHash::try_from("ABC".to_owned()).is_err());
        assert!(ContentHash::try_from(ContentHash::of(b"x").to_string()).is_ok());
    }
}
