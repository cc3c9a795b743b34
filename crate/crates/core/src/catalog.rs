//! Dissertation records and their files.
//!
//! A record's file is immutable; edits change metadata only. Every record
//! change is committed together with the matching index update, and deletes
//! also prune the record from every favorites list in the same commit.

use serde::{Deserialize, Serialize};

use crate::auth::Caller;
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::repository::Repository;
use crate::search::DocumentText;
use crate::store::{ContentHash, Mutation, Op};
use crate::types::{Degree, DissertationId, UserId};

pub const MIN_YEAR: i32 = 1900;
pub const DEFAULT_MEDIA_TYPE: &str = "application/octet-stream";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub content_hash: ContentHash,
    pub original_filename: String,
    pub size_bytes: u64,
    pub media_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissertationRecord {
    pub dissertation_id: DissertationId,
    pub title: String,
    pub author_name: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub topic: String,
    pub degree: Degree,
    pub year: i32,
    pub file_ref: FileRef,
    pub uploaded_by: UserId,
    pub uploaded_at: Timestamp,
}

impl DissertationRecord {
    pub fn document_text(&self) -> DocumentText<'_> {
        DocumentText {
            title: &self.title,
            keywords: &self.keywords,
            author: &self.author_name,
            abstract_text: &self.abstract_text,
            topic: &self.topic,
        }
    }

    pub fn public(&self) -> PublicDissertation {
        PublicDissertation {
            dissertation_id: self.dissertation_id.clone(),
            title: self.title.clone(),
            author_name: self.author_name.clone(),
            abstract_text: self.abstract_text.clone(),
            keywords: self.keywords.clone(),
            topic: self.topic.clone(),
            degree: self.degree,
            year: self.year,
            file_ref: self.file_ref.clone(),
            uploaded_at: self.uploaded_at,
        }
    }

    fn meta(&self) -> DissertationMeta {
        DissertationMeta {
            title: self.title.clone(),
            author_name: self.author_name.clone(),
            abstract_text: self.abstract_text.clone(),
            keywords: self.keywords.clone(),
            topic: self.topic.clone(),
            degree: self.degree,
            year: self.year,
        }
    }
}

/// A record as shown to clients: everything except the uploader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicDissertation {
    pub dissertation_id: DissertationId,
    pub title: String,
    pub author_name: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub topic: String,
    pub degree: Degree,
    pub year: i32,
    pub file_ref: FileRef,
    pub uploaded_at: Timestamp,
}

/// Descriptive fields supplied at upload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissertationMeta {
    pub title: String,
    #[serde(default)]
    pub author_name: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub topic: String,
    pub degree: Degree,
    pub year: i32,
}

impl DissertationMeta {
    /// Trimmed copy, or a validation error. `current_year` bounds `year`.
    pub fn normalized(&self, current_year: i32) -> Result<DissertationMeta> {
        let title = self.title.trim();
        if title.is_empty() {
            return Err(Error::validation("title must not be empty"));
        }
        if !(MIN_YEAR..=current_year).contains(&self.year) {
            return Err(Error::validation(format!(
                "year must be between {MIN_YEAR} and {current_year}, got {}",
                self.year
            )));
        }
        Ok(DissertationMeta {
            title: title.to_owned(),
            author_name: self.author_name.trim().to_owned(),
            abstract_text: self.abstract_text.trim().to_owned(),
            keywords: self
                .keywords
                .iter()
                .map(|k| k.trim())
                .filter(|k| !k.is_empty())
                .map(str::to_owned)
                .collect(),
            topic: self.topic.trim().to_owned(),
            degree: self.degree,
            year: self.year,
        })
    }
}

/// Metadata changes; absent fields are left alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DissertationPatch {
    pub title: Option<String>,
    pub author_name: Option<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    pub keywords: Option<Vec<String>>,
    pub topic: Option<String>,
    pub degree: Option<Degree>,
    pub year: Option<i32>,
}

impl DissertationPatch {
    fn apply_to(self, meta: DissertationMeta) -> DissertationMeta {
        DissertationMeta {
            title: self.title.unwrap_or(meta.title),
            author_name: self.author_name.unwrap_or(meta.author_name),
            abstract_text: self.abstract_text.unwrap_or(meta.abstract_text),
            keywords: self.keywords.unwrap_or(meta.keywords),
            topic: self.topic.unwrap_or(meta.topic),
            degree: self.degree.unwrap_or(meta.degree),
            year: self.year.unwrap_or(meta.year),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FileUpload {
    pub bytes: Vec<u8>,
    pub original_filename: String,
    pub media_type: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Download {
    pub bytes: Vec<u8>,
    pub original_filename: String,
    pub media_type: String,
}

/// Last path component, without control characters.
fn clean_filename(raw: &str) -> String {
    let base = raw.rsplit(['/', '\\']).next().unwrap_or("");
    let cleaned: String = base.chars().filter(|c| !c.is_control()).take(255).collect();
    let cleaned = cleaned.trim();
    if cleaned.is_empty() || cleaned == "." || cleaned == ".." {
        "dissertation".to_owned()
    } else {
        cleaned.to_owned()
    }
}

fn clean_media_type(raw: Option<&str>) -> Result<String> {
    let Some(mt) = raw.map(str::trim).filter(|s| !s.is_empty()) else {
        return Ok(DEFAULT_MEDIA_TYPE.to_owned());
    };
    let ok = mt.len() <= 255
        && matches!(mt.split_once('/'), Some((t, s)) if !t.is_empty() && !s.is_empty())
        && mt.chars().all(|c| c.is_ascii_graphic() || c == ' ');
    if !ok {
        return Err(Error::validation(format!("{mt:?} is not a media type")));
    }
    Ok(mt.to_owned())
}

fn apply_meta(rec: &mut DissertationRecord, meta: DissertationMeta) {
    rec.title = meta.title;
    rec.author_name = meta.author_name;
    rec.abstract_text = meta.abstract_text;
    rec.keywords = meta.keywords;
    rec.topic = meta.topic;
    rec.degree = meta.degree;
    rec.year = meta.year;
}

impl Repository {
    fn current_year(&self) -> i32 {
        self.clock.now().year()
    }

    /// Store a file and its record, and index the record, in one commit.
    pub fn upload_dissertation(
        &self,
        caller: &Caller,
        meta: DissertationMeta,
        file: FileUpload,
    ) -> Result<DissertationRecord> {
        caller.require_admin()?;
        let meta = meta.normalized(self.current_year())?;
        let media_type = clean_media_type(file.media_type.as_deref())?;
        self.store.check_blob_size(file.bytes.len())?;
        let uploaded_by = match caller {
            Caller::Session(s) => s.user_id.clone(),
            _ => UserId::from("operator"),
        };
        let size_bytes = file.bytes.len() as u64;
        let original_filename = clean_filename(&file.original_filename);
        let now = self.clock.now();
        let mut m = Mutation::new();
        let content_hash = m.add_blob(file.bytes);
        let mut rec = DissertationRecord {
            dissertation_id: DissertationId::generate(),
            title: String::new(),
            author_name: String::new(),
            abstract_text: String::new(),
            keywords: Vec::new(),
            topic: String::new(),
            degree: meta.degree,
            year: meta.year,
            file_ref: FileRef {
                content_hash,
                original_filename,
                size_bytes,
                media_type,
            },
            uploaded_by,
            uploaded_at: now,
        };
        apply_meta(&mut rec, meta);
        m.push(Op::PutDissertation(rec.clone()));
        self.store.commit(m)?;
        Ok(rec)
    }

    pub fn edit_dissertation(
        &self,
        caller: &Caller,
        id: &DissertationId,
        patch: DissertationPatch,
    ) -> Result<DissertationRecord> {
        caller.require_admin()?;
        let current_year = self.current_year();
        self.store.write(|state| {
            let rec = state
                .dissertations
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("dissertation {id}")))?;
            let meta = patch.apply_to(rec.meta()).normalized(current_year)?;
            let mut updated = rec.clone();
            apply_meta(&mut updated, meta);
            let mut m = Mutation::new();
            if updated != *rec {
                m.push(Op::PutDissertation(updated.clone()));
            }
            Ok((m, updated))
        })
    }

    /// Remove a record from the catalog, the index and every favorites list.
    /// The file stays until garbage collection.
    pub fn delete_dissertation(&self, caller: &Caller, id: &DissertationId) -> Result<()> {
        caller.require_admin()?;
        self.store.write(|state| {
            if !state.dissertations.contains_key(id) {
                return Err(Error::NotFound(format!("dissertation {id}")));
            }
            let mut m = Mutation::new();
            m.push(Op::DeleteDissertation(id.clone()));
            for set in state.favorites.values() {
                if set.items.contains(id) {
                    let mut pruned = set.clone();
                    pruned.items.retain(|x| x != id);
                    m.push(if pruned.items.is_empty() {
                        Op::DeleteFavorites(pruned.user_id)
                    } else {
                        Op::PutFavorites(pruned)
                    });
                }
            }
            Ok((m, ()))
        })
    }

    /// Public metadata of one record. Open to guests.
    pub fn get_dissertation(&self, id: &DissertationId) -> Result<PublicDissertation> {
        self.snapshot()
            .dissertations
            .get(id)
            .map(DissertationRecord::public)
            .ok_or_else(|| Error::NotFound(format!("dissertation {id}")))
    }

    /// The stored file, byte for byte. Logged-in users only.
    pub fn download(&self, caller: &Caller, id: &DissertationId) -> Result<Download> {
        caller.require_user()?;
        let state = self.snapshot();
        let rec = state
            .dissertations
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("dissertation {id}")))?;
        let bytes = self.store.read_blob(&rec.file_ref.content_hash)?;
        Ok(Download {
            bytes,
            original_filename: rec.file_ref.original_filename.clone(),
            media_type: rec.file_ref.media_type.clone(),
        })
    }
}
