use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};
use crate::types::DissertationId;

/// Indexed metadata fields, each with a fixed ranking weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Field {
    Title,
    Keywords,
    Author,
    Abstract,
    Topic,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Title,
        Field::Keywords,
        Field::Author,
        Field::Abstract,
        Field::Topic,
    ];

    pub const fn weight(self) -> u32 {
        match self {
            Field::Title => 3,
            Field::Keywords | Field::Author | Field::Topic => 2,
            Field::Abstract => 1,
        }
    }
}

/// One (document, field) occurrence record for a term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub dissertation_id: DissertationId,
    pub field: Field,
    pub term_frequency: u32,
}

/// The text of one document, split by field.
#[derive(Debug, Clone, Copy)]
pub struct DocumentText<'a> {
    pub title: &'a str,
    pub keywords: &'a [String],
    pub author: &'a str,
    pub abstract_text: &'a str,
    pub topic: &'a str,
}

impl DocumentText<'_> {
    /// Terms of every field, in field order.
    pub fn field_tokens(&self) -> Vec<(Field, Vec<String>)> {
        Field::ALL
            .iter()
            .map(|&field| {
                let tokens = match field {
                    Field::Title => tokenize(self.title),
                    Field::Keywords => self.keywords.iter().flat_map(|k| tokenize(k)).collect(),
                    Field::Author => tokenize(self.author),
                    Field::Abstract => tokenize(self.abstract_text),
                    Field::Topic => tokenize(self.topic),
                };
                (field, tokens)
            })
            .collect()
    }
}

/// Term → postings map over dissertation metadata.
///
/// Posting lists are kept sorted by `(dissertation_id, field)`, so all
/// postings of one document for a term are contiguous. `documents` records
/// every indexed id (including documents whose fields produced no terms) along
/// with the set of terms it contributed, which makes removal cheap.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexSnapshot", into = "IndexSnapshot")]
pub struct InvertedIndex {
    documents: BTreeMap<DissertationId, BTreeSet<String>>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_freq: BTreeMap<String, usize>,
}

impl InvertedIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of indexed documents (N).
    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    /// Number of distinct documents containing `term`.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn contains(&self, id: &DissertationId) -> bool {
        self.documents.contains_key(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &DissertationId> {
        self.documents.keys()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Postings of `term` that belong to document `id`.
    pub fn doc_postings(&self, term: &str, id: &DissertationId) -> &[Posting] {
        let list = self.postings(term);
        let start = list.partition_point(|p| p.dissertation_id < *id);
        let end = start + list[start..].partition_point(|p| p.dissertation_id == *id);
        &list[start..end]
    }

    pub fn index_document(&mut self, id: &DissertationId, doc: &DocumentText<'_>) -> Result<()> {
        if self.contains(id) {
            return Err(Error::AlreadyIndexed(id.to_string()));
        }
        let mut counts: BTreeMap<(String, Field), u32> = BTreeMap::new();
        for (field, tokens) in doc.field_tokens() {
            for token in tokens {
                *counts.entry((token, field)).or_default() += 1;
            }
        }

        let mut terms = BTreeSet::new();
        for ((term, field), tf) in counts {
            let list = self.postings.entry(term.clone()).or_default();
            let at = list.partition_point(|p| (&p.dissertation_id, p.field) < (id, field));
            list.insert(
                at,
                Posting {
                    dissertation_id: id.clone(),
                    field,
                    term_frequency: tf,
                },
            );
            if terms.insert(term.clone()) {
                *self.doc_freq.entry(term).or_default() += 1;
            }
        }
        self.documents.insert(id.clone(), terms);
        Ok(())
    }

    pub fn remove_document(&mut self, id: &DissertationId) -> Result<()> {
        let terms = self
            .documents
            .remove(id)
            .ok_or_else(|| Error::NotIndexed(id.to_string()))?;
        for term in terms {
            if let Some(list) = self.postings.get_mut(&term) {
                list.retain(|p| p.dissertation_id != *id);
                if list.is_empty() {
                    self.postings.remove(&term);
                }
            }
            if let Some(df) = self.doc_freq.get_mut(&term) {
                *df -= 1;
                if *df == 0 {
                    self.doc_freq.remove(&term);
                }
            }
        }
        Ok(())
    }

    /// Field-weighted term frequency of `term` in document `id`.
    pub fn weighted_tf(&self, term: &str, id: &DissertationId) -> u64 {
        self.doc_postings(term, id)
            .iter()
            .map(|p| u64::from(p.field.weight()) * u64::from(p.term_frequency))
            .sum()
    }

    /// `ln(N / df)`, or `None` when the term is absent from the index.
    pub fn idf(&self, term: &str) -> Option<f64> {
        match self.doc_freq(term) {
            0 => None,
            df => Some((self.doc_count() as f64 / df as f64).ln()),
        }
    }

    /// TF-IDF score of document `id` for the query terms.
    ///
    /// Each query term contributes its field-weighted frequency in the
    /// document times its idf; repeated query terms contribute repeatedly.
    pub fn score(&self, id: &DissertationId, tokens: &[String]) -> Result<f64> {
        if !self.contains(id) {
            return Err(Error::NotIndexed(id.to_string()));
        }
        let mut score = 0.0;
        for token in tokens {
            if let Some(idf) = self.idf(token) {
                score += self.weighted_tf(token, id) as f64 * idf;
            }
        }
        Ok(score)
    }

    /// Ids of all documents containing at least one of `tokens`.
    pub fn candidates(&self, tokens: &[String]) -> BTreeSet<DissertationId> {
        tokens
            .iter()
            .flat_map(|t| self.postings(t))
            .map(|p| p.dissertation_id.clone())
            .collect()
    }

    /// Build an index from scratch.
    pub fn rebuild<'a, I>(docs: I) -> Result<InvertedIndex>
    where
        I: IntoIterator<Item = (&'a DissertationId, DocumentText<'a>)>,
    {
        let mut index = InvertedIndex::new();
        for (id, doc) in docs {
            index.index_document(id, &doc)?;
        }
        Ok(index)
    }
}

/// On-disk form: the derived maps are recomputed on load.
#[derive(Serialize, Deserialize)]
struct IndexSnapshot {
    documents: Vec<DissertationId>,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl From<InvertedIndex> for IndexSnapshot {
    fn from(index: InvertedIndex) -> Self {
        IndexSnapshot {
            documents: index.documents.into_keys().collect(),
            postings: index.postings,
        }
    }
}

impl TryFrom<IndexSnapshot> for InvertedIndex {
    type Error = String;

    fn try_from(snap: IndexSnapshot) -> Result<Self, String> {
        let mut documents: BTreeMap<DissertationId, BTreeSet<String>> = snap
            .documents
            .into_iter()
            .map(|id| (id, BTreeSet::new()))
            .collect();
        let mut doc_freq = BTreeMap::new();
        for (term, list) in &snap.postings {
            if list.is_empty() {
                return Err(format!("term {term:?} has an empty posting list"));
            }
            let mut distinct = 0;
            for (i, p) in list.iter().enumerate() {
                if p.term_frequency == 0 {
                    return Err(format!("term {term:?} has a zero frequency posting"));
                }
                if i > 0 {
                    let prev = &list[i - 1];
                    if (&prev.dissertation_id, prev.field) >= (&p.dissertation_id, p.field) {
                        return Err(format!("postings of {term:?} are not strictly sorted"));
                    }
                }
                let doc_terms = documents.get_mut(&p.dissertation_id).ok_or_else(|| {
                    format!("term {term:?} references unknown document {}", p.dissertation_id)
                })?;
                if doc_terms.insert(term.clone()) {
                    distinct += 1;
                }
            }
            doc_freq.insert(term.clone(), distinct);
        }
        Ok(InvertedIndex {
            documents,
            postings: snap.postings,
            doc_freq,
        })
    }
}
