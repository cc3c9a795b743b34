use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use super::tokenize::tokenize;
use crate::catalog::DissertationRecord;
use crate::error::{Error, Result};
use crate::types::{Degree, DissertationId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub dissertation_id: DissertationId,
    pub score: f64,
}

/// Fielded query. Every given criterion must hold; `keywords` also ranks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvancedQuery {
    /// Free text, tokenized like document fields.
    pub keywords: String,
    pub author_substring: Option<String>,
    pub topic_substring: Option<String>,
    pub degree: Option<Degree>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
}

impl AdvancedQuery {
    fn author(&self) -> Option<String> {
        non_blank(&self.author_substring)
    }

    fn topic(&self) -> Option<String> {
        non_blank(&self.topic_substring)
    }

    pub fn validate(&self) -> Result<()> {
        let any = !tokenize(&self.keywords).is_empty()
            || self.author().is_some()
            || self.topic().is_some()
            || self.degree.is_some()
            || self.year_from.is_some()
            || self.year_to.is_some();
        if !any {
            return Err(Error::validation("advanced search needs at least one criterion"));
        }
        if let (Some(from), Some(to)) = (self.year_from, self.year_to) {
            if from > to {
                return Err(Error::validation(format!(
                    "year_from {from} is after year_to {to}"
                )));
            }
        }
        Ok(())
    }

    /// Whether the metadata filters (everything except keywords) accept `rec`.
    pub fn accepts(&self, rec: &DissertationRecord) -> bool {
        if let Some(a) = self.author() {
            if !rec.author_name.to_lowercase().contains(&a) {
                return false;
            }
        }
        if let Some(t) = self.topic() {
            if !rec.topic.to_lowercase().contains(&t) {
                return false;
            }
        }
        if self.degree.is_some_and(|d| d != rec.degree) {
            return false;
        }
        if self.year_from.is_some_and(|y| rec.year < y) {
            return false;
        }
        if self.year_to.is_some_and(|y| rec.year > y) {
            return false;
        }
        true
    }
}

fn non_blank(s: &Option<String>) -> Option<String> {
    s.as_deref()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
}

/// Score descending, then id ascending.
pub fn rank(hits: &mut [SearchHit]) {
    hits.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.dissertation_id.cmp(&b.dissertation_id),
        other => other,
    });
}

/// Keyword search: every document containing any query term, ranked.
pub fn simple_search(index: &InvertedIndex, raw_query: &str) -> Result<Vec<SearchHit>> {
    let tokens = tokenize(raw_query);
    if tokens.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let mut hits = index
        .candidates(&tokens)
        .into_iter()
        .map(|id| {
            let score = index.score(&id, &tokens)?;
            Ok(SearchHit {
                dissertation_id: id,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rank(&mut hits);
    Ok(hits)
}

/// Fielded search over the catalog.
///
/// Starts from the keyword candidates, or every record when no keywords are
/// given, then keeps the records that pass all metadata filters.
pub fn advanced_search(
    index: &InvertedIndex,
    catalog: &BTreeMap<DissertationId, DissertationRecord>,
    query: &AdvancedQuery,
) -> Result<Vec<SearchHit>> {
    query.validate()?;
    let tokens = tokenize(&query.keywords);
    let candidates: Vec<DissertationId> = if tokens.is_empty() {
        catalog.keys().cloned().collect()
    } else {
        index.candidates(&tokens).into_iter().collect()
    };

    let mut hits = Vec::new();
    for id in candidates {
        let Some(rec) = catalog.get(&id) else {
            continue;
        };
        if !query.accepts(rec) {
            continue;
        }
        let score = if tokens.is_empty() {
            0.0
        } else {
            index.score(&id, &tokens)?
        };
        hits.push(SearchHit {
            dissertation_id: id,
            score,
        });
    }
    rank(&mut hits);
    Ok(hits)
}
