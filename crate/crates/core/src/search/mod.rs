//! Metadata search: tokenizer, field-weighted inverted index, TF-IDF ranking.
//!
//! A document's score for query terms `t1..tn` is
//! `sum_i wtf(ti, d) * ln(N / df(ti))`, where `wtf` sums the term's frequency
//! in each field multiplied by that field's weight (title 3; keywords, author
//! and topic 2; abstract 1). Terms absent from the index contribute nothing.
//! Candidates are selected by containment, so a match whose score is zero
//! (a term present in every document) is still returned, after the positive
//! scores and ordered by id.

mod index;
mod query;
mod tokenize;

pub use index::{DocumentText, Field, InvertedIndex, Posting};
pub use query::{advanced_search, rank, simple_search, AdvancedQuery, SearchHit};
pub use tokenize::tokenize;

use serde::{Deserialize, Serialize};

use crate::auth::Caller;
use crate::catalog::PublicDissertation;
use crate::error::Result;
use crate::repository::Repository;
use crate::store::State;

/// A ranked hit with the public metadata of its record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub score: f64,
    pub dissertation: PublicDissertation,
}

fn rows(state: &State, hits: Vec<SearchHit>) -> Vec<ResultRow> {
    hits.into_iter()
        .filter_map(|h| {
            state.dissertations.get(&h.dissertation_id).map(|d| ResultRow {
                score: h.score,
                dissertation: d.public(),
            })
        })
        .collect()
}

impl Repository {
    /// Keyword search over the catalog. Open to guests.
    pub fn simple_search(&self, raw_query: &str) -> Result<Vec<SearchHit>> {
        simple_search(&self.snapshot().index, raw_query)
    }

    /// Fielded search. Logged-in users only.
    pub fn advanced_search(&self, caller: &Caller, query: &AdvancedQuery) -> Result<Vec<SearchHit>> {
        caller.require_user()?;
        let state = self.snapshot();
        advanced_search(&state.index, &state.dissertations, query)
    }

    /// [`Repository::simple_search`] with records, read from one snapshot.
    pub fn simple_search_rows(&self, raw_query: &str) -> Result<Vec<ResultRow>> {
        let state = self.snapshot();
        Ok(rows(&state, simple_search(&state.index, raw_query)?))
    }

    pub fn advanced_search_rows(&self, caller: &Caller, query: &AdvancedQuery) -> Result<Vec<ResultRow>> {
        caller.require_user()?;
        let state = self.snapshot();
        Ok(rows(&state, advanced_search(&state.index, &state.dissertations, query)?))
    }

    /// A fresh index built from the catalog alone.
    pub fn rebuild_index(&self) -> Result<InvertedIndex> {
        self.snapshot().rebuild_index()
    }
}
