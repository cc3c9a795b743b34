//! Brute-force search evaluator.
//!
//! Scores every document straight from its raw field text, with no index:
//! term statistics are recounted by scanning the whole corpus for each query.
//! Shares no code with the library's tokenizer, index or ranking.

use std::cmp::Ordering;

use drs_core::{AdvancedQuery, DissertationId, DissertationRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub id: DissertationId,
    pub score: f64,
}

/// Lowercase, then cut at every character that is not a letter or digit.
pub fn terms(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_alphabetic() || ch.is_numeric() {
            current.push(ch);
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// (weight, terms) for each field of a record.
fn weighted_fields(d: &DissertationRecord) -> [(u64, Vec<String>); 5] {
    let mut keyword_terms = Vec::new();
    for k in &d.keywords {
        keyword_terms.extend(terms(k));
    }
    [
        (3, terms(&d.title)),
        (2, keyword_terms),
        (2, terms(&d.author_name)),
        (1, terms(&d.abstract_text)),
        (2, terms(&d.topic)),
    ]
}

/// Every record's fields, tokenized once per evaluation.
struct Tokenized<'a> {
    record: &'a DissertationRecord,
    fields: [(u64, Vec<String>); 5],
}

impl Tokenized<'_> {
    fn contains(&self, t: &str) -> bool {
        self.fields.iter().any(|(_, ts)| ts.iter().any(|x| x == t))
    }

    fn weighted_tf(&self, t: &str) -> u64 {
        self.fields
            .iter()
            .map(|(w, ts)| w * ts.iter().filter(|x| *x == t).count() as u64)
            .sum()
    }
}

fn tokenize_all(corpus: &[DissertationRecord]) -> Vec<Tokenized<'_>> {
    corpus
        .iter()
        .map(|record| Tokenized {
            record,
            fields: weighted_fields(record),
        })
        .collect()
}

/// `ln(N / df)` per query term, recounted by scanning; `None` when df is 0.
fn idfs(docs: &[Tokenized<'_>], query: &[String]) -> Vec<Option<f64>> {
    let n = docs.len() as f64;
    query
        .iter()
        .map(|t| match docs.iter().filter(|d| d.contains(t)).count() {
            0 => None,
            df => Some((n / df as f64).ln()),
        })
        .collect()
}

fn score(d: &Tokenized<'_>, query: &[String], idfs: &[Option<f64>]) -> f64 {
    let mut total = 0.0;
    for (t, idf) in query.iter().zip(idfs) {
        if let Some(idf) = idf {
            total += d.weighted_tf(t) as f64 * idf;
        }
    }
    total
}

fn sort(mut hits: Vec<Ranked>) -> Vec<Ranked> {
    hits.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    hits
}

/// Expected keyword search result, or `None` when the query has no terms.
pub fn simple(corpus: &[DissertationRecord], raw_query: &str) -> Option<Vec<Ranked>> {
    let q = terms(raw_query);
    if q.is_empty() {
        return None;
    }
    let docs = tokenize_all(corpus);
    let idfs = idfs(&docs, &q);
    let hits = docs
        .iter()
        .filter(|d| q.iter().any(|t| d.contains(t)))
        .map(|d| Ranked {
            id: d.record.dissertation_id.clone(),
            score: score(d, &q, &idfs),
        })
        .collect();
    Some(sort(hits))
}

fn blank_to_none(s: &Option<String>) -> Option<String> {
    match s {
        Some(s) if !s.trim().is_empty() => Some(s.trim().to_lowercase()),
        _ => None,
    }
}

/// Expected fielded search result, or `None` when the query is invalid.
pub fn advanced(corpus: &[DissertationRecord], q: &AdvancedQuery) -> Option<Vec<Ranked>> {
    let words = terms(&q.keywords);
    let author = blank_to_none(&q.author_substring);
    let topic = blank_to_none(&q.topic_substring);
    let has_criterion = !words.is_empty()
        || author.is_some()
        || topic.is_some()
        || q.degree.is_some()
        || q.year_from.is_some()
        || q.year_to.is_some();
    if !has_criterion {
        return None;
    }
    if let (Some(a), Some(b)) = (q.year_from, q.year_to) {
        if a > b {
            return None;
        }
    }
    let docs = tokenize_all(corpus);
    let idfs = idfs(&docs, &words);
    let mut hits = Vec::new();
    for t in &docs {
        if !words.is_empty() && !words.iter().any(|w| t.contains(w)) {
            continue;
        }
        let d = t.record;
        if let Some(a) = &author {
            if !d.author_name.to_lowercase().contains(a.as_str()) {
                continue;
            }
        }
        if let Some(t) = &topic {
            if !d.topic.to_lowercase().contains(t.as_str()) {
                continue;
            }
        }
        if let Some(deg) = q.degree {
            if d.degree != deg {
                continue;
            }
        }
        if q.year_from.is_some_and(|y| d.year < y) || q.year_to.is_some_and(|y| d.year > y) {
            continue;
        }
        hits.push(Ranked {
            id: d.dissertation_id.clone(),
            score: if words.is_empty() { 0.0 } else { score(t, &words, &idfs) },
        });
    }
    Some(sort(hits))
}

/// Compare ids exactly and scores within `tol`. Describes the first mismatch.
pub fn compare(actual: &[(DissertationId, f64)], expected: &[Ranked], tol: f64) -> Result<(), String> {
    if actual.len() != expected.len() {
        return Err(format!(
            "length {} != expected {}",
            actual.len(),
            expected.len()
        ));
    }
    for (i, ((id, s), e)) in actual.iter().zip(expected).enumerate() {
        if *id != e.id {
            return Err(format!("rank {i}: id {id} != expected {}", e.id));
        }
        if (s - e.score).abs() > tol {
            return Err(format!("rank {i}: score {s} != expected {}", e.score));
        }
    }
    Ok(())
}
