//! Random dissertation corpora and queries.

use drs_core::catalog::FileRef;
use drs_core::clock::Timestamp;
use drs_core::store::ContentHash;
use drs_core::{AdvancedQuery, Degree, DissertationId, DissertationRecord, UserId};
use rand::seq::IndexedRandom;
use rand::Rng;

const NAMES: &[&str] = &[
    "Zaid Ahmad", "Ali Hassan", "Siti Aminah", "Zainab Omar", "Lim Wei",
    "Kumar Raj", "Nur Aisyah", "Tan Boon", "Farah Zaidi", "Omar Ali",
];
const TOPICS: &[&str] = &[
    "Information Retrieval", "Databases", "Networks", "E-Learning",
    "Software Engineering", "Security", "Graphics",
];
const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", "-", "! ", "\t"];

pub fn vocabulary(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("w{i}")).collect()
}

fn phrase<R: Rng>(rng: &mut R, vocab: &[String], max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(SEPARATORS.choose(rng).unwrap());
        }
        let w = vocab.choose(rng).unwrap();
        if rng.random_bool(0.2) {
            out.push_str(&w.to_uppercase());
        } else {
            out.push_str(w);
        }
    }
    out
}

/// A record with random metadata. Title is always set; each of the other
/// four text fields is populated with probability one half.
pub fn random_record<R: Rng>(rng: &mut R, id: DissertationId, vocab: &[String]) -> DissertationRecord {
    let maybe = |rng: &mut R, f: &dyn Fn(&mut R) -> String| {
        if rng.random_bool(0.5) { f(rng) } else { String::new() }
    };
    let title = phrase(rng, vocab, 6);
    let abstract_text = maybe(rng, &|r| phrase(r, vocab, 20));
    let topic = maybe(rng, &|r| {
        format!("{} {}", TOPICS.choose(r).unwrap(), vocab.choose(r).unwrap())
    });
    let author_name = maybe(rng, &|r| NAMES.choose(r).unwrap().to_string());
    let keywords = if rng.random_bool(0.5) {
        (0..rng.random_range(1..4)).map(|_| phrase(rng, vocab, 2)).collect()
    } else {
        Vec::new()
    };
    DissertationRecord {
        dissertation_id: id,
        title,
        author_name,
        abstract_text,
        keywords,
        topic,
        degree: if rng.random_bool(0.5) { Degree::Master } else { Degree::PhD },
        year: rng.random_range(1980..=2012),
        file_ref: FileRef {
            content_hash: ContentHash::of(b"placeholder"),
            original_filename: "f.pdf".into(),
            size_bytes: 11,
            media_type: "application/pdf".into(),
        },
        uploaded_by: UserId::from("admin"),
        uploaded_at: Timestamp(0),
    }
}

pub fn random_corpus<R: Rng>(rng: &mut R, max_docs: usize, vocab: &[String]) -> Vec<DissertationRecord> {
    let n = rng.random_range(0..=max_docs);
    (0..n)
        .map(|i| random_record(rng, DissertationId::from(format!("d{i:04}")), vocab))
        .collect()
}

/// One to four vocabulary words, sometimes with an unknown word mixed in.
pub fn random_query<R: Rng>(rng: &mut R, vocab: &[String]) -> String {
    let mut q = phrase(rng, vocab, 4);
    if rng.random_bool(0.2) {
        q.push_str(" zzunknown");
    }
    q
}

pub fn random_advanced_query<R: Rng>(rng: &mut R, vocab: &[String]) -> AdvancedQuery {
    loop {
        let year_from = rng.random_bool(0.4).then(|| rng.random_range(1978..=2012));
        let year_to = rng
            .random_bool(0.4)
            .then(|| rng.random_range(year_from.unwrap_or(1978)..=2014));
        let q = AdvancedQuery {
            keywords: if rng.random_bool(0.6) { random_query(rng, vocab) } else { String::new() },
            author_substring: rng
                .random_bool(0.3)
                .then(|| ["zaid", "ALI", "a", "lim", "omar", "x"].choose(rng).unwrap().to_string()),
            topic_substring: rng
                .random_bool(0.3)
                .then(|| ["data", "NET", "e-l", "w1", "security"].choose(rng).unwrap().to_string()),
            degree: rng
                .random_bool(0.3)
                .then(|| if rng.random_bool(0.5) { Degree::Master } else { Degree::PhD }),
            year_from,
            year_to,
        };
        if q.validate().is_ok() {
            return q;
        }
    }
}
