//! Synthetic catalogs for benchmarking.
//!
//! Word choice is skewed so a few terms are common and most are rare, which
//! gives posting lists of realistic shape.

use drs_core::catalog::FileRef;
use drs_core::clock::Timestamp;
use drs_core::search::InvertedIndex;
use drs_core::store::ContentHash;
use drs_core::{Degree, DissertationId, DissertationRecord, UserId};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const VOCABULARY: usize = 5_000;

pub struct Corpus {
    pub records: Vec<DissertationRecord>,
    rng: StdRng,
}

impl Corpus {
    /// `size` records from a fixed seed.
    pub fn new(size: usize) -> Corpus {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let records = (0..size).map(|i| record(&mut rng, i)).collect();
        Corpus { records, rng }
    }

    pub fn index(&self) -> InvertedIndex {
        InvertedIndex::rebuild(self.records.iter().map(|r| (&r.dissertation_id, r.document_text())))
            .expect("fresh ids")
    }

    /// A query of `terms` words drawn like document text.
    pub fn query(&mut self, terms: usize) -> String {
        (0..terms).map(|_| word(&mut self.rng)).collect::<Vec<_>>().join(" ")
    }

    /// A record not yet in the corpus.
    pub fn extra(&mut self, n: usize) -> DissertationRecord {
        record(&mut self.rng, self.records.len() + n)
    }
}

fn word(rng: &mut StdRng) -> String {
    let skew: f64 = rng.random::<f64>().powi(3);
    format!("t{}", (skew * VOCABULARY as f64) as usize)
}

fn words(rng: &mut StdRng, n: usize) -> String {
    (0..n).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

fn record(rng: &mut StdRng, i: usize) -> DissertationRecord {
    let title_len = rng.random_range(4..12);
    let abstract_len = rng.random_range(80..200);
    DissertationRecord {
        dissertation_id: DissertationId::from(format!("d{i:07}")),
        title: words(rng, title_len),
        author_name: format!("Author {}", rng.random_range(0..2_000)),
        abstract_text: words(rng, abstract_len),
        keywords: (0..rng.random_range(2..6)).map(|_| word(rng)).collect(),
        topic: format!("Topic {}", rng.random_range(0..40)),
        degree: if rng.random_bool(0.7) { Degree::Master } else { Degree::PhD },
        year: rng.random_range(1990..=2025),
        file_ref: FileRef {
            content_hash: ContentHash::of(format!("file {i}").as_bytes()),
            original_filename: format!("thesis-{i}.pdf"),
            size_bytes: 1,
            media_type: "application/pdf".into(),
        },
        uploaded_by: UserId::from("admin"),
        uploaded_at: Timestamp(0),
    }
}
