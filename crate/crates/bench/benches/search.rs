use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drs_bench::Corpus;
use drs_core::search::{advanced_search, simple_search};
use drs_core::AdvancedQuery;

const SIZES: [usize; 3] = [1_000, 5_000, 20_000];

fn keyword_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("simple_search");
    for size in SIZES {
        let mut corpus = Corpus::new(size);
        let index = corpus.index();
        for terms in [1, 4] {
            let queries: Vec<String> = (0..64).map(|_| corpus.query(terms)).collect();
            let mut next = queries.iter().cycle();
            group.bench_function(BenchmarkId::new(format!("{terms}_terms"), size), |b| {
                b.iter(|| simple_search(&index, black_box(next.next().unwrap())).unwrap())
            });
        }
    }
    group.finish();
}

fn fielded_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("advanced_search");
    for size in SIZES {
        let mut corpus = Corpus::new(size);
        let index = corpus.index();
        let catalog: BTreeMap<_, _> = corpus
            .records
            .iter()
            .map(|r| (r.dissertation_id.clone(), r.clone()))
            .collect();
        let with_keywords = AdvancedQuery {
            keywords: corpus.query(2),
            year_from: Some(2000),
            year_to: Some(2010),
            ..AdvancedQuery::default()
        };
        let filters_only = AdvancedQuery {
            topic_substring: Some("topic 1".into()),
            year_from: Some(1995),
            ..AdvancedQuery::default()
        };
        group.bench_function(BenchmarkId::new("keywords_and_years", size), |b| {
            b.iter(|| advanced_search(&index, &catalog, black_box(&with_keywords)).unwrap())
        });
        group.bench_function(BenchmarkId::new("filters_only", size), |b| {
            b.iter(|| advanced_search(&index, &catalog, black_box(&filters_only)).unwrap())
        });
    }
    group.finish();
}

fn index_maintenance(c: &mut Criterion) {
    let mut group = c.benchmark_group("index");
    group.sample_size(20);
    for size in SIZES {
        let mut corpus = Corpus::new(size);
        let index = corpus.index();
        let extra = corpus.extra(0);
        group.bench_function(BenchmarkId::new("add_and_remove_one", size), |b| {
            let mut index = index.clone();
            b.iter(|| {
                index.index_document(&extra.dissertation_id, &extra.document_text()).unwrap();
                index.remove_document(&extra.dissertation_id).unwrap();
            })
        });
        group.bench_function(BenchmarkId::new("rebuild", size), |b| b.iter(|| corpus.index()));
    }
    group.finish();
}

criterion_group!(benches, keyword_search, fielded_search, index_maintenance);
criterion_main!(benches);
