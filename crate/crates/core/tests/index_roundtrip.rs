use gqeprf_core::analysis::AnalyzerConfig;
use gqeprf_core::corpus::Document;
use gqeprf_core::index::InvertedIndex;
use gqeprf_core::retrieval::{search, Bm25Params, WeightedQuery};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "retrieval", "running", "runs", "the", "query", "queries", "documents", "document", "expansion",
    "feedback", "relevance", "generated", "generator", "terms", "Ranking", "ranked", "an", "of",
    "neural", "networks", "BM25", "café", "naïve", "x", "42", "well-known", "it's",
];

fn random_corpus(seed: u64, n: usize) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(0..40);
            let text: Vec<&str> = (0..len).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
            Document::new(format!("D{seed}-{i}"), text.join(" "))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn save_load_identical(seed in any::<u64>()) {
        let docs = random_corpus(seed, 1000);
        let index = InvertedIndex::build(&docs, AnalyzerConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.bin");
        index.save(&path).unwrap();
        let back = InvertedIndex::load(&path).unwrap();
        prop_assert_eq!(&back, &index);

        let p = Bm25Params::default();
        for q in ["retrieval feedback", "running queries", "café x 42"] {
            let a = search(&index, &WeightedQuery::parse(&index, q), 50, p);
            let b = search(&back, &WeightedQuery::parse(&back, q), 50, p);
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn missing_file_names_path() {
    let err = InvertedIndex::load(std::path::Path::new("/nonexistent/idx.bin")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/idx.bin"));
}
