//! Deterministic stand-ins for the neural generator and the external
//! reranker, driven by the engine's own index statistics.
//!
//! The generator answers `q [SEP] d` with the ten highest `tf(t, d) * idf(t)`
//! terms of `d`, reported in the surface form of their first occurrence.
//! The scorer answers with the BM25 score of each document text against the
//! query.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::corpus::Document;
use crate::error::Result;
use crate::generator_client::{GenRequest, GenResponse, Scorer, TermGenerator};
use crate::index::InvertedIndex;
use crate::protocol::{DocScore, Request, Response, TermScore, SEP};
use crate::retrieval::{idf, score_text, Bm25Params, WeightedQuery};
use crate::server::Handler;

/// Upper bound on terms returned per request, whatever the caller asks for.
pub const MOCK_TERMS_PER_DOC: usize = 10;

#[derive(Clone)]
pub struct MockGenerator {
    index: Arc<InvertedIndex>,
}

impl MockGenerator {
    pub fn new(index: Arc<InvertedIndex>) -> Self {
        Self { index }
    }

    /// Terms for a raw protocol input string.
    pub fn terms_for_input(&self, input: &str, max_terms: usize) -> Vec<TermScore> {
        let doc = split_input(input).map_or("", |(_, d)| d);
        self.terms_for_document(doc, max_terms)
    }

    pub fn terms_for_document(&self, text: &str, max_terms: usize) -> Vec<TermScore> {
        let mut tf: BTreeMap<String, (u32, String)> = BTreeMap::new();
        for (surface, term) in crate::analysis::analyze_with_surface(text, self.index.analyzer()) {
            tf.entry(term).or_insert((0, surface)).0 += 1;
        }
        let n = self.index.num_docs();
        let mut scored: Vec<TermScore> = tf
            .into_iter()
            .map(|(term, (count, surface))| TermScore {
                term: surface,
                score: f64::from(count) * idf(self.index.df(&term), n),
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
        scored.truncate(max_terms.min(MOCK_TERMS_PER_DOC));
        scored
    }
}

/// Split generator input at the first separator.
pub fn split_input(input: &str) -> Option<(&str, &str)> {
    let marker = format!(" {SEP} ");
    if let Some(pair) = input.split_once(&marker) {
        return Some(pair);
    }
    // the document part may be empty, leaving a trailing "[SEP]"
    input
        .strip_suffix(&format!(" {SEP}"))
        .map(|q| (q, ""))
}

impl TermGenerator for MockGenerator {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        Ok(GenResponse {
            terms: self.terms_for_input(&req.input_text, req.max_terms),
        })
    }
}

#[derive(Clone)]
pub struct MockScorer {
    index: Arc<InvertedIndex>,
    params: Bm25Params,
}

impl MockScorer {
    pub fn new(index: Arc<InvertedIndex>, params: Bm25Params) -> Self {
        Self { index, params }
    }

    fn score_one(&self, query: &WeightedQuery, text: &str) -> f64 {
        score_text(&self.index, query, &self.index.analyze(text), self.params)
    }
}

impl Scorer for MockScorer {
    fn score(&mut self, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        let q = WeightedQuery::parse(&self.index, query);
        Ok(docs.iter().map(|d| self.score_one(&q, &d.text)).collect())
    }
}

/// Protocol handler combining the mock generator and scorer; this is what
/// `serve-mock` exposes.
pub struct MockService {
    generator: MockGenerator,
    scorer: MockScorer,
}

impl MockService {
    pub fn new(index: Arc<InvertedIndex>, params: Bm25Params) -> Self {
        Self {
            generator: MockGenerator::new(index.clone()),
            scorer: MockScorer::new(index, params),
        }
    }
}

impl Handler for MockService {
    fn handle(&self, request: Request) -> Response {
        match request {
            Request::Generate { input, max_terms } => Response::Terms {
                terms: self.generator.terms_for_input(&input, max_terms),
            },
            Request::Score { query, docs } => {
                let q = WeightedQuery::parse(&self.scorer.index, &query);
                Response::Scores {
                    scores: docs
                        .into_iter()
                        .map(|d| DocScore {
                            score: self.scorer.score_one(&q, &d.text),
                            id: d.id,
                        })
                        .collect(),
                }
            }
        }
    }
}
