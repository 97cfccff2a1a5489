//! Query expansion from pseudo-relevance feedback.
//!
//! Three strategies share the same feedback step (BM25 top documents):
//! [`rm3_expand`] interpolates a relevance model into the query weights,
//! [`prf_offer_weight_expand`] selects terms by Robertson/Sparck Jones offer
//! weight, and [`generative_expand`] asks an external generator for terms,
//! which [`reformulate`] then appends to the query text.

mod generative;
mod prf;
mod rm3;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use generative::generative_expand;
pub use prf::prf_offer_weight_expand;
pub use rm3::rm3_expand;

use crate::analysis::AnalyzerConfig;
use crate::corpus::{Document, Query};
use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::retrieval::{search, Bm25Params, WeightedQuery};

pub const DEFAULT_FB_DOCS: usize = 10;
pub const DEFAULT_FB_TERMS: usize = 10;
pub const DEFAULT_ORIG_WEIGHT: f64 = 0.5;
/// Number of generated terms appended to the query.
pub const DEFAULT_N: usize = 7;

/// Top-ranked documents for a query, assumed relevant.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSet {
    pub query: Query,
    /// Descending by initial retrieval score.
    pub docs: Vec<(Document, f64)>,
    pub fb_docs: usize,
}

impl FeedbackSet {
    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub term: String,
    pub weight: f64,
}

impl ExpansionTerm {
    pub fn new(term: impl Into<String>, weight: f64) -> Self {
        Self {
            term: term.into(),
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedQuery {
    pub original: Query,
    /// The terms actually appended, in order.
    pub added_terms: Vec<ExpansionTerm>,
    pub n: usize,
    pub text: String,
}

impl ExpandedQuery {
    pub fn as_query(&self) -> Query {
        Query::new(self.original.query_id.clone(), self.text.clone())
    }
}

/// Initial BM25 retrieval with document texts attached.
pub fn get_feedback(
    index: &InvertedIndex,
    query: &Query,
    fb_docs: usize,
    params: Bm25Params,
) -> Result<FeedbackSet> {
    if fb_docs == 0 {
        return Err(Error::Contract("fb_docs must be >= 1".into()));
    }
    let hits = search(index, &WeightedQuery::parse(index, &query.text), fb_docs, params);
    let docs = hits
        .into_iter()
        .map(|h| {
            let ord = index.ordinal(&h.doc_id).expect("search returns indexed ids");
            (index.document(ord), h.score)
        })
        .collect();
    Ok(FeedbackSet {
        query: query.clone(),
        docs,
        fb_docs,
    })
}

/// Append the first `n` usable candidate terms to the query text, separated
/// by single spaces.
///
/// A candidate is skipped when every token of its analyzed form already
/// occurs in the analyzed query or in an earlier accepted candidate; this
/// also skips candidates that analyze to nothing (stopwords, punctuation).
pub fn reformulate(
    analyzer: &AnalyzerConfig,
    query: &Query,
    terms: &[ExpansionTerm],
    n: usize,
) -> ExpandedQuery {
    let mut seen: HashSet<String> = analyzer.analyze(&query.text).into_iter().collect();
    let mut added = Vec::new();
    for t in terms {
        if added.len() == n {
            break;
        }
        let toks = analyzer.analyze(&t.term);
        if toks.iter().all(|tok| seen.contains(tok)) {
            continue;
        }
        seen.extend(toks);
        added.push(t.clone());
    }
    let text = if added.is_empty() {
        query.text.clone()
    } else {
        let appended: Vec<&str> = added.iter().map(|t| t.term.as_str()).collect();
        format!("{} {}", query.text, appended.join(" "))
    };
    ExpandedQuery {
        original: query.clone(),
        n: added.len(),
        added_terms: added,
        text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use proptest::prelude::*;

    fn terms(ts: &[&str]) -> Vec<ExpansionTerm> {
        ts.iter().map(|t| ExpansionTerm::new(*t, 1.0)).collect()
    }

    #[test]
    fn appends_first_n() {
        let q = Query::new("q", "jaguar speed");
        let e = reformulate(&AnalyzerConfig::default(), &q, &terms(&["cat", "animal", "mph"]), 2);
        assert_eq!(e.text, "jaguar speed cat animal");
        assert_eq!(e.n, 2);
    }

    #[test]
    fn empty_terms_identity() {
        let q = Query::new("q", "jaguar speed");
        let e = reformulate(&AnalyzerConfig::default(), &q, &[], 7);
        assert_eq!(e.text, q.text);
        assert_eq!(e.n, 0);
    }

    #[test]
    fn drops_query_duplicates() {
        let q = Query::new("q", "fast car");
        let e = reformulate(&AnalyzerConfig::default(), &q, &terms(&["car", "auto"]), 2);
        assert_eq!(e.text, "fast car auto");
    }

    #[test]
    fn duplicate_detection_uses_analyzed_form() {
        let q = Query::new("q", "fast cars");
        let e = reformulate(
            &AnalyzerConfig::default(),
            &q,
            &terms(&["Car", "the", "autos", "auto", "drive"]),
            5,
        );
        assert_eq!(e.text, "fast cars autos drive");
    }

    #[test]
    fn fewer_candidates_than_n() {
        let q = Query::new("q", "x");
        let e = reformulate(&AnalyzerConfig::plain(), &q, &terms(&["y"]), 7);
        assert_eq!(e.text, "x y");
        assert_eq!(e.added_terms.len(), 1);
    }

    #[test]
    fn feedback_bounds() {
        let docs = [Document::new("d1", "a b"), Document::new("d2", "b c")];
        let idx = InvertedIndex::build(&docs, AnalyzerConfig::plain()).unwrap();
        let fb = get_feedback(&idx, &Query::new("q", "b"), DEFAULT_FB_DOCS, Bm25Params::default())
            .unwrap();
        assert_eq!(fb.len(), 2);
        assert_eq!(fb.fb_docs, 10);
        assert!(fb.docs[0].1 >= fb.docs[1].1);
        assert_eq!(fb.docs[0].0.text, idx.doc_text(idx.ordinal(&fb.docs[0].0.doc_id).unwrap()));
        let none = get_feedback(&idx, &Query::new("q", "zzz"), 10, Bm25Params::default()).unwrap();
        assert!(none.is_empty());
        assert!(get_feedback(&idx, &Query::new("q", "b"), 0, Bm25Params::default()).is_err());
    }

    proptest! {
        #[test]
        fn reformulate_prefix_and_identities(
            q in "[a-z]{1,6}( [a-z]{1,6}){0,4}",
            cands in proptest::collection::vec("[a-zA-Z]{1,7}", 0..12),
            n in 0usize..12,
        ) {
            let query = Query::new("q", q.clone());
            let cfg = AnalyzerConfig::default();
            let ts = terms(&cands.iter().map(String::as_str).collect::<Vec<_>>());
            let e = reformulate(&cfg, &query, &ts, n);
            prop_assert!(e.text.starts_with(&q));
            prop_assert!(e.n <= n);
            prop_assert_eq!(reformulate(&cfg, &query, &ts, 0).text, q.clone());
            prop_assert_eq!(reformulate(&cfg, &query, &[], n).text, q.clone());
            let original: HashSet<String> = cfg.analyze(&q).into_iter().collect();
            for t in &e.added_terms {
                let toks = cfg.analyze(&t.term);
                prop_assert!(toks.iter().any(|tok| !original.contains(tok)));
            }
            if e.n > 0 {
                let joined: Vec<&str> = e.added_terms.iter().map(|t| t.term.as_str()).collect();
                prop_assert_eq!(e.text, format!("{} {}", q, joined.join(" ")));
            }
        }
    }
}
