//! BM25 ranked retrieval.
//!
//! Uses the Lucene formulation with a non-negative idf:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(t, d) = idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//! ```
//!
//! A query is a list of weighted terms; a document's score is the weighted sum
//! of its per-term scores.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::InvertedIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Self { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::Contract(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Contract(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// One ranked result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Analyzed query terms with non-negative weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    pub terms: Vec<(String, f64)>,
}

impl WeightedQuery {
    /// An unweighted query: each distinct token gets weight equal to its
    /// number of occurrences, in first-occurrence order. This scores exactly
    /// like one clause per token.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut terms: Vec<(String, f64)> = Vec::new();
        for t in tokens {
            let t = t.into();
            match terms.iter_mut().find(|(u, _)| *u == t) {
                Some((_, w)) => *w += 1.0,
                None => terms.push((t, 1.0)),
            }
        }
        Self { terms }
    }

    /// Analyze `text` with the index's analyzer.
    pub fn parse(index: &InvertedIndex, text: &str) -> Self {
        Self::from_tokens(index.analyze(text))
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms
            .iter()
            .filter(|(t, _)| t == term)
            .map(|(_, w)| *w)
            .sum()
    }
}

pub fn idf(df: usize, num_docs: usize) -> f64 {
    let (df, n) = (df as f64, num_docs as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// BM25 contribution of one term to one document.
pub fn bm25_term_score(
    tf: u32,
    df: usize,
    doc_len: u32,
    num_docs: usize,
    avgdl: f64,
    params: Bm25Params,
) -> Result<f64> {
    if tf < 1 {
        return Err(Error::Contract("tf must be >= 1".into()));
    }
    if num_docs < 1 || df < 1 || df > num_docs {
        return Err(Error::Contract(format!(
            "need 1 <= df <= N, got df={df} N={num_docs}"
        )));
    }
    if avgdl.is_nan() || avgdl <= 0.0 {
        return Err(Error::Contract(format!("avgdl must be > 0, got {avgdl}")));
    }
    params.validate()?;
    Ok(term_score(idf(df, num_docs), tf, doc_len, avgdl, params))
}

#[inline]
fn term_score(idf: f64, tf: u32, doc_len: u32, avgdl: f64, p: Bm25Params) -> f64 {
    let tf = f64::from(tf);
    let norm = p.k1 * (1.0 - p.b + p.b * f64::from(doc_len) / avgdl);
    idf * tf * (p.k1 + 1.0) / (tf + norm)
}

/// Ranking order: higher score first, then ascending doc id.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Top-`k` documents for `query`. Documents whose score is not positive are
/// left out.
pub fn search(
    index: &InvertedIndex,
    query: &WeightedQuery,
    k: usize,
    params: Bm25Params,
) -> Vec<ScoredDoc> {
    if k == 0 || query.is_empty() {
        return Vec::new();
    }
    let n = index.num_docs();
    let avgdl = index.avgdl();
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<u32> = Vec::new();
    for (term, weight) in &query.terms {
        let postings = index.postings(term);
        if postings.is_empty() || *weight == 0.0 {
            continue;
        }
        let term_idf = idf(postings.len(), n);
        for p in postings {
            let slot = &mut acc[p.doc as usize];
            if *slot == 0.0 {
                touched.push(p.doc);
            }
            *slot += weight * term_score(term_idf, p.tf, index.doc_len(p.doc), avgdl, params);
        }
    }
    touched.sort_unstable();
    touched.dedup();
    let mut hits: Vec<(u32, f64)> = touched
        .into_iter()
        .map(|d| (d, acc[d as usize]))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    let cmp = |a: &(u32, f64), b: &(u32, f64)| {
        rank_order(a.1, index.doc_id(a.0), b.1, index.doc_id(b.0))
    };
    if hits.len() > k {
        hits.select_nth_unstable_by(k - 1, cmp);
        hits.truncate(k);
    }
    hits.sort_by(cmp);
    hits.into_iter()
        .enumerate()
        .map(|(i, (d, score))| ScoredDoc {
            doc_id: index.doc_id(d).to_owned(),
            score,
            rank: i + 1,
        })
        .collect()
}

/// Score arbitrary documents against `query` using the index's collection
/// statistics. Terms absent from the index contribute nothing.
pub fn score_text(
    index: &InvertedIndex,
    query: &WeightedQuery,
    doc_tokens: &[String],
    params: Bm25Params,
) -> f64 {
    let n = index.num_docs();
    let doc_len = doc_tokens.len() as u32;
    let mut total = 0.0;
    for (term, weight) in &query.terms {
        let df = index.df(term);
        if df == 0 || *weight == 0.0 {
            continue;
        }
        let tf = doc_tokens.iter().filter(|t| *t == term).count() as u32;
        if tf == 0 {
            continue;
        }
        total += weight * term_score(idf(df, n), tf, doc_len, index.avgdl(), params);
    }
    total
}
