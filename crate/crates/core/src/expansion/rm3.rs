use std::collections::BTreeMap;

use super::FeedbackSet;
use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::retrieval::WeightedQuery;

/// Maximum-likelihood term distribution of a token sequence.
fn mle(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.clone()).or_default() += 1.0;
    }
    let len = tokens.len() as f64;
    for v in counts.values_mut() {
        *v /= len;
    }
    counts
}

/// RM3: `weight(t) = λ·P(t|q) + (1 − λ)·P(t|R)`.
///
/// `P(t|R)` is the feedback documents' MLE term distributions mixed by their
/// normalized retrieval scores, cut to the top `fb_terms` terms (ties by term)
/// and renormalized. With no feedback the query's own MLE weights are
/// returned. Output weights sum to one, are positive, and are ordered by
/// descending weight then term.
pub fn rm3_expand(
    index: &InvertedIndex,
    query: &Query,
    feedback: &FeedbackSet,
    fb_terms: usize,
    orig_weight: f64,
) -> Result<WeightedQuery> {
    if !(0.0..=1.0).contains(&orig_weight) {
        return Err(Error::Contract(format!(
            "original query weight must be in [0, 1], got {orig_weight}"
        )));
    }
    if fb_terms == 0 {
        return Err(Error::Contract("fb_terms must be >= 1".into()));
    }
    let query_tokens = index.analyze(&query.text);
    let query_model = if query_tokens.is_empty() {
        BTreeMap::new()
    } else {
        mle(&query_tokens)
    };

    let total_score: f64 = feedback.docs.iter().map(|(_, s)| *s).sum();
    let mut relevance: BTreeMap<String, f64> = BTreeMap::new();
    if total_score > 0.0 {
        for (doc, score) in &feedback.docs {
            let tokens = index.analyze(&doc.text);
            if tokens.is_empty() {
                continue;
            }
            let doc_weight = score / total_score;
            for (t, p) in mle(&tokens) {
                *relevance.entry(t).or_default() += p * doc_weight;
            }
        }
    }

    if relevance.is_empty() {
        return Ok(finish(query_model));
    }

    let mut ranked: Vec<(String, f64)> = relevance.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(fb_terms);
    let mass: f64 = ranked.iter().map(|(_, p)| p).sum();

    // With an empty query the relevance model is all there is.
    let lambda = if query_model.is_empty() { 0.0 } else { orig_weight };
    let mut combined: BTreeMap<String, f64> = BTreeMap::new();
    for (t, p) in query_model {
        *combined.entry(t).or_default() += lambda * p;
    }
    for (t, p) in ranked {
        *combined.entry(t).or_default() += (1.0 - lambda) * p / mass;
    }
    Ok(finish(combined))
}

fn finish(weights: BTreeMap<String, f64>) -> WeightedQuery {
    let mut terms: Vec<(String, f64)> = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    WeightedQuery { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use crate::corpus::Document;
    use crate::expansion::get_feedback;
    use crate::retrieval::{search, Bm25Params};

    fn idx(docs: &[(&str, &str)]) -> InvertedIndex {
        let docs: Vec<Document> = docs.iter().map(|(i, t)| Document::new(*i, *t)).collect();
        InvertedIndex::build(&docs, AnalyzerConfig::plain()).unwrap()
    }

    fn single_feedback(text: &str) -> FeedbackSet {
        FeedbackSet {
            query: Query::new("q", "x"),
            docs: vec![(Document::new("f", text), 1.3)],
            fb_docs: 10,
        }
    }

    #[test]
    fn lambda_zero_single_doc() {
        let index = idx(&[("f", "x x y"), ("g", "z")]);
        let wq = rm3_expand(&index, &Query::new("q", "z"), &single_feedback("x x y"), 10, 0.0).unwrap();
        assert_eq!(wq.terms.len(), 2);
        assert_eq!(wq.terms[0].0, "x");
        assert!((wq.terms[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(wq.terms[1].0, "y");
        assert!((wq.terms[1].1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_feedback_is_query_mle() {
        let index = idx(&[("f", "x y")]);
        let fb = FeedbackSet {
            query: Query::new("q", "x x y"),
            docs: vec![],
            fb_docs: 10,
        };
        let wq = rm3_expand(&index, &Query::new("q", "x x y"), &fb, 10, 0.5).unwrap();
        assert_eq!(wq.terms, vec![("x".into(), 2.0 / 3.0), ("y".into(), 1.0 / 3.0)]);
    }

    #[test]
    fn fb_terms_cut_and_renormalize() {
        let index = idx(&[("f", "a a a b b c")]);
        let wq = rm3_expand(&index, &Query::new("q", "q"), &single_feedback("a a a b b c"), 2, 0.0).unwrap();
        let want = [("a", 0.6), ("b", 0.4)];
        assert_eq!(wq.terms.len(), 2);
        for ((t, w), (wt, ww)) in wq.terms.iter().zip(want) {
            assert_eq!(t, wt);
            assert!((w - ww).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_one_keeps_ranking() {
        let index = idx(&[
            ("d1", "a b c a"),
            ("d2", "b c d"),
            ("d3", "a d d e"),
            ("d4", "c c b"),
            ("d5", "e f a"),
        ]);
        let q = Query::new("q", "a c a");
        let p = Bm25Params::default();
        let fb = get_feedback(&index, &q, 10, p).unwrap();
        let wq = rm3_expand(&index, &q, &fb, 10, 1.0).unwrap();
        let base = search(&index, &WeightedQuery::parse(&index, &q.text), 100, p);
        let expanded = search(&index, &wq, 100, p);
        let ids = |v: &[crate::retrieval::ScoredDoc]| v.iter().map(|s| s.doc_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&base), ids(&expanded));
    }

    #[test]
    fn bad_lambda() {
        let index = idx(&[("f", "x")]);
        assert!(rm3_expand(&index, &Query::new("q", "x"), &single_feedback("x"), 10, 1.5).is_err());
        assert!(rm3_expand(&index, &Query::new("q", "x"), &single_feedback("x"), 0, 0.5).is_err());
    }
}
