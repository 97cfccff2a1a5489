use std::collections::{BTreeMap, BTreeSet};

use super::{ExpansionTerm, FeedbackSet};
use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::index::InvertedIndex;

/// Robertson/Sparck Jones offer weight of a term seen in `r` of `big_r`
/// feedback documents and in `df` of `n` collection documents:
///
/// ```text
/// OW = r * ln( (r + 0.5)(N - df - R + r + 0.5) / ((df - r + 0.5)(R - r + 0.5)) )
/// ```
pub fn offer_weight(r: usize, big_r: usize, df: usize, n: usize) -> f64 {
    let (r, big_r, df, n) = (r as f64, big_r as f64, df as f64, n as f64);
    let rsj = ((r + 0.5) * (n - df - big_r + r + 0.5)) / ((df - r + 0.5) * (big_r - r + 0.5));
    r * rsj.ln()
}

/// Rank every term occurring in the feedback documents by offer weight and
/// keep the top `fb_terms` (ties by term).
pub fn prf_offer_weight_expand(
    index: &InvertedIndex,
    _query: &Query,
    feedback: &FeedbackSet,
    fb_terms: usize,
) -> Result<Vec<ExpansionTerm>> {
    if feedback.is_empty() {
        return Err(Error::Contract("offer-weight expansion needs feedback documents".into()));
    }
    let big_r = feedback.len();
    let n = index.num_docs();
    let mut containing: BTreeMap<String, usize> = BTreeMap::new();
    for (doc, _) in &feedback.docs {
        let distinct: BTreeSet<String> = index.analyze(&doc.text).into_iter().collect();
        for t in distinct {
            *containing.entry(t).or_default() += 1;
        }
    }
    let mut scored: Vec<ExpansionTerm> = containing
        .into_iter()
        .map(|(term, r)| {
            // feedback documents come from the index, so df >= r there; a
            // foreign document still must not make the counts inconsistent
            let df = index.df(&term).max(r);
            let n = n.max(df).max(big_r);
            ExpansionTerm::new(term, offer_weight(r, big_r, df, n))
        })
        .collect();
    scored.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    scored.truncate(fb_terms);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use crate::corpus::Document;

    #[test]
    fn monotone_in_r() {
        // same df, more feedback support => higher weight
        assert!(offer_weight(3, 3, 4, 100) > offer_weight(1, 3, 4, 100));
    }

    #[test]
    fn monotone_in_df() {
        assert!(offer_weight(1, 1, 1, 100) > offer_weight(1, 1, 50, 100));
    }

    // Oracle values from the formula evaluated in Python (math.log), for
    // R = 3, N = 20 and the (r, df) table below.
    #[test]
    fn pinned_fixture() {
        let cases = [
            (3, 3, 16.503_774_631_634_183_f64),
            (3, 10, 6.847_147_157_029_579),
            (2, 2, 8.132_347_370_510_809),
            (1, 5, 0.587_786_664_902_119_1),
            (1, 1, 3.044_522_437_723_423),
        ];
        for (r, df, want) in cases {
            let got = offer_weight(r, 3, df, 20);
            assert!((got - want).abs() < 1e-12, "r={r} df={df}: {got} vs {want}");
        }
    }

    #[test]
    fn expand_orders_terms() {
        // 100 documents; "a" occurs only in d0, "b" in 50 of them.
        let mut docs = vec![Document::new("d0", "a b")];
        for i in 1..100 {
            docs.push(Document::new(format!("d{i}"), if i < 50 { "b z" } else { "z" }));
        }
        let index = InvertedIndex::build(&docs, AnalyzerConfig::plain()).unwrap();
        assert_eq!(index.df("b"), 50);
        let fb = FeedbackSet {
            query: Query::new("q", "a"),
            docs: vec![(docs[0].clone(), 1.0)],
            fb_docs: 10,
        };
        let terms = prf_offer_weight_expand(&index, &fb.query, &fb, 10).unwrap();
        assert_eq!(terms[0].term, "a");
        assert_eq!(terms[1].term, "b");
        assert!(terms[0].weight > terms[1].weight);
    }

    #[test]
    fn empty_feedback_errors() {
        let index = InvertedIndex::build(&[Document::new("d", "x")], AnalyzerConfig::plain()).unwrap();
        let fb = FeedbackSet {
            query: Query::new("q", "x"),
            docs: vec![],
            fb_docs: 10,
        };
        assert!(prf_offer_weight_expand(&index, &fb.query, &fb, 10).is_err());
    }
}
