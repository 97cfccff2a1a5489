use std::collections::BTreeMap;

use super::{ExpansionTerm, FeedbackSet};
use crate::corpus::{Document, Query};
use crate::error::Result;
use crate::generator_client::{build_input, GenRequest, TermGenerator};

/// Ask the generator for terms once per feedback document (input
/// `query [SEP] document`) and merge the answers.
///
/// Scores of identical terms are summed across documents; the merged list is
/// sorted by descending total (ties by term) and cut to `max_terms`. With no
/// feedback the query is sent once with an empty document.
pub fn generative_expand(
    query: &Query,
    feedback: &FeedbackSet,
    client: &mut dyn TermGenerator,
    max_terms: usize,
    token_budget: usize,
) -> Result<Vec<ExpansionTerm>> {
    let empty = Document::new("", "");
    let docs: Vec<&Document> = if feedback.docs.is_empty() {
        vec![&empty]
    } else {
        feedback.docs.iter().map(|(d, _)| d).collect()
    };

    let mut contributions: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for doc in docs {
        let req = GenRequest {
            input_text: build_input(query, doc, token_budget)?,
            max_terms,
            token_budget,
        };
        let resp = client.generate(&req)?;
        for t in resp.terms {
            contributions.entry(t.term).or_default().push(t.score);
        }
    }

    // Summing each term's scores in sorted order makes the total independent
    // of the order the documents were processed in.
    let mut merged: Vec<ExpansionTerm> = contributions
        .into_iter()
        .map(|(term, mut scores)| {
            scores.sort_by(f64::total_cmp);
            ExpansionTerm::new(term, scores.iter().sum())
        })
        .collect();
    merged.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term)));
    merged.truncate(max_terms);
    Ok(merged)
}
