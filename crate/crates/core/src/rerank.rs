//! Second-stage reordering of a candidate list.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::generator_client::Scorer;
use crate::index::InvertedIndex;
use crate::retrieval::{rank_order, score_text, Bm25Params, ScoredDoc, WeightedQuery};

pub const DEFAULT_RERANK_DEPTH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// Scores come from a protocol connection.
    External,
    /// Recompute BM25 over the stored document text.
    Bm25Rescore,
    Identity,
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "external" => Ok(Self::External),
            "bm25_rescore" | "bm25-rescore" | "bm25" => Ok(Self::Bm25Rescore),
            "identity" => Ok(Self::Identity),
            other => Err(Error::Config(format!(
                "unknown reranker {other:?} (expected external, bm25_rescore or identity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerankConfig {
    pub depth: usize,
    pub scorer: ScorerKind,
    /// Used by `Bm25Rescore`.
    pub params: Bm25Params,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            depth: DEFAULT_RERANK_DEPTH,
            scorer: ScorerKind::Identity,
            params: Bm25Params::default(),
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Contract("rerank depth must be >= 1".into()));
        }
        self.params.validate()
    }
}

/// Rescore the top `depth` candidates and sort them by the new score
/// (descending, ties by doc id). Candidates below the depth keep their
/// relative order and follow the reranked block.
///
/// Tail scores are shifted down by a constant where needed so that scores
/// stay non-increasing down the list; tools that re-sort run files by score
/// then see the same order.
pub fn rerank(
    index: &InvertedIndex,
    query_text: &str,
    candidates: &[ScoredDoc],
    config: &RerankConfig,
    scorer: Option<&mut dyn Scorer>,
) -> Result<Vec<ScoredDoc>> {
    config.validate()?;
    if config.scorer == ScorerKind::Identity || candidates.is_empty() {
        return Ok(candidates.to_vec());
    }
    let cut = config.depth.min(candidates.len());
    let (head, tail) = candidates.split_at(cut);

    let docs: Vec<Document> = head
        .iter()
        .map(|c| {
            let ord = index
                .ordinal(&c.doc_id)
                .ok_or_else(|| Error::Contract(format!("candidate {:?} is not in the index", c.doc_id)))?;
            Ok(index.document(ord))
        })
        .collect::<Result<_>>()?;

    let scores = match config.scorer {
        ScorerKind::External => {
            let scorer = scorer.ok_or_else(|| Error::Config("external reranker selected but no scorer connected".into()))?;
            scorer.score(query_text, &docs)?
        }
        ScorerKind::Bm25Rescore => {
            let q = WeightedQuery::parse(index, query_text);
            docs.iter()
                .map(|d| score_text(index, &q, &index.analyze(&d.text), config.params))
                .collect()
        }
        ScorerKind::Identity => unreachable!(),
    };
    if scores.len() != head.len() {
        return Err(Error::Contract(format!(
            "scorer returned {} scores for {} documents",
            scores.len(),
            head.len()
        )));
    }

    let mut reranked: Vec<ScoredDoc> = head
        .iter()
        .zip(scores)
        .map(|(c, score)| ScoredDoc {
            doc_id: c.doc_id.clone(),
            score,
            rank: 0,
        })
        .collect();
    reranked.sort_by(|a, b| rank_order(a.score, &a.doc_id, b.score, &b.doc_id));

    if let (Some(last), Some(first_tail)) = (reranked.last(), tail.first()) {
        let shift = if first_tail.score >= last.score {
            last.score - first_tail.score - 1.0
        } else {
            0.0
        };
        let floor = last.score;
        reranked.extend(tail.iter().map(|c| ScoredDoc {
            doc_id: c.doc_id.clone(),
            score: (c.score + shift).min(floor),
            rank: 0,
        }));
    }
    for (i, d) in reranked.iter_mut().enumerate() {
        d.rank = i + 1;
    }
    Ok(reranked)
}
