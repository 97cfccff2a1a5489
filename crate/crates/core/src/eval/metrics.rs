use std::collections::BTreeMap;

use crate::corpus::RelevanceThreshold;

/// Judgments for one query: doc id to grade. Unjudged documents are
/// non-relevant with grade 0.
pub type Judged = BTreeMap<String, i32>;

fn is_rel(judged: &Judged, doc: &str, threshold: RelevanceThreshold) -> bool {
    judged.get(doc).is_some_and(|&g| threshold.is_relevant(g))
}

/// Relevant documents in the top `k`, divided by `k` (not by the run
/// length, so short runs are penalized).
pub fn precision_at_k<S: AsRef<str>>(ranked: &[S], judged: &Judged, k: usize, threshold: RelevanceThreshold) -> f64 {
    assert!(k >= 1, "precision cutoff must be >= 1");
    let hits = ranked
        .iter()
        .take(k)
        .filter(|d| is_rel(judged, d.as_ref(), threshold))
        .count();
    hits as f64 / k as f64
}

/// Sum of precision at each relevant retrieved rank over the number of
/// relevant documents in the judgments; 0 when there are none.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], judged: &Judged, threshold: RelevanceThreshold) -> f64 {
    let total = judged.values().filter(|&&g| threshold.is_relevant(g)).count();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranked.iter().enumerate() {
        if is_rel(judged, d.as_ref(), threshold) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

fn gain(grade: i32) -> f64 {
    // negative grades (used by some collections for spam) carry no gain
    if grade <= 0 {
        0.0
    } else {
        2f64.powi(grade) - 1.0
    }
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// nDCG at `cutoff` with gain `2^g - 1` and discount `log2(r + 1)`;
/// 0 when the ideal DCG is 0.
pub fn ndcg<S: AsRef<str>>(ranked: &[S], judged: &Judged, cutoff: usize) -> f64 {
    assert!(cutoff >= 1, "nDCG cutoff must be >= 1");
    let dcg: f64 = ranked
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, d)| gain(judged.get(d.as_ref()).copied().unwrap_or(0)) / discount(i + 1))
        .sum();
    let mut ideal: Vec<i32> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i + 1))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}
