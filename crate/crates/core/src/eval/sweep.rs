use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{evaluate_run, EvalConfig, EvalReport};
use crate::corpus::{Qrels, Query};
use crate::error::{Error, Result};
use crate::pipeline::{Method, Pipeline};

pub const DEFAULT_N_VALUES: [usize; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub objective: String,
    pub best_n: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `n` followed by every metric mean, one row per n.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n");
        if let Some(first) = self.rows.first() {
            for m in &first.report.metrics {
                out.push(',');
                out.push_str(m);
            }
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.n);
            for v in &row.report.mean {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn objective_values(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .map(|r| (r.n, r.report.mean_of(&self.objective).unwrap_or(0.0)))
            .collect()
    }
}

/// Run the generative pipeline once per `n` and pick the `n` with the best
/// mean `objective` (ties go to the smaller n).
///
/// Generation candidates are computed once and reused for every n, so the
/// generator is queried the same number of times as for a single run.
pub fn grid_search_n(
    pipeline: &Pipeline,
    n_values: &[usize],
    queries: &[Query],
    qrels: &Qrels,
    eval: &EvalConfig,
    objective: &str,
) -> Result<SweepResult> {
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let Some(&first_n) = ns.first() else {
        return Err(Error::Contract("sweep needs at least one value of n".into()));
    };
    if pipeline.config().method != Method::Gqe {
        return Err(Error::Config("the n sweep applies to generative expansion (method gqe)".into()));
    }
    if !eval.metric_names().iter().any(|m| m == objective) {
        return Err(Error::Config(format!(
            "objective {objective:?} is not one of {:?}",
            eval.metric_names()
        )));
    }

    let wrap = |n: usize| move |e: Error| Error::Sweep { n, source: Box::new(e) };
    let cands = pipeline.generation_candidates(queries).map_err(wrap(first_n))?;

    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let run = pipeline.run_with_n(queries, n, Some(&cands)).map_err(wrap(n))?;
        let cfg = EvalConfig {
            n: Some(n),
            ..eval.clone()
        };
        let report = evaluate_run(&run, qrels, &cfg).map_err(wrap(n))?;
        rows.push(SweepRow { n, report });
    }

    let mut best = (first_n, f64::NEG_INFINITY);
    for row in &rows {
        let v = row.report.mean_of(objective).unwrap_or(0.0);
        if v > best.1 {
            best = (row.n, v);
        }
    }
    Ok(SweepResult {
        objective: objective.to_owned(),
        best_n: best.0,
        rows,
    })
}
