//! Retrieval metrics (P@k, MAP, nDCG) over TREC run files, and the sweep
//! over the number of appended expansion terms.

mod metrics;
mod run;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use metrics::{average_precision, ndcg, precision_at_k, Judged};
pub use run::RunFile;
pub use sweep::{grid_search_n, SweepResult, SweepRow, DEFAULT_N_VALUES};

use crate::corpus::{Qrels, RelevanceThreshold};
use crate::error::{Error, Result};

pub const DEFAULT_NDCG_CUTOFF: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub threshold: RelevanceThreshold,
    pub precision_cutoffs: Vec<usize>,
    pub ndcg_cutoff: usize,
    /// Number of expansion terms behind the run, echoed into the report.
    pub n: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            threshold: RelevanceThreshold::default(),
            precision_cutoffs: vec![5, 10],
            ndcg_cutoff: DEFAULT_NDCG_CUTOFF,
            n: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision_cutoffs.contains(&0) {
            return Err(Error::Contract("precision cutoffs must be >= 1".into()));
        }
        if self.ndcg_cutoff == 0 {
            return Err(Error::Contract("nDCG cutoff must be >= 1".into()));
        }
        Ok(())
    }

    /// Metric names in report order.
    pub fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.precision_cutoffs.iter().map(|k| format!("P@{k}")).collect();
        names.push("MAP".into());
        names.push(format!("nDCG@{}", self.ndcg_cutoff));
        names
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub query_id: String,
    /// Parallel to [`EvalReport::metrics`].
    pub values: Vec<f64>,
    /// False when the run has no results for this query; its values are 0.
    pub in_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub metrics: Vec<String>,
    /// Macro-averages, parallel to `metrics`.
    pub mean: Vec<f64>,
    pub per_query: Vec<QueryEval>,
    pub warnings: Vec<String>,
}

/// Evaluate every query that has judgments. Judged queries missing from the
/// run score 0; run queries without judgments are skipped with a warning.
pub fn evaluate_run(run: &RunFile, qrels: &Qrels, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    let metrics = config.metric_names();
    let empty = Judged::new();
    let mut per_query = Vec::new();
    let mut warnings = Vec::new();

    for qid in qrels.query_ids() {
        let judged = qrels.for_query(qid).unwrap_or(&empty);
        let ranked: Vec<&str> = run
            .get(qid)
            .map(|docs| docs.iter().map(|d| d.doc_id.as_str()).collect())
            .unwrap_or_default();
        let in_run = run.get(qid).is_some();
        if !in_run {
            warnings.push(format!("query {qid} has judgments but no results"));
        }
        let mut values: Vec<f64> = config
            .precision_cutoffs
            .iter()
            .map(|&k| precision_at_k(&ranked, judged, k, config.threshold))
            .collect();
        values.push(average_precision(&ranked, judged, config.threshold));
        values.push(ndcg(&ranked, judged, config.ndcg_cutoff));
        per_query.push(QueryEval {
            query_id: qid.to_owned(),
            values,
            in_run,
        });
    }

    let judged_ids: BTreeSet<&str> = qrels.query_ids().collect();
    for (qid, _) in &run.queries {
        if !judged_ids.contains(qid.as_str()) {
            warnings.push(format!("query {qid} is in the run but has no judgments; not evaluated"));
        }
    }

    let mean = (0..metrics.len())
        .map(|m| {
            if per_query.is_empty() {
                0.0
            } else {
                per_query.iter().map(|q| q.values[m]).sum::<f64>() / per_query.len() as f64
            }
        })
        .collect();

    Ok(EvalReport {
        config: config.clone(),
        metrics,
        mean,
        per_query,
        warnings,
    })
}

impl EvalReport {
    pub fn mean_of(&self, metric: &str) -> Option<f64> {
        self.metrics.iter().position(|m| m == metric).map(|i| self.mean[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-query rows followed by an `all` row, trec_eval style.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, Vec<String>)> = self
            .per_query
            .iter()
            .map(|q| (q.query_id.clone(), q.values.iter().map(|v| format!("{v:.4}")).collect()))
            .collect();
        rows.push(("all".into(), self.mean.iter().map(|v| format!("{v:.4}")).collect()));
        aligned("query", &self.metrics, &rows)
    }
}

/// One row per run, for comparing methods side by side.
pub fn comparison_table(reports: &[(String, &EvalReport)]) -> String {
    let Some((_, first)) = reports.first() else {
        return String::new();
    };
    let rows: Vec<(String, Vec<String>)> = reports
        .iter()
        .map(|(name, r)| {
            let cells = first
                .metrics
                .iter()
                .map(|m| r.mean_of(m).map_or_else(|| "-".into(), |v| format!("{v:.4}")))
                .collect();
            (name.clone(), cells)
        })
        .collect();
    aligned("run", &first.metrics, &rows)
}

fn aligned(first_header: &str, headers: &[String], rows: &[(String, Vec<String>)]) -> String {
    let mut widths: Vec<usize> = std::iter::once(first_header.len())
        .chain(headers.iter().map(String::len))
        .collect();
    for (label, cells) in rows {
        widths[0] = widths[0].max(label.len());
        for (i, c) in cells.iter().enumerate() {
            widths[i + 1] = widths[i + 1].max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |label: &str, cells: &[String]| {
        let _ = write!(out, "{label:<w$}", w = widths[0]);
        for (i, c) in cells.iter().enumerate() {
            let _ = write!(out, "  {c:>w$}", w = widths[i + 1]);
        }
        out.push('\n');
    };
    line(first_header, headers);
    for (label, cells) in rows {
        line(label, cells);
    }
    out
}

/// Per-metric means keyed by name; handy for assertions and CSV output.
pub fn means(report: &EvalReport) -> BTreeMap<&str, f64> {
    report
        .metrics
        .iter()
        .map(String::as_str)
        .zip(report.mean.iter().copied())
        .collect()
}
