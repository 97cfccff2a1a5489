//! Settings file and flag merging. Flags win over the file, the file wins
//! over built-in defaults.
//!
//! The file is flat TOML; every key is optional:
//!
//! ```toml
//! k1 = 0.9
//! b = 0.4
//! depth = 1000
//! method = "gqe"            # none | rm3 | prf | gqe
//! fb_docs = 10
//! fb_terms = 10
//! orig_weight = 0.5
//! n = 7
//! token_budget = 1024
//! gen_max_terms = 20
//! generator = "mock"        # mock | stdio:<cmd args> | http://host:port
//! scorer = "mock"
//! rerank = "none"           # none | identity | bm25_rescore | external
//! rerank_depth = 50
//! workers = 4
//! timeout_secs = 30
//! threshold = 1
//! cutoffs = [5, 10]
//! ndcg_cutoff = 20
//! objective = "MAP"
//! n_values = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! ```

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::Args;
use serde::Deserialize;

use gqeprf_core::corpus::RelevanceThreshold;
use gqeprf_core::eval::{EvalConfig, DEFAULT_NDCG_CUTOFF, DEFAULT_N_VALUES};
use gqeprf_core::generator_client::{Endpoint, DEFAULT_TIMEOUT, GENERATOR_URL_ENV};
use gqeprf_core::pipeline::{ExpansionParams, Method, PipelineConfig};
use gqeprf_core::rerank::{RerankConfig, ScorerKind, DEFAULT_RERANK_DEPTH};
use gqeprf_core::retrieval::Bm25Params;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub depth: Option<usize>,
    pub method: Option<String>,
    pub fb_docs: Option<usize>,
    pub fb_terms: Option<usize>,
    pub orig_weight: Option<f64>,
    pub n: Option<usize>,
    pub token_budget: Option<usize>,
    pub gen_max_terms: Option<usize>,
    pub generator: Option<String>,
    pub scorer: Option<String>,
    pub rerank: Option<String>,
    pub rerank_depth: Option<usize>,
    pub workers: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub threshold: Option<i32>,
    pub cutoffs: Option<Vec<usize>>,
    pub ndcg_cutoff: Option<usize>,
    pub objective: Option<String>,
    pub n_values: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
        toml::from_str(&text).with_context(|| format!("{}: invalid config", path.display()))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// BM25 term-frequency saturation [default: 0.9]
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 length normalization [default: 0.4]
    #[arg(long)]
    pub b: Option<f64>,
    /// Documents retrieved per query [default: 1000]
    #[arg(long)]
    pub depth: Option<usize>,
    /// none, rm3, prf or gqe [default: none]
    #[arg(long)]
    pub method: Option<String>,
    /// Feedback documents [default: 10]
    #[arg(long)]
    pub fb_docs: Option<usize>,
    /// Feedback terms for rm3 and prf [default: 10]
    #[arg(long)]
    pub fb_terms: Option<usize>,
    /// RM3 weight of the original query [default: 0.5]
    #[arg(long)]
    pub orig_weight: Option<f64>,
    /// Generated terms appended to the query [default: 7]
    #[arg(long)]
    pub n: Option<usize>,
    /// Whitespace-token budget of each generator input [default: 1024]
    #[arg(long)]
    pub token_budget: Option<usize>,
    /// Candidate terms kept from the generator per query [default: 20]
    #[arg(long)]
    pub gen_max_terms: Option<usize>,
    /// mock, stdio:<cmd args> or http://host:port [default: $GQEPRF_GENERATOR_URL, else mock]
    #[arg(long)]
    pub generator: Option<String>,
    /// Endpoint of the external reranker [default: mock]
    #[arg(long)]
    pub scorer: Option<String>,
    /// none, identity, bm25_rescore or external [default: none]
    #[arg(long)]
    pub rerank: Option<String>,
    /// Candidates passed to the reranker [default: 50]
    #[arg(long)]
    pub rerank_depth: Option<usize>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-request timeout for external services [default: 30]
    #[arg(long)]
    pub timeout_secs: Option<f64>,
}

fn endpoint(s: &str) -> anyhow::Result<Endpoint> {
    Ok(s.parse()?)
}

impl PipelineArgs {
    pub fn resolve(&self, file: &FileConfig) -> anyhow::Result<PipelineConfig> {
        let d = PipelineConfig::default();
        let de = ExpansionParams::default();
        let params = Bm25Params::new(
            self.k1.or(file.k1).unwrap_or(d.params.k1),
            self.b.or(file.b).unwrap_or(d.params.b),
        )?;
        let method: Method = match self.method.as_deref().or(file.method.as_deref()) {
            Some(m) => m.parse()?,
            None => Method::None,
        };
        let generator = match self.generator.clone().or_else(|| file.generator.clone()) {
            Some(s) => endpoint(&s)?,
            None => match std::env::var(GENERATOR_URL_ENV) {
                Ok(s) if !s.trim().is_empty() => endpoint(&s)
                    .with_context(|| format!("${GENERATOR_URL_ENV}"))?,
                _ => Endpoint::Mock,
            },
        };
        let scorer = match self.scorer.as_deref().or(file.scorer.as_deref()) {
            Some(s) => endpoint(s)?,
            None => Endpoint::Mock,
        };
        let rerank = match self.rerank.as_deref().or(file.rerank.as_deref()) {
            None | Some("none") => None,
            Some(kind) => Some(RerankConfig {
                depth: self.rerank_depth.or(file.rerank_depth).unwrap_or(DEFAULT_RERANK_DEPTH),
                scorer: kind.parse::<ScorerKind>()?,
                params,
            }),
        };
        let timeout = self.timeout_secs.or(file.timeout_secs).unwrap_or(DEFAULT_TIMEOUT.as_secs_f64());
        if !(timeout > 0.0 && timeout.is_finite()) {
            bail!("timeout_secs must be positive, got {timeout}");
        }
        let workers = self
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
        if workers == 0 {
            bail!("workers must be >= 1");
        }
        let cfg = PipelineConfig {
            params,
            depth: self.depth.or(file.depth).unwrap_or(d.depth),
            method,
            expansion: ExpansionParams {
                fb_docs: self.fb_docs.or(file.fb_docs).unwrap_or(de.fb_docs),
                fb_terms: self.fb_terms.or(file.fb_terms).unwrap_or(de.fb_terms),
                orig_weight: self.orig_weight.or(file.orig_weight).unwrap_or(de.orig_weight),
                n: self.n.or(file.n).unwrap_or(de.n),
                token_budget: self.token_budget.or(file.token_budget).unwrap_or(de.token_budget),
                gen_max_terms: self.gen_max_terms.or(file.gen_max_terms).unwrap_or(de.gen_max_terms),
            },
            rerank,
            generator,
            scorer,
            timeout: Duration::from_secs_f64(timeout),
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalArgs {
    /// Minimum grade counted as relevant [default: 1; use 3 for ANTIQUE]
    #[arg(long)]
    pub threshold: Option<i32>,
    /// Precision cutoffs, comma separated [default: 5,10]
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<usize>>,
    /// nDCG cutoff [default: 20]
    #[arg(long)]
    pub ndcg_cutoff: Option<usize>,
}

impl EvalArgs {
    pub fn resolve(&self, file: &FileConfig) -> anyhow::Result<EvalConfig> {
        let cfg = EvalConfig {
            threshold: RelevanceThreshold(self.threshold.or(file.threshold).unwrap_or(RelevanceThreshold::default().0)),
            precision_cutoffs: self
                .cutoffs
                .clone()
                .or_else(|| file.cutoffs.clone())
                .unwrap_or_else(|| vec![5, 10]),
            ndcg_cutoff: self.ndcg_cutoff.or(file.ndcg_cutoff).unwrap_or(DEFAULT_NDCG_CUTOFF),
            n: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn n_values(flag: Option<&[usize]>, file: &FileConfig) -> Vec<usize> {
    flag.map(<[usize]>::to_vec)
        .or_else(|| file.n_values.clone())
        .unwrap_or_else(|| DEFAULT_N_VALUES.to_vec())
}
