//! Batch retrieval: expansion, BM25 retrieval and optional reranking for a
//! query set, spread over worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::eval::RunFile;
use crate::expansion::{
    generative_expand, get_feedback, prf_offer_weight_expand, reformulate, rm3_expand, ExpansionTerm,
    DEFAULT_FB_DOCS, DEFAULT_FB_TERMS, DEFAULT_N, DEFAULT_ORIG_WEIGHT,
};
use crate::generator_client::{Endpoint, Scorer, TermGenerator, DEFAULT_TIMEOUT, DEFAULT_TOKEN_BUDGET};
use crate::index::InvertedIndex;
use crate::mock::{MockGenerator, MockScorer};
use crate::rerank::{rerank, RerankConfig, ScorerKind};
use crate::retrieval::{search, Bm25Params, ScoredDoc, WeightedQuery};

pub const DEFAULT_DEPTH: usize = 1000;
/// Candidates requested from the generator per query, before `n` is applied.
pub const DEFAULT_GEN_MAX_TERMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Rm3,
    Prf,
    Gqe,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "bm25" => Ok(Method::None),
            "rm3" => Ok(Method::Rm3),
            "prf" => Ok(Method::Prf),
            "gqe" | "gqe-prf" => Ok(Method::Gqe),
            other => Err(Error::Config(format!(
                "unknown expansion method {other:?} (expected none, rm3, prf or gqe)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::None => "none",
            Method::Rm3 => "rm3",
            Method::Prf => "prf",
            Method::Gqe => "gqe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub orig_weight: f64,
    pub n: usize,
    pub token_budget: usize,
    pub gen_max_terms: usize,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        Self {
            fb_docs: DEFAULT_FB_DOCS,
            fb_terms: DEFAULT_FB_TERMS,
            orig_weight: DEFAULT_ORIG_WEIGHT,
            n: DEFAULT_N,
            token_budget: DEFAULT_TOKEN_BUDGET,
            gen_max_terms: DEFAULT_GEN_MAX_TERMS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub params: Bm25Params,
    pub depth: usize,
    pub method: Method,
    pub expansion: ExpansionParams,
    pub rerank: Option<RerankConfig>,
    pub generator: Endpoint,
    pub scorer: Endpoint,
    pub timeout: Duration,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            params: Bm25Params::default(),
            depth: DEFAULT_DEPTH,
            method: Method::None,
            expansion: ExpansionParams::default(),
            rerank: None,
            generator: Endpoint::Mock,
            scorer: Endpoint::Mock,
            timeout: DEFAULT_TIMEOUT,
            workers: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let e = &self.expansion;
        if self.depth == 0 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        if e.fb_docs == 0 || e.fb_terms == 0 {
            return Err(Error::Config("fb_docs and fb_terms must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&e.orig_weight) {
            return Err(Error::Config(format!("orig_weight must be in [0, 1], got {}", e.orig_weight)));
        }
        if e.token_budget < 2 {
            return Err(Error::Config("token_budget must be >= 2".into()));
        }
        if e.gen_max_terms == 0 {
            return Err(Error::Config("gen_max_terms must be >= 1".into()));
        }
        if let Some(r) = &self.rerank {
            r.validate()?;
        }
        Ok(())
    }

    /// Run tag: the method, plus `n` for generative expansion and a marker
    /// when reranking is on.
    pub fn run_tag(&self) -> String {
        let mut tag = match self.method {
            Method::Gqe => format!("gqe-prf.n{}", self.expansion.n),
            m => m.to_string(),
        };
        if let Some(r) = &self.rerank {
            if r.scorer != ScorerKind::Identity {
                tag.push_str(&format!(".rerank{}", r.depth));
            }
        }
        tag
    }
}

/// Per-thread connections. Each worker owns its own so that requests on a
/// connection strictly alternate with responses.
struct Worker {
    generator: Option<Box<dyn TermGenerator>>,
    scorer: Option<Box<dyn Scorer>>,
}

pub struct Pipeline {
    index: Arc<InvertedIndex>,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(index: Arc<InvertedIndex>, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { index, config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    fn worker(&self) -> Result<Worker> {
        let generator: Option<Box<dyn TermGenerator>> = if self.config.method == Method::Gqe {
            Some(match self.config.generator.connect("/generate", self.config.timeout)? {
                Some(c) => Box::new(c),
                None => Box::new(MockGenerator::new(self.index.clone())),
            })
        } else {
            None
        };
        let scorer: Option<Box<dyn Scorer>> = match &self.config.rerank {
            Some(r) if r.scorer == ScorerKind::External => {
                Some(match self.config.scorer.connect("/score", self.config.timeout)? {
                    Some(c) => Box::new(c),
                    None => Box::new(MockScorer::new(self.index.clone(), self.config.params)),
                })
            }
            _ => None,
        };
        Ok(Worker { generator, scorer })
    }

    /// Generation candidates for a query: one generator call per feedback
    /// document, merged, capped at `gen_max_terms`.
    fn candidates(&self, w: &mut Worker, query: &Query) -> Result<Vec<ExpansionTerm>> {
        let e = &self.config.expansion;
        let fb = get_feedback(&self.index, query, e.fb_docs, self.config.params)?;
        let generator = w
            .generator
            .as_deref_mut()
            .ok_or_else(|| Error::Config("generative expansion needs a generator".into()))?;
        generative_expand(query, &fb, generator, e.gen_max_terms, e.token_budget)
    }

    /// Retrieval query for `query` under the configured method. `cached`
    /// supplies precomputed generation candidates.
    fn retrieval_query(
        &self,
        w: &mut Worker,
        query: &Query,
        n: usize,
        cached: Option<&[ExpansionTerm]>,
    ) -> Result<WeightedQuery> {
        let e = &self.config.expansion;
        let p = self.config.params;
        let index = &*self.index;
        Ok(match self.config.method {
            Method::None => WeightedQuery::parse(index, &query.text),
            Method::Rm3 => {
                let fb = get_feedback(index, query, e.fb_docs, p)?;
                rm3_expand(index, query, &fb, e.fb_terms, e.orig_weight)?
            }
            Method::Prf => {
                let mut wq = WeightedQuery::parse(index, &query.text);
                let fb = get_feedback(index, query, e.fb_docs, p)?;
                if fb.is_empty() {
                    return Ok(wq);
                }
                let extra = prf_offer_weight_expand(index, query, &fb, e.fb_terms + wq.terms.len())?;
                let new_terms: Vec<(String, f64)> = extra
                    .into_iter()
                    .filter(|t| wq.weight(&t.term) == 0.0)
                    .take(e.fb_terms)
                    .map(|t| (t.term, 1.0))
                    .collect();
                wq.terms.extend(new_terms);
                wq
            }
            Method::Gqe => {
                let owned;
                let cands = match cached {
                    Some(c) => c,
                    None => {
                        owned = self.candidates(w, query)?;
                        &owned
                    }
                };
                let expanded = reformulate(index.analyzer(), query, cands, n);
                WeightedQuery::parse(index, &expanded.text)
            }
        })
    }

    fn process(&self, w: &mut Worker, query: &Query, n: usize, cached: Option<&[ExpansionTerm]>) -> Result<Vec<ScoredDoc>> {
        let wq = self.retrieval_query(w, query, n, cached)?;
        let hits = search(&self.index, &wq, self.config.depth, self.config.params);
        match &self.config.rerank {
            Some(r) => rerank(&self.index, &query.text, &hits, r, w.scorer.as_deref_mut().map(|s| s as &mut dyn Scorer)),
            None => Ok(hits),
        }
    }

    /// Run every query; results keep the input query order whatever the
    /// number of workers.
    pub fn run(&self, queries: &[Query]) -> Result<RunFile> {
        self.run_with_n(queries, self.config.expansion.n, None)
    }

    pub(crate) fn run_with_n(
        &self,
        queries: &[Query],
        n: usize,
        cached: Option<&[Vec<ExpansionTerm>]>,
    ) -> Result<RunFile> {
        let results = self.parallel(queries, |p, w, i, q| {
            p.process(w, q, n, cached.map(|c| c[i].as_slice()))
        })?;
        let mut config = self.config.clone();
        config.expansion.n = n;
        let mut run = RunFile::new(config.run_tag());
        for (q, docs) in queries.iter().zip(results) {
            run.push(q.query_id.clone(), docs);
        }
        Ok(run)
    }

    /// Generation candidates for every query, for reuse across values of n.
    pub fn generation_candidates(&self, queries: &[Query]) -> Result<Vec<Vec<ExpansionTerm>>> {
        if self.config.method != Method::Gqe {
            return Err(Error::Config("generation candidates need method gqe".into()));
        }
        self.parallel(queries, |p, w, _, q| p.candidates(w, q))
    }

    /// Apply `f` to every query across `workers` threads and collect the
    /// results in query order. The first failure (lowest query position
    /// among those attempted) is returned, tagged with its query id.
    fn parallel<T, F>(&self, queries: &[Query], f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Self, &mut Worker, usize, &Query) -> Result<T> + Sync,
    {
        let workers = self.config.workers.max(1).min(queries.len().max(1));
        let next = AtomicUsize::new(0);
        let failed = AtomicBool::new(false);
        let slots: Vec<Mutex<Option<Result<T>>>> = queries.iter().map(|_| Mutex::new(None)).collect();
        let setup_error: Mutex<Option<Error>> = Mutex::new(None);

        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| {
                    let mut w = match self.worker() {
                        Ok(w) => w,
                        Err(e) => {
                            failed.store(true, Ordering::SeqCst);
                            setup_error.lock().unwrap().get_or_insert(e);
                            return;
                        }
                    };
                    loop {
                        if failed.load(Ordering::SeqCst) {
                            break;
                        }
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(q) = queries.get(i) else { break };
                        let r = f(self, &mut w, i, q).map_err(|e| Error::Query {
                            query_id: q.query_id.clone(),
                            source: Box::new(e),
                        });
                        if r.is_err() {
                            failed.store(true, Ordering::SeqCst);
                        }
                        *slots[i].lock().unwrap() = Some(r);
                    }
                });
            }
        });

        if let Some(e) = setup_error.into_inner().unwrap() {
            return Err(e);
        }
        let mut out = Vec::with_capacity(queries.len());
        let mut first_err = None;
        for slot in slots {
            match slot.into_inner().unwrap() {
                Some(Ok(v)) => out.push(v),
                Some(Err(e)) => {
                    first_err.get_or_insert(e);
                }
                None => {}
            }
        }
        match first_err {
            Some(e) => Err(e),
            None if out.len() == queries.len() => Ok(out),
            None => Err(Error::Config("worker pool stopped early".into())),
        }
    }
}
