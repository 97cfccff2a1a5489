mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use gqeprf_core::analysis::{AnalyzerConfig, Stemmer};
use gqeprf_core::corpus::{load_documents, load_qrels, load_queries, TextFormat};
use gqeprf_core::eval::{comparison_table, evaluate_run, grid_search_n, EvalReport, RunFile};
use gqeprf_core::index::InvertedIndex;
use gqeprf_core::mock::MockService;
use gqeprf_core::pipeline::{Method, Pipeline};
use gqeprf_core::retrieval::Bm25Params;
use gqeprf_core::server::{serve_lines, HttpServer};

use config::{EvalArgs, FileConfig, PipelineArgs};

#[derive(Parser)]
#[command(name = "gqeprf", version, about = "BM25 retrieval with RM3, PRF and generative query expansion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index from a document file and print its statistics.
    Index(IndexCmd),
    /// Retrieve for every query and write a TREC run file.
    Run(RunCmd),
    /// Score one or more run files against relevance judgments.
    Eval(EvalCmd),
    /// Run generative expansion for each n and report the best one.
    Sweep(SweepCmd),
    /// Serve the deterministic mock generator and scorer on the wire protocol.
    ServeMock(ServeMockCmd),
}

#[derive(clap::Args)]
struct IndexCmd {
    /// Documents, `id<TAB>text` or JSON lines
    #[arg(long)]
    docs: PathBuf,
    /// Where to write the index
    #[arg(long, short)]
    output: PathBuf,
    /// tsv or jsonl [default: from the file extension]
    #[arg(long)]
    format: Option<TextFormat>,
    /// Disable Porter stemming
    #[arg(long)]
    no_stem: bool,
    /// Keep stopwords
    #[arg(long)]
    no_stopwords: bool,
}

#[derive(clap::Args)]
struct Source {
    /// Prebuilt index
    #[arg(long, conflicts_with = "docs", required_unless_present = "docs")]
    index: Option<PathBuf>,
    /// Build the index in memory from this document file instead
    #[arg(long)]
    docs: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> anyhow::Result<InvertedIndex> {
        if let Some(path) = &self.index {
            return Ok(InvertedIndex::load(path)?);
        }
        let path = self.docs.as_ref().expect("clap requires --index or --docs");
        let docs = load_documents(path, TextFormat::from_path(path))?;
        Ok(InvertedIndex::build(&docs, AnalyzerConfig::default())?)
    }
}

#[derive(clap::Args)]
struct RunCmd {
    #[command(flatten)]
    source: Source,
    /// Queries, `id<TAB>text` or JSON lines
    #[arg(long)]
    queries: PathBuf,
    /// Run file to write
    #[arg(long, short)]
    output: PathBuf,
    /// Settings file (TOML); flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(clap::Args)]
struct EvalCmd {
    /// Run file; repeat to compare several runs
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Row label per run, in order [default: the run tag]
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long)]
    qrels: PathBuf,
    /// Also write the full report(s) as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(clap::Args)]
struct SweepCmd {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// CSV with one row per n
    #[arg(long, short)]
    output: PathBuf,
    /// Values of n, comma separated [default: 1..=10]
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Metric to maximize [default: MAP]
    #[arg(long)]
    objective: Option<String>,
    /// Also write every per-n report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(clap::Args)]
struct ServeMockCmd {
    #[command(flatten)]
    source: Source,
    /// Speak the protocol on stdin/stdout
    #[arg(long, conflicts_with = "listen", required_unless_present = "listen")]
    stdio: bool,
    /// Serve HTTP on this address (port 0 picks a free port; the bound
    /// address is printed on stdout)
    #[arg(long)]
    listen: Option<String>,
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    #[arg(long, default_value_t = 0.4)]
    b: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(c) => cmd_index(c),
        Command::Run(c) => cmd_run(c),
        Command::Eval(c) => cmd_eval(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::ServeMock(c) => cmd_serve_mock(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 when an input file does not exist, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let missing = err.chain().any(|cause| {
        cause
            .downcast_ref::<io::Error>()
            .is_some_and(|e| e.kind() == io::ErrorKind::NotFound)
    });
    if missing {
        2
    } else {
        1
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_index(c: IndexCmd) -> anyhow::Result<()> {
    let format = c.format.unwrap_or_else(|| TextFormat::from_path(&c.docs));
    let docs = load_documents(&c.docs, format)?;
    let mut analyzer = AnalyzerConfig::default();
    if c.no_stem {
        analyzer = analyzer.with_stemmer(Stemmer::None);
    }
    if c.no_stopwords {
        analyzer = analyzer.with_stopwords(Vec::<String>::new());
    }
    let index = InvertedIndex::build(&docs, analyzer)?;
    index.save(&c.output)?;
    println!("N={}", index.num_docs());
    println!("avgdl={:.4}", index.avgdl());
    println!("vocabulary={}", index.vocabulary_size());
    Ok(())
}

fn cmd_run(c: RunCmd) -> anyhow::Result<()> {
    let file = FileConfig::load(c.config.as_deref())?;
    let cfg = c.pipeline.resolve(&file)?;
    let queries = load_queries(&c.queries, TextFormat::from_path(&c.queries))?;
    let index = Arc::new(c.source.load()?);
    let pipeline = Pipeline::new(index, cfg)?;
    let run = pipeline.run(&queries)?;
    run.save(&c.output)?;
    log::info!("wrote {} queries to {}", run.len(), c.output.display());
    Ok(())
}

#[derive(Serialize)]
struct LabeledReport<'a> {
    label: &'a str,
    report: &'a EvalReport,
}

fn cmd_eval(c: EvalCmd) -> anyhow::Result<()> {
    let file = FileConfig::load(c.config.as_deref())?;
    let cfg = c.eval.resolve(&file)?;
    if !c.labels.is_empty() && c.labels.len() != c.runs.len() {
        bail!("{} labels given for {} runs", c.labels.len(), c.runs.len());
    }
    let qrels = load_qrels(&c.qrels)?;
    let mut reports = Vec::new();
    for (i, path) in c.runs.iter().enumerate() {
        let run = RunFile::load(path)?;
        let report = evaluate_run(&run, &qrels, &cfg)?;
        for w in &report.warnings {
            log::warn!("{}: {w}", path.display());
        }
        let label = c.labels.get(i).cloned().unwrap_or_else(|| run.tag.clone());
        reports.push((label, report));
    }

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    if let [(_, report)] = reports.as_slice() {
        write!(out, "{}", report.table())?;
    } else {
        let rows: Vec<(String, &EvalReport)> = reports.iter().map(|(l, r)| (l.clone(), r)).collect();
        write!(out, "{}", comparison_table(&rows))?;
    }
    out.flush()?;

    if let Some(path) = &c.json {
        let json = if let [(_, report)] = reports.as_slice() {
            report.to_json()
        } else {
            let labeled: Vec<LabeledReport> = reports
                .iter()
                .map(|(label, report)| LabeledReport { label, report })
                .collect();
            serde_json::to_string_pretty(&labeled)?
        };
        write_file(path, &(json + "\n"))?;
    }
    Ok(())
}

fn cmd_sweep(c: SweepCmd) -> anyhow::Result<()> {
    let file = FileConfig::load(c.config.as_deref())?;
    let mut cfg = c.pipeline.resolve(&file)?;
    if cfg.method != Method::Gqe {
        if c.pipeline.method.is_some() || file.method.is_some() {
            log::warn!("sweep always uses generative expansion; ignoring method {}", cfg.method);
        }
        cfg.method = Method::Gqe;
    }
    let eval_cfg = c.eval.resolve(&file)?;
    let n_values = config::n_values(c.n_values.as_deref(), &file);
    let objective = c
        .objective
        .clone()
        .or_else(|| file.objective.clone())
        .unwrap_or_else(|| "MAP".into());
    let queries = load_queries(&c.queries, TextFormat::from_path(&c.queries))?;
    let qrels = load_qrels(&c.qrels)?;
    let index = Arc::new(c.source.load()?);
    let pipeline = Pipeline::new(index, cfg)?;

    let result = grid_search_n(&pipeline, &n_values, &queries, &qrels, &eval_cfg, &objective)?;
    write_file(&c.output, &result.to_csv())?;
    if let Some(path) = &c.json {
        write_file(path, &(serde_json::to_string_pretty(&result)? + "\n"))?;
    }
    let best = result
        .objective_values()
        .into_iter()
        .find(|(n, _)| *n == result.best_n)
        .map_or(0.0, |(_, v)| v);
    println!("best_n={} {}={:.4}", result.best_n, objective, best);
    Ok(())
}

fn cmd_serve_mock(c: ServeMockCmd) -> anyhow::Result<()> {
    let index = Arc::new(c.source.load()?);
    let service = MockService::new(index, Bm25Params::new(c.k1, c.b)?);
    if c.stdio {
        let stdin = io::stdin();
        let stdout = io::stdout();
        serve_lines(&service, stdin.lock(), stdout.lock())?;
        return Ok(());
    }
    let addr = c.listen.as_deref().expect("clap requires --stdio or --listen");
    let server = HttpServer::bind(addr)?;
    match server.local_addr() {
        Some(a) => println!("listening on http://{a}"),
        None => println!("listening on {addr}"),
    }
    io::stdout().flush()?;
    server.run(&service);
    Ok(())
}
