//! Client side of the expansion-term protocol: input construction,
//! transports and response validation.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::corpus::{Document, Query};
use crate::error::{Error, Result};
use crate::protocol::{self, DocScore, Request, Response, ScoreDoc, TermScore, SEP};

pub const DEFAULT_TOKEN_BUDGET: usize = 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
/// Environment variable consulted when no endpoint is given explicitly.
pub const GENERATOR_URL_ENV: &str = "GQEPRF_GENERATOR_URL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRequest {
    pub input_text: String,
    pub max_terms: usize,
    pub token_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenResponse {
    pub terms: Vec<TermScore>,
}

impl GenResponse {
    /// Check the count bound, term uniqueness and non-empty terms.
    pub fn validate(&self, max_terms: usize, raw: &str) -> Result<()> {
        if self.terms.len() > max_terms {
            return Err(Error::protocol(
                format!("{} terms returned, {max_terms} requested", self.terms.len()),
                raw,
            ));
        }
        let mut seen = HashSet::new();
        for t in &self.terms {
            if t.term.is_empty() {
                return Err(Error::protocol("empty term", raw));
            }
            if !t.score.is_finite() {
                return Err(Error::protocol(format!("non-finite score for {:?}", t.term), raw));
            }
            if !seen.insert(t.term.as_str()) {
                return Err(Error::protocol(format!("duplicate term {:?}", t.term), raw));
            }
        }
        Ok(())
    }
}

/// `query [SEP] document`, with the document cut at whitespace-token
/// granularity so the whole input stays within `budget` whitespace tokens.
/// The query and the separator are never cut. One slot of the budget is kept
/// free for the end-of-sequence marker the model side appends, so a cut
/// document leaves the input one token short of `budget`.
pub fn build_input(query: &Query, document: &Document, budget: usize) -> Result<String> {
    let query_tokens = query.text.split_whitespace().count();
    let fixed = query_tokens + 1;
    if budget < fixed {
        return Err(Error::Contract(format!(
            "token budget {budget} cannot hold the query ({query_tokens} tokens) and separator"
        )));
    }
    let room = budget.saturating_sub(fixed + 1);
    let doc_tokens = document.text.split_whitespace().count();
    let doc_part = if doc_tokens <= room {
        document.text.as_str()
    } else {
        truncate_tokens(&document.text, room)
    };
    Ok(format!("{} {SEP} {}", query.text, doc_part))
}

/// Prefix of `text` ending right after its `n`-th whitespace token.
fn truncate_tokens(text: &str, n: usize) -> &str {
    if n == 0 {
        return "";
    }
    let mut count = 0;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_token {
                count += 1;
                if count == n {
                    return &text[..i];
                }
            }
            in_token = false;
        } else {
            in_token = true;
        }
    }
    text
}

/// Anything that can turn a [`GenRequest`] into expansion terms.
pub trait TermGenerator: Send {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse>;
}

/// Anything that can score documents for a query (used by reranking).
pub trait Scorer: Send {
    /// One score per document, in the order given.
    fn score(&mut self, query: &str, docs: &[Document]) -> Result<Vec<f64>>;
}

/// Moves one request line to the peer and returns one response line.
pub trait Transport: Send {
    fn exchange(&mut self, line: &str, timeout: Duration) -> Result<String>;
}

enum ReadEvent {
    Line(String),
    /// EOF after a partial line.
    Truncated(String),
    Closed,
    Failed(String),
}

/// Line transport over a pair of byte streams, normally a child process's
/// stdout and stdin. A reader thread feeds lines so that reads can time out.
pub struct StdioTransport {
    writer: Box<dyn Write + Send>,
    lines: Receiver<ReadEvent>,
    child: Option<Child>,
    poisoned: bool,
}

impl StdioTransport {
    pub fn from_streams<R, W>(reader: R, writer: W) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut buf = String::new();
                let event = match reader.read_line(&mut buf) {
                    Ok(0) => ReadEvent::Closed,
                    Ok(_) if buf.ends_with('\n') => ReadEvent::Line(buf),
                    Ok(_) => ReadEvent::Truncated(buf),
                    Err(e) => ReadEvent::Failed(e.to_string()),
                };
                let last = !matches!(event, ReadEvent::Line(_));
                if tx.send(event).is_err() || last {
                    break;
                }
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            child: None,
            poisoned: false,
        }
    }

    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::transport(format!("cannot start {program}: {e}"), ""))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut t = Self::from_streams(stdout, stdin);
        t.child = Some(child);
        Ok(t)
    }
}

impl Transport for StdioTransport {
    fn exchange(&mut self, line: &str, timeout: Duration) -> Result<String> {
        if self.poisoned {
            return Err(Error::transport("connection unusable after an earlier failure", ""));
        }
        let sent = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush());
        if let Err(e) = sent {
            self.poisoned = true;
            return Err(Error::transport(format!("write failed: {e}"), ""));
        }
        let event = self.lines.recv_timeout(timeout);
        match event {
            Ok(ReadEvent::Line(l)) => Ok(l.trim_end_matches(['\n', '\r']).to_owned()),
            other => {
                self.poisoned = true;
                Err(match other {
                    Ok(ReadEvent::Truncated(partial)) => {
                        Error::transport("peer closed the stream mid-response", partial)
                    }
                    Ok(ReadEvent::Closed) | Err(RecvTimeoutError::Disconnected) => {
                        Error::transport("peer closed the stream", "")
                    }
                    Ok(ReadEvent::Failed(e)) => Error::transport(format!("read failed: {e}"), ""),
                    Err(RecvTimeoutError::Timeout) => {
                        Error::transport(format!("no response within {timeout:?}"), "")
                    }
                    Ok(ReadEvent::Line(_)) => unreachable!(),
                })
            }
        }
    }
}

impl Drop for StdioTransport {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// POSTs each message to a fixed URL.
pub struct HttpTransport {
    url: String,
    agent: ureq::Agent,
    timeout: Option<Duration>,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            agent: ureq::Agent::new_with_defaults(),
            timeout: None,
        }
    }

    fn agent_for(&mut self, timeout: Duration) -> &ureq::Agent {
        if self.timeout != Some(timeout) {
            self.agent = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .http_status_as_error(false)
                .build()
                .into();
            self.timeout = Some(timeout);
        }
        &self.agent
    }
}

impl Transport for HttpTransport {
    fn exchange(&mut self, line: &str, timeout: Duration) -> Result<String> {
        let url = self.url.clone();
        let agent = self.agent_for(timeout);
        let mut resp = agent
            .post(&url)
            .header("content-type", "application/json")
            .send(line)
            .map_err(|e| Error::transport(format!("POST {url}: {e}"), ""))?;
        let status = resp.status();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::transport(format!("reading body from {url}: {e}"), ""))?;
        if !status.is_success() && status.as_u16() != 400 {
            return Err(Error::transport(format!("POST {url}: HTTP {status}"), body));
        }
        Ok(body.trim_end_matches(['\n', '\r']).to_owned())
    }
}

/// Send one request and await one response.
pub fn request(conn: &mut dyn Transport, req: &Request, timeout: Duration) -> Result<(Response, String)> {
    let raw = conn.exchange(&protocol::encode(req), timeout)?;
    let resp = protocol::decode_response(&raw)?;
    if let Response::Error { message } = resp {
        return Err(Error::Remote(message));
    }
    Ok((resp, raw))
}

/// One `generate` round trip, validated against the response invariants.
pub fn request_terms(
    conn: &mut dyn Transport,
    req: &GenRequest,
    timeout: Duration,
) -> Result<GenResponse> {
    let msg = Request::Generate {
        input: req.input_text.clone(),
        max_terms: req.max_terms,
    };
    match request(conn, &msg, timeout)? {
        (Response::Terms { terms }, raw) => {
            let resp = GenResponse { terms };
            resp.validate(req.max_terms, &raw)?;
            Ok(resp)
        }
        (_, raw) => Err(Error::protocol("expected a `terms` response", raw)),
    }
}

/// One `score` round trip. The reply must score exactly the documents sent.
pub fn request_scores(
    conn: &mut dyn Transport,
    query: &str,
    docs: &[Document],
    timeout: Duration,
) -> Result<Vec<f64>> {
    let msg = Request::Score {
        query: query.to_owned(),
        docs: docs
            .iter()
            .map(|d| ScoreDoc {
                id: d.doc_id.clone(),
                text: d.text.clone(),
            })
            .collect(),
    };
    let (resp, raw) = request(conn, &msg, timeout)?;
    let Response::Scores { scores } = resp else {
        return Err(Error::protocol("expected a `scores` response", raw));
    };
    if scores.len() != docs.len() {
        return Err(Error::protocol(
            format!("{} scores for {} documents", scores.len(), docs.len()),
            raw,
        ));
    }
    let mut by_id = std::collections::HashMap::new();
    for DocScore { id, score } in &scores {
        if !score.is_finite() {
            return Err(Error::protocol(format!("non-finite score for {id:?}"), raw));
        }
        if by_id.insert(id.as_str(), *score).is_some() {
            return Err(Error::protocol(format!("duplicate score for {id:?}"), raw));
        }
    }
    docs.iter()
        .map(|d| {
            by_id
                .get(d.doc_id.as_str())
                .copied()
                .ok_or_else(|| Error::protocol(format!("no score for {:?}", d.doc_id), raw.clone()))
        })
        .collect()
}

/// A protocol connection usable as both generator and scorer.
pub struct ProtocolClient {
    transport: Box<dyn Transport>,
    timeout: Duration,
}

impl ProtocolClient {
    pub fn new(transport: Box<dyn Transport>, timeout: Duration) -> Self {
        Self { transport, timeout }
    }
}

impl TermGenerator for ProtocolClient {
    fn generate(&mut self, req: &GenRequest) -> Result<GenResponse> {
        request_terms(self.transport.as_mut(), req, self.timeout)
    }
}

impl Scorer for ProtocolClient {
    fn score(&mut self, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        request_scores(self.transport.as_mut(), query, docs, self.timeout)
    }
}

/// Where a generator or scorer lives.
///
/// * `mock` runs the deterministic in-process mock.
/// * `stdio:<program> [args...]` spawns a child and speaks over its pipes.
/// * `http://host:port[/path]` POSTs to the URL; with no path the
///   message-specific default (`/generate` or `/score`) is used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Mock,
    Stdio { program: String, args: Vec<String> },
    Http { url: String },
}

impl Endpoint {
    /// Open a protocol connection. `Mock` has none; callers construct the
    /// in-process mock themselves.
    pub fn connect(&self, default_path: &str, timeout: Duration) -> Result<Option<ProtocolClient>> {
        let transport: Box<dyn Transport> = match self {
            Endpoint::Mock => return Ok(None),
            Endpoint::Stdio { program, args } => Box::new(StdioTransport::spawn(program, args)?),
            Endpoint::Http { url } => {
                let has_path = url
                    .split_once("://")
                    .is_some_and(|(_, rest)| rest.trim_end_matches('/').contains('/'));
                let full = if has_path {
                    url.clone()
                } else {
                    format!("{}{default_path}", url.trim_end_matches('/'))
                };
                Box::new(HttpTransport::new(full))
            }
        };
        Ok(Some(ProtocolClient::new(transport, timeout)))
    }
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "mock" {
            return Ok(Endpoint::Mock);
        }
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let mut parts = cmd.split_whitespace().map(str::to_owned);
            let program = parts
                .next()
                .ok_or_else(|| Error::Config("stdio endpoint needs a program".into()))?;
            return Ok(Endpoint::Stdio {
                program,
                args: parts.collect(),
            });
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(Endpoint::Http { url: s.to_owned() });
        }
        Err(Error::Config(format!(
            "unrecognized endpoint {s:?} (expected mock, stdio:<cmd> or http://...)"
        )))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Mock => f.write_str("mock"),
            Endpoint::Stdio { program, args } => {
                write!(f, "stdio:{program}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            Endpoint::Http { url } => f.write_str(url),
        }
    }
}
