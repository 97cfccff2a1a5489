//! Documents, queries and relevance judgments, plus their file formats.
//!
//! Documents and queries are stored one per line as `id<TAB>text` (UTF-8, LF,
//! no header) or as JSON lines with `id`/`doc_id` and `text`/`contents`
//! fields. Judgments use the four-column TREC qrels layout
//! `qid iter docid grade`; the second column is ignored.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

impl Query {
    pub fn new(query_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub query_id: String,
    pub doc_id: String,
    pub grade: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextFormat {
    #[default]
    Tsv,
    Jsonl,
}

impl TextFormat {
    /// Guess from the file extension; anything but `.jsonl`/`.json` is TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TextFormat::Jsonl,
            _ => TextFormat::Tsv,
        }
    }
}

impl FromStr for TextFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TextFormat::Tsv),
            "jsonl" => Ok(TextFormat::Jsonl),
            other => Err(Error::Config(format!("unknown text format {other:?}"))),
        }
    }
}

/// Relevance cut-off used to binarize graded judgments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceThreshold(pub i32);

impl RelevanceThreshold {
    /// ANTIQUE grades run 1..=4; 3 and 4 count as relevant.
    pub const ANTIQUE: Self = RelevanceThreshold(3);
    /// wikIR grades are 0, 1, 2; anything positive counts.
    pub const WIKIR: Self = RelevanceThreshold(1);

    pub fn is_relevant(self, grade: i32) -> bool {
        grade >= self.0
    }
}

impl Default for RelevanceThreshold {
    fn default() -> Self {
        RelevanceThreshold(1)
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    #[serde(alias = "doc_id", alias = "query_id", alias = "qid", alias = "docid")]
    id: String,
    #[serde(alias = "contents", alias = "title")]
    text: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Parse `(id, text)` records. Ids must be non-empty and unique.
fn parse_records<R: BufRead>(
    reader: R,
    origin: &Path,
    format: TextFormat,
) -> Result<Vec<(String, String)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            message,
        };
        let (id, text) = match format {
            TextFormat::Tsv => {
                let (id, text) = line
                    .split_once('\t')
                    .ok_or_else(|| parse_err("expected `id<TAB>text`".into()))?;
                (id.to_owned(), text.to_owned())
            }
            TextFormat::Jsonl => {
                let rec: JsonRecord =
                    serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
                (rec.id, rec.text)
            }
        };
        if id.is_empty() {
            return Err(parse_err("empty id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateKey { key: id });
        }
        out.push((id, text));
    }
    Ok(out)
}

pub fn read_documents<R: BufRead>(
    reader: R,
    origin: &Path,
    format: TextFormat,
) -> Result<Vec<Document>> {
    Ok(parse_records(reader, origin, format)?
        .into_iter()
        .map(|(doc_id, text)| Document { doc_id, text })
        .collect())
}

pub fn load_documents(path: &Path, format: TextFormat) -> Result<Vec<Document>> {
    read_documents(open(path)?, path, format)
}

pub fn load_queries(path: &Path, format: TextFormat) -> Result<Vec<Query>> {
    Ok(parse_records(open(path)?, path, format)?
        .into_iter()
        .map(|(query_id, text)| Query { query_id, text })
        .collect())
}

/// Write documents as TSV. Ids and texts must not contain newlines; ids must
/// not contain tabs.
pub fn write_documents<W: Write>(mut out: W, docs: &[Document]) -> Result<()> {
    for d in docs {
        if d.doc_id.contains(['\t', '\n']) || d.text.contains('\n') {
            return Err(Error::Contract(format!(
                "document {:?} cannot be represented as TSV",
                d.doc_id
            )));
        }
        writeln!(out, "{}\t{}", d.doc_id, d.text).map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn write_queries<W: Write>(out: W, queries: &[Query]) -> Result<()> {
    let as_docs: Vec<Document> = queries
        .iter()
        .map(|q| Document::new(q.query_id.clone(), q.text.clone()))
        .collect();
    write_documents(out, &as_docs)
}

/// Graded judgments indexed by query, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    by_query: BTreeMap<String, BTreeMap<String, i32>>,
}

impl Qrels {
    pub fn from_judgments<I: IntoIterator<Item = Judgment>>(judgments: I) -> Result<Self> {
        let mut qrels = Qrels::default();
        for j in judgments {
            qrels.insert(j)?;
        }
        Ok(qrels)
    }

    fn insert(&mut self, j: Judgment) -> Result<()> {
        let docs = self.by_query.entry(j.query_id.clone()).or_default();
        if docs.contains_key(&j.doc_id) {
            return Err(Error::DuplicateKey {
                key: format!("({}, {})", j.query_id, j.doc_id),
            });
        }
        docs.insert(j.doc_id, j.grade);
        Ok(())
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, i32>> {
        self.by_query.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_query.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    pub fn judgments(&self) -> impl Iterator<Item = Judgment> + '_ {
        self.by_query.iter().flat_map(|(q, docs)| {
            docs.iter().map(move |(d, &grade)| Judgment {
                query_id: q.clone(),
                doc_id: d.clone(),
                grade,
            })
        })
    }

    /// Keep only the listed queries.
    pub fn restrict_to<'a, I: IntoIterator<Item = &'a str>>(&self, ids: I) -> Qrels {
        let keep: HashSet<&str> = ids.into_iter().collect();
        Qrels {
            by_query: self
                .by_query
                .iter()
                .filter(|(q, _)| keep.contains(q.as_str()))
                .map(|(q, d)| (q.clone(), d.clone()))
                .collect(),
        }
    }
}

pub fn read_qrels<R: BufRead>(reader: R, origin: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [qid, _, docid, grade] = cols[..] else {
            return Err(parse_err(format!("expected 4 columns, found {}", cols.len())));
        };
        let grade: i32 = grade
            .parse()
            .map_err(|_| parse_err(format!("grade {grade:?} is not an integer")))?;
        qrels.insert(Judgment {
            query_id: qid.to_owned(),
            doc_id: docid.to_owned(),
            grade,
        })?;
    }
    Ok(qrels)
}

pub fn load_qrels(path: &Path) -> Result<Qrels> {
    read_qrels(open(path)?, path)
}

pub fn write_qrels<W: Write>(mut out: W, qrels: &Qrels) -> Result<()> {
    for j in qrels.judgments() {
        writeln!(out, "{} 0 {} {}", j.query_id, j.doc_id, j.grade)
            .map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}
