//! TREC run files: `qid Q0 docid rank score tag`, one line per retrieved
//! document.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::retrieval::ScoredDoc;

/// Ranked results per query, in query order. Ranks run 1, 2, ... within
/// each query and doc ids are unique per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub tag: String,
    pub queries: Vec<(String, Vec<ScoredDoc>)>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            queries: Vec::new(),
        }
    }

    /// Append a query's results, renumbering ranks from 1.
    pub fn push(&mut self, query_id: impl Into<String>, mut docs: Vec<ScoredDoc>) {
        for (i, d) in docs.iter_mut().enumerate() {
            d.rank = i + 1;
        }
        self.queries.push((query_id.into(), docs));
    }

    pub fn get(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.queries
            .iter()
            .find(|(q, _)| q == query_id)
            .map(|(_, d)| d.as_slice())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Scores are written in Rust's shortest round-trip form, so reading the
    /// file back reproduces them bit for bit.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (qid, docs) in &self.queries {
            for d in docs {
                writeln!(out, "{qid} Q0 {} {} {} {}", d.doc_id, d.rank, d.score, self.tag)?;
            }
        }
        out.flush()
    }

    pub fn to_trec(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("run file is UTF-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    /// Parse a run. Lines of one query may be interleaved with others and
    /// in any order; each query's lines are sorted by rank and must then
    /// number 1, 2, ... without repeated documents.
    pub fn read<R: BufRead>(reader: R, origin: &Path) -> Result<Self> {
        let mut run = RunFile::default();
        let mut seen_tag = false;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno,
                message,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [qid, _, docid, rank, score, tag] = cols[..] else {
                return Err(err(format!("expected 6 columns, found {}", cols.len())));
            };
            let rank: usize = rank
                .parse()
                .ok()
                .filter(|&r| r >= 1)
                .ok_or_else(|| err(format!("rank {rank:?} is not a positive integer")))?;
            let score: f64 = score
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| err(format!("score {score:?} is not a finite number")))?;
            if !seen_tag {
                run.tag = tag.to_owned();
                seen_tag = true;
            }
            let doc = ScoredDoc {
                doc_id: docid.to_owned(),
                score,
                rank,
            };
            match run.queries.iter_mut().find(|(q, _)| q == qid) {
                Some((_, docs)) => docs.push(doc),
                None => run.queries.push((qid.to_owned(), vec![doc])),
            }
        }
        for (qid, docs) in &mut run.queries {
            docs.sort_by_key(|d| d.rank);
            let mut ids = HashSet::new();
            for (i, d) in docs.iter().enumerate() {
                if d.rank != i + 1 {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: 0,
                        message: format!("query {qid}: ranks are not consecutive from 1 (found {} at position {})", d.rank, i + 1),
                    });
                }
                if !ids.insert(d.doc_id.as_str()) {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        line: 0,
                        message: format!("query {qid}: document {} listed twice", d.doc_id),
                    });
                }
            }
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }
}
