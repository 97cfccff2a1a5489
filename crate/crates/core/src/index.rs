//! Inverted index with the collection statistics BM25 and the feedback
//! models need, and its on-disk format.
//!
//! Index file layout (all integers little-endian, strings are a `u32` byte
//! length followed by UTF-8 bytes):
//!
//! ```text
//! magic        "GQEPRF-IDX"            10 bytes
//! version      u8                      currently 1
//! analyzer     lowercase u8, stemmer u8, token_pattern u8,
//!              stopword count u32, stopwords (string each)
//! documents    count u32, then per document: id string, text string, length u32
//! terms        count u32, then per term (ascending byte order):
//!              term string, posting count u32, (ordinal u32, tf u32) pairs
//! ```
//!
//! Nothing may follow the last posting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::analysis::{AnalyzerConfig, Stemmer, TokenPattern};
use crate::corpus::Document;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 10] = b"GQEPRF-IDX";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    analyzer: AnalyzerConfig,
    terms: BTreeMap<String, Vec<Posting>>,
    doc_ids: Vec<String>,
    doc_texts: Vec<String>,
    doc_lengths: Vec<u32>,
    ordinals: HashMap<String, u32>,
    total_length: u64,
    avgdl: f64,
}

impl InvertedIndex {
    /// Build an index. Ordinals follow the order of `documents`.
    pub fn build(documents: &[Document], analyzer: AnalyzerConfig) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCollection);
        }
        if documents.len() > u32::MAX as usize {
            return Err(Error::Contract("too many documents".into()));
        }
        let mut terms: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(documents.len());
        let mut ordinals = HashMap::with_capacity(documents.len());
        for (ord, doc) in documents.iter().enumerate() {
            let ord = ord as u32;
            if ordinals.insert(doc.doc_id.clone(), ord).is_some() {
                return Err(Error::DuplicateKey {
                    key: doc.doc_id.clone(),
                });
            }
            let tokens = analyzer.analyze(&doc.text);
            doc_lengths.push(tokens.len() as u32);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                terms.entry(term).or_default().push(Posting { doc: ord, tf });
            }
        }
        Ok(Self::assemble(
            analyzer,
            terms,
            documents.iter().map(|d| d.doc_id.clone()).collect(),
            documents.iter().map(|d| d.text.clone()).collect(),
            doc_lengths,
            ordinals,
        ))
    }

    fn assemble(
        analyzer: AnalyzerConfig,
        terms: BTreeMap<String, Vec<Posting>>,
        doc_ids: Vec<String>,
        doc_texts: Vec<String>,
        doc_lengths: Vec<u32>,
        ordinals: HashMap<String, u32>,
    ) -> Self {
        let total_length: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avgdl = total_length as f64 / doc_lengths.len() as f64;
        Self {
            analyzer,
            terms,
            doc_ids,
            doc_texts,
            doc_lengths,
            ordinals,
            total_length,
            avgdl,
        }
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        self.analyzer.analyze(text)
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn df(&self, term: &str) -> usize {
        self.terms.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.terms.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn doc_id(&self, ord: u32) -> &str {
        &self.doc_ids[ord as usize]
    }

    pub fn doc_text(&self, ord: u32) -> &str {
        &self.doc_texts[ord as usize]
    }

    pub fn doc_len(&self, ord: u32) -> u32 {
        self.doc_lengths[ord as usize]
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.ordinals.get(doc_id).copied()
    }

    pub fn document(&self, ord: u32) -> Document {
        Document::new(self.doc_id(ord), self.doc_text(ord))
    }

    /// Term frequency of `term` in the document with external id `doc_id`.
    pub fn tf(&self, term: &str, doc_id: &str) -> u32 {
        let Some(ord) = self.ordinal(doc_id) else {
            return 0;
        };
        let postings = self.postings(term);
        postings
            .binary_search_by_key(&ord, |p| p.doc)
            .map_or(0, |i| postings[i].tf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u8(FORMAT_VERSION);
        w.u8(u8::from(self.analyzer.lowercase));
        w.u8(match self.analyzer.stemmer {
            Stemmer::None => 0,
            Stemmer::Porter => 1,
        });
        w.u8(match self.analyzer.token_pattern {
            TokenPattern::Alphanumeric => 0,
            TokenPattern::Whitespace => 1,
        });
        w.u32(self.analyzer.stopwords.len() as u32);
        for s in &self.analyzer.stopwords {
            w.str(s);
        }
        w.u32(self.doc_ids.len() as u32);
        for i in 0..self.doc_ids.len() {
            w.str(&self.doc_ids[i]);
            w.str(&self.doc_texts[i]);
            w.u32(self.doc_lengths[i]);
        }
        w.u32(self.terms.len() as u32);
        for (term, postings) in &self.terms {
            w.str(term);
            w.u32(postings.len() as u32);
            for p in postings {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 1 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::UnsupportedVersion("missing GQEPRF-IDX header".into()));
        }
        let version = bytes[MAGIC.len()];
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(format!(
                "format version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let mut r = Reader {
            buf: bytes,
            pos: MAGIC.len() + 1,
        };
        let lowercase = match r.u8()? {
            0 => false,
            1 => true,
            x => return Err(Error::Corrupt(format!("bad lowercase flag {x}"))),
        };
        let stemmer = match r.u8()? {
            0 => Stemmer::None,
            1 => Stemmer::Porter,
            x => return Err(Error::Corrupt(format!("unknown stemmer {x}"))),
        };
        let token_pattern = match r.u8()? {
            0 => TokenPattern::Alphanumeric,
            1 => TokenPattern::Whitespace,
            x => return Err(Error::Corrupt(format!("unknown token pattern {x}"))),
        };
        let n_stop = r.u32()?;
        let mut stopwords = BTreeSet::new();
        for _ in 0..n_stop {
            stopwords.insert(r.string()?);
        }
        let analyzer = AnalyzerConfig {
            lowercase,
            stopwords,
            stemmer,
            token_pattern,
        };

        let n_docs = r.u32()? as usize;
        if n_docs == 0 {
            return Err(Error::Corrupt("index has no documents".into()));
        }
        let mut doc_ids = Vec::with_capacity(n_docs.min(bytes.len()));
        let mut doc_texts = Vec::with_capacity(n_docs.min(bytes.len()));
        let mut doc_lengths = Vec::with_capacity(n_docs.min(bytes.len()));
        let mut ordinals = HashMap::new();
        for ord in 0..n_docs {
            let id = r.string()?;
            if ordinals.insert(id.clone(), ord as u32).is_some() {
                return Err(Error::Corrupt(format!("duplicate document id {id:?}")));
            }
            doc_ids.push(id);
            doc_texts.push(r.string()?);
            doc_lengths.push(r.u32()?);
        }

        let n_terms = r.u32()?;
        let mut terms = BTreeMap::new();
        let mut tf_sums = vec![0u64; n_docs];
        let mut previous: Option<String> = None;
        for _ in 0..n_terms {
            let term = r.string()?;
            if previous.as_ref().is_some_and(|p| *p >= term) {
                return Err(Error::Corrupt("term dictionary out of order".into()));
            }
            let n_post = r.u32()? as usize;
            let mut postings = Vec::with_capacity(n_post.min(bytes.len()));
            for _ in 0..n_post {
                let doc = r.u32()?;
                let tf = r.u32()?;
                if doc as usize >= n_docs || tf == 0 {
                    return Err(Error::Corrupt(format!("bad posting in {term:?}")));
                }
                if postings.last().is_some_and(|p: &Posting| p.doc >= doc) {
                    return Err(Error::Corrupt(format!("unsorted postings in {term:?}")));
                }
                tf_sums[doc as usize] += u64::from(tf);
                postings.push(Posting { doc, tf });
            }
            previous = Some(term.clone());
            terms.insert(term, postings);
        }
        if r.pos != bytes.len() {
            return Err(Error::Corrupt("trailing bytes after term dictionary".into()));
        }
        if tf_sums
            .iter()
            .zip(&doc_lengths)
            .any(|(&sum, &len)| sum != u64::from(len))
        {
            return Err(Error::Corrupt("document lengths disagree with postings".into()));
        }
        Ok(Self::assemble(
            analyzer,
            terms,
            doc_ids,
            doc_texts,
            doc_lengths,
            ordinals,
        ))
    }
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let at = self.pos;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Corrupt(format!("invalid UTF-8 at byte {at}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> InvertedIndex {
        InvertedIndex::build(
            &[Document::new("d1", "a b a"), Document::new("d2", "b c")],
            AnalyzerConfig::plain(),
        )
        .unwrap()
    }

    #[test]
    fn hand_counted_stats() {
        let idx = tiny();
        assert_eq!(idx.num_docs(), 2);
        assert_eq!(idx.avgdl(), 2.5);
        assert_eq!(idx.df("a"), 1);
        assert_eq!(idx.df("b"), 2);
        assert_eq!(idx.tf("a", "d1"), 2);
        assert_eq!(idx.tf("a", "d2"), 0);
        assert_eq!(idx.vocabulary_size(), 3);
    }

    #[test]
    fn empty_document() {
        let idx = InvertedIndex::build(
            &[Document::new("d1", ""), Document::new("d2", "x")],
            AnalyzerConfig::plain(),
        )
        .unwrap();
        assert_eq!(idx.num_docs(), 2);
        assert_eq!(idx.avgdl(), 0.5);
        assert_eq!(idx.doc_len(0), 0);
        assert_eq!(idx.terms().map(|(t, _)| t).collect::<Vec<_>>(), vec!["x"]);
    }

    #[test]
    fn empty_collection_rejected() {
        assert!(matches!(
            InvertedIndex::build(&[], AnalyzerConfig::default()),
            Err(Error::EmptyCollection)
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = InvertedIndex::build(
            &[Document::new("d1", "a"), Document::new("d1", "b")],
            AnalyzerConfig::plain(),
        );
        assert!(matches!(r, Err(Error::DuplicateKey { .. })));
    }

    #[test]
    fn byte_round_trip() {
        let idx = tiny();
        let back = InvertedIndex::from_bytes(&idx.to_bytes()).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.avgdl(), 2.5);
        assert_eq!(back.tf("a", "d1"), 2);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = tiny().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            InvertedIndex::from_bytes(&bytes),
            Err(Error::UnsupportedVersion(_))
        ));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = tiny().to_bytes();
        bytes[MAGIC.len()] = 9;
        assert!(matches!(
            InvertedIndex::from_bytes(&bytes),
            Err(Error::UnsupportedVersion(_))
        ));
    }

    #[test]
    fn truncation_detected_everywhere() {
        let bytes = tiny().to_bytes();
        for cut in MAGIC.len() + 1..bytes.len() {
            assert!(
                matches!(InvertedIndex::from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn trailing_garbage_detected() {
        let mut bytes = tiny().to_bytes();
        bytes.push(0);
        assert!(matches!(
            InvertedIndex::from_bytes(&bytes),
            Err(Error::Corrupt(_))
        ));
    }
}
