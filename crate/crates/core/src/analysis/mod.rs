//! Text analysis shared by indexing, querying and expansion.

pub mod porter;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Stemming algorithm applied after stopword removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    None,
    Porter,
}

/// Where token boundaries fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenPattern {
    /// Maximal runs of Unicode alphanumeric characters.
    Alphanumeric,
    /// Maximal runs of non-whitespace characters.
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub token_pattern: TokenPattern,
}

impl Default for AnalyzerConfig {
    /// Lowercase, alphanumeric tokens, English stopwords, Porter stemming.
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: english_stopwords(),
            stemmer: Stemmer::Porter,
            token_pattern: TokenPattern::Alphanumeric,
        }
    }
}

impl AnalyzerConfig {
    /// No normalization beyond splitting. Mostly useful in tests.
    pub fn plain() -> Self {
        Self {
            lowercase: false,
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::None,
            token_pattern: TokenPattern::Alphanumeric,
        }
    }

    pub fn with_stemmer(mut self, stemmer: Stemmer) -> Self {
        self.stemmer = stemmer;
        self
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        analyze(text, self)
    }
}

/// The bundled English stopword list, one word per line.
pub fn english_stopwords() -> BTreeSet<String> {
    parse_stopwords(ENGLISH_STOPWORDS)
}

pub fn parse_stopwords(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Split, normalize, filter and stem `text`.
///
/// Lowercasing happens before splitting so that case mappings which expand
/// into several characters are tokenized consistently on re-analysis.
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    analyze_with_surface(text, config)
        .into_iter()
        .map(|(_, term)| term)
        .collect()
}

/// Like [`analyze`], but pairs each term with the (case-normalized) token it
/// was stemmed from.
pub fn analyze_with_surface(text: &str, config: &AnalyzerConfig) -> Vec<(String, String)> {
    let lowered;
    let text = if config.lowercase {
        lowered = text.to_lowercase();
        lowered.as_str()
    } else {
        text
    };
    let raw: Box<dyn Iterator<Item = &str>> = match config.token_pattern {
        TokenPattern::Alphanumeric => Box::new(text.split(|c: char| !c.is_alphanumeric())),
        TokenPattern::Whitespace => Box::new(text.split(char::is_whitespace)),
    };
    raw.filter(|t| !t.is_empty())
        .filter(|t| !config.stopwords.contains(*t))
        .map(|t| {
            let term = match config.stemmer {
                Stemmer::None => t.to_owned(),
                Stemmer::Porter => porter::stem(t).into_owned(),
            };
            (t.to_owned(), term)
        })
        .collect()
}
