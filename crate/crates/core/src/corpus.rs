//! Corpus preprocessing: tokenization, frequency-filtered vocabulary and
//! conversion of token sentences into id sentences.
//!
//! One input line is one sentence. Tokens are lowercased maximal runs of
//! alphanumeric characters.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Index of a word in a [`Vocabulary`].
pub type WordId = u32;

/// Splits `text` into lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            tokens.push(text[s..i].to_lowercase());
        }
    }
    if let Some(s) = start {
        tokens.push(text[s..].to_lowercase());
    }
    tokens
}

/// Validates `bytes` as UTF-8, reporting the offset of the first bad byte.
pub fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })
}

/// Tokenizes every line of `text`; empty lines become empty sentences.
pub fn tokenize_lines(text: &str) -> Vec<Vec<String>> {
    text.lines().map(tokenize).collect()
}

/// Reads and tokenizes a corpus file, one sentence per line.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(tokenize_lines(decode_utf8(&bytes)?))
}

/// Reads a stopword file: one token per line, blank lines ignored.
pub fn read_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_utf8(&bytes)?
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

/// Raw token frequencies. Partial counts over disjoint shards of a corpus
/// can be combined with [`TokenCounts::merge`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenCounts {
    counts: HashMap<String, u64>,
}

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sentences<S: AsRef<[String]>>(sentences: impl IntoIterator<Item = S>) -> Self {
        let mut counts = TokenCounts::new();
        for sentence in sentences {
            counts.add_sentence(sentence.as_ref());
        }
        counts
    }

    pub fn add_sentence(&mut self, tokens: &[String]) {
        for token in tokens {
            *self.counts.entry(token.clone()).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: TokenCounts) {
        for (token, n) in other.counts {
            *self.counts.entry(token).or_insert(0) += n;
        }
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }
}

/// Bidirectional token/id map with occurrence counts. Ids are contiguous
/// and start at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs in id order.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, u64)>) -> Result<Self> {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for (token, count) in entries {
            if token.is_empty() {
                return Err(Error::Config("empty token in vocabulary".into()));
            }
            let id = vocab.tokens.len() as WordId;
            if vocab.index.insert(token.clone(), id).is_some() {
                return Err(Error::Config(format!("duplicate token {token:?} in vocabulary")));
            }
            vocab.tokens.push(token);
            vocab.counts.push(count);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Writes the `token<TAB>count` format, one line per id.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (token, count) in self.tokens.iter().zip(&self.counts) {
            writeln!(out, "{token}\t{count}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = decode_utf8(&bytes)?;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let (token, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected token<TAB>count"))?;
            if token.is_empty() {
                return Err(Error::parse(path, lineno, "empty token"));
            }
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid count {count:?}")))?;
            if !seen.insert(token.to_owned()) {
                return Err(Error::parse(path, lineno, format!("duplicate token {token:?}")));
            }
            entries.push((token.to_owned(), count));
        }
        Vocabulary::from_entries(entries)
    }
}

/// Builds a vocabulary of the non-stopword tokens occurring at least
/// `min_count` times. Ids follow descending frequency, ties broken
/// lexicographically.
pub fn build_vocab<S: AsRef<[String]>>(
    sentences: impl IntoIterator<Item = S>,
    min_count: u64,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary> {
    vocab_from_counts(TokenCounts::from_sentences(sentences), min_count, stopwords)
}

pub fn vocab_from_counts(
    counts: TokenCounts,
    min_count: u64,
    stopwords: &HashSet<String>,
) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut kept: Vec<(String, u64)> = counts
        .counts
        .into_iter()
        .filter(|(token, n)| *n >= min_count && !stopwords.contains(token))
        .collect();
    if kept.is_empty() {
        return Err(Error::Config(format!(
            "no token survives min_count={min_count} and stopword filtering"
        )));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_entries(kept)
}

/// A sentence as vocabulary ids, with out-of-vocabulary tokens dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexedSentence {
    pub ids: Vec<WordId>,
}

impl IndexedSentence {
    pub fn new(ids: Vec<WordId>) -> Self {
        IndexedSentence { ids }
    }
}

impl From<Vec<WordId>> for IndexedSentence {
    fn from(ids: Vec<WordId>) -> Self {
        IndexedSentence { ids }
    }
}

pub fn index_sentence(tokens: &[String], vocab: &Vocabulary) -> IndexedSentence {
    IndexedSentence {
        ids: tokens.iter().filter_map(|t| vocab.id(t)).collect(),
    }
}

pub fn index_sentences<S: AsRef<[String]>>(
    sentences: impl IntoIterator<Item = S>,
    vocab: &Vocabulary,
) -> Vec<IndexedSentence> {
    sentences
        .into_iter()
        .map(|s| index_sentence(s.as_ref(), vocab))
        .collect()
}
