//! Finished word embeddings: normalization, cosine queries, composition,
//! text persistence and the random Gaussian baseline.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{decode_utf8, Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::factor::FactorMatrix;

/// Tolerance on row norms for an embedding to count as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Significant digits written per value in embedding files.
pub const EMBEDDING_DIGITS: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    vocab: Vocabulary,
    dim: usize,
    vectors: Vec<f64>,
    normalized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composition {
    Multiplicative,
    Additive,
}

impl Embedding {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(Error::Domain(format!(
                "{} values do not form {} vectors of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        let mut emb = Embedding {
            vocab,
            dim,
            vectors,
            normalized: false,
        };
        emb.normalized = emb.rows_are_unit();
        Ok(emb)
    }

    pub fn from_factor(vocab: Vocabulary, factor: &FactorMatrix) -> Result<Self> {
        if vocab.len() != factor.dim() {
            return Err(Error::Domain(format!(
                "vocabulary has {} words but the factor has {} rows",
                vocab.len(),
                factor.dim()
            )));
        }
        Embedding::new(vocab, factor.rank(), factor.values().to_vec())
    }

    fn rows_are_unit(&self) -> bool {
        self.vectors
            .chunks_exact(self.dim)
            .all(|r| (norm(r) - 1.0).abs() <= UNIT_NORM_TOLERANCE)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, id: WordId) -> &[f64] {
        let i = id as usize;
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, word: &str) -> Result<WordId> {
        self.vocab
            .id(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))
    }

    pub fn vector(&self, word: &str) -> Result<&[f64]> {
        Ok(self.row(self.id(word)?))
    }

    /// The word's vector scaled to unit length.
    pub fn unit_vector(&self, word: &str) -> Result<Vec<f64>> {
        let v = self.vector(word)?;
        if self.normalized {
            return Ok(v.to_vec());
        }
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::DegenerateVector(word.to_string()));
        }
        Ok(v.iter().map(|x| x / n).collect())
    }

    /// Divides every row by its L2 norm. Fails on the first zero row.
    pub fn normalize(mut self) -> Result<Self> {
        for (id, row) in self.vectors.chunks_exact_mut(self.dim).enumerate() {
            let n = norm(row);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::DegenerateVector(
                    self.vocab.token(id as WordId).to_string(),
                ));
            }
            row.iter_mut().for_each(|x| *x /= n);
        }
        self.normalized = true;
        Ok(self)
    }

    /// Cosine similarity of two vocabulary words.
    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64> {
        let a = self.unit_vector(w1)?;
        let b = self.unit_vector(w2)?;
        Ok(dot(&a, &b).clamp(-1.0, 1.0))
    }

    /// Top `k` words by cosine similarity to `query`, skipping `exclude`.
    /// Ties go to the lower id. Fewer than `k` results are returned when
    /// the vocabulary runs out.
    pub fn nearest_neighbors(
        &self,
        query: &[f64],
        k: usize,
        exclude: &HashSet<String>,
    ) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        if query.len() != self.dim {
            return Err(Error::Domain(format!(
                "query has dimension {}, embedding has {}",
                query.len(),
                self.dim
            )));
        }
        let qn = norm(query);
        if qn == 0.0 || !qn.is_finite() {
            return Err(Error::DegenerateVector("<query>".into()));
        }
        let mut scored: Vec<(WordId, f64)> = (0..self.len() as WordId)
            .filter(|&id| !exclude.contains(self.vocab.token(id)))
            .map(|id| {
                let row = self.row(id);
                let rn = if self.normalized { 1.0 } else { norm(row) };
                let sim = if rn == 0.0 { 0.0 } else { dot(query, row) / (qn * rn) };
                (id, sim)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(id, s)| (self.vocab.token(id).to_string(), s))
            .collect())
    }

    /// Elementwise product or sum of the two words' unit vectors. The
    /// result is not renormalized.
    pub fn compose(&self, w1: &str, w2: &str, mode: Composition) -> Result<Vec<f64>> {
        let a = self.unit_vector(w1)?;
        let b = self.unit_vector(w2)?;
        Ok(match mode {
            Composition::Multiplicative => elementwise_product(&a, &b),
            Composition::Additive => a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        })
    }

    /// Writes `|V| dim`, then `word v1 ... vdim` per id.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for id in 0..self.len() as WordId {
            out.write_all(self.vocab.token(id).as_bytes())?;
            for &x in self.row(id) {
                write!(out, " {}", format_significant(x, EMBEDDING_DIGITS))?;
            }
            writeln!(out)?;
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
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let (count, dim) = header
            .split_once(' ')
            .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| Error::parse(path, 1, "header must be `words dim`"))?;
        if dim == 0 {
            return Err(Error::parse(path, 1, "dimension must be positive"));
        }
        let mut words = Vec::with_capacity(count);
        let mut seen = HashSet::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            if !seen.insert(word.to_string()) {
                return Err(Error::parse(path, lineno, format!("duplicate word {word:?}")));
            }
            let before = vectors.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("invalid value {f:?}")))?;
                vectors.push(x);
            }
            if vectors.len() - before != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {dim} values, found {}", vectors.len() - before),
                ));
            }
            words.push((word.to_string(), 0));
        }
        if words.len() != count {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {count} words, found {}", words.len()),
            ));
        }
        let vocab = Vocabulary::from_entries(words)?;
        Embedding::new(vocab, dim, vectors)
    }
}

/// Baseline embedding with i.i.d. `N(0, 1/2)` entries.
pub fn random_embedding(vocab: Vocabulary, dim: usize, seed: u64) -> Result<Embedding> {
    if dim == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
    let vectors = (0..vocab.len() * dim).map(|_| normal.sample(&mut rng)).collect();
    Embedding::new(vocab, dim, vectors)
}

/// Meaning vector of two raw factor rows, `u_i * u_j`.
pub fn meaning_vector(factor: &FactorMatrix, i: WordId, j: WordId) -> Vec<f64> {
    elementwise_product(factor.row(i), factor.row(j))
}

pub fn elementwise_product(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Formats `x` with `digits` significant digits, choosing fixed or
/// scientific notation like C's `%g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
