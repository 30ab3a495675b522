//! Window co-occurrence counting and shifted-PPMI tensors of order 2 and 3.
//!
//! Each sentence is covered by windows of `window` consecutive tokens sliding
//! one position at a time; a sentence shorter than the window forms a single
//! window. Inside a window every unordered pair (triple) of distinct word
//! types is counted once, no matter how many position pairs realize it.
//!
//! Probabilities are estimated as `pair / total_pairs`,
//! `triple / total_triples` and `unigram / total_tokens`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::{decode_utf8, IndexedSentence, WordId};
use crate::error::{Error, Result};

/// Sorted index tuple of order 2 or 3.
///
/// Tuples built from corpus windows have strictly increasing ids. Tuples
/// with repeated ids are allowed so that dense synthetic tensors (diagonal
/// included) can be represented too.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTuple {
    ids: [WordId; 3],
    order: u8,
}

impl IndexTuple {
    pub fn pair(i: WordId, j: WordId) -> Self {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        IndexTuple {
            ids: [a, b, 0],
            order: 2,
        }
    }

    pub fn triple(i: WordId, j: WordId, k: WordId) -> Self {
        let mut ids = [i, j, k];
        ids.sort_unstable();
        IndexTuple { ids, order: 3 }
    }

    /// Canonical (sorted) tuple from any permutation of 2 or 3 ids.
    ///
    /// Panics on other lengths.
    pub fn from_ids(ids: &[WordId]) -> Self {
        match *ids {
            [i, j] => Self::pair(i, j),
            [i, j, k] => Self::triple(i, j, k),
            _ => panic!("index tuples have order 2 or 3, got {}", ids.len()),
        }
    }

    pub fn ids(&self) -> &[WordId] {
        &self.ids[..self.order as usize]
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// True when all ids are pairwise distinct.
    pub fn is_distinct(&self) -> bool {
        self.ids().windows(2).all(|w| w[0] < w[1])
    }
}

impl std::fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ids = self.ids();
        write!(f, "{}", ids[0])?;
        for id in &ids[1..] {
            write!(f, " {id}")?;
        }
        Ok(())
    }
}

/// Calls `f` with the sorted distinct word types of every window of `ids`.
pub(crate) fn for_each_window(ids: &[WordId], window: usize, mut f: impl FnMut(&[WordId])) {
    if ids.is_empty() {
        return;
    }
    let width = window.min(ids.len());
    let mut types = Vec::with_capacity(width);
    for start in 0..=ids.len() - width {
        types.clear();
        types.extend_from_slice(&ids[start..start + width]);
        types.sort_unstable();
        types.dedup();
        f(&types);
    }
}

/// Calls `f` with every canonical distinct tuple of the requested order
/// found in one window's sorted distinct types.
pub(crate) fn for_each_tuple(types: &[WordId], order: usize, mut f: impl FnMut(IndexTuple)) {
    let n = types.len();
    match order {
        2 => {
            for a in 0..n {
                for b in a + 1..n {
                    f(IndexTuple::pair(types[a], types[b]));
                }
            }
        }
        3 => {
            for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        f(IndexTuple::triple(types[a], types[b], types[c]));
                    }
                }
            }
        }
        _ => panic!("unsupported tuple order {order}"),
    }
}

/// Unigram, pair and triple co-occurrence counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoocStats {
    unigram: Vec<u64>,
    pairs: HashMap<IndexTuple, u64>,
    triples: HashMap<IndexTuple, u64>,
    total_tokens: u64,
    total_pairs: u64,
    total_triples: u64,
}

impl CoocStats {
    /// Empty statistics over a vocabulary of `dim` words.
    pub fn with_dim(dim: usize) -> Self {
        CoocStats {
            unigram: vec![0; dim],
            ..Default::default()
        }
    }

    /// Adds the windows of one sentence. Panics if `window < 2`.
    pub fn add_sentence(&mut self, sentence: &[WordId], window: usize) {
        assert!(window >= 2, "window must be at least 2");
        for &id in sentence {
            let id = id as usize;
            if id >= self.unigram.len() {
                self.unigram.resize(id + 1, 0);
            }
            self.unigram[id] += 1;
        }
        self.total_tokens += sentence.len() as u64;

        let Self {
            pairs,
            triples,
            total_pairs,
            total_triples,
            ..
        } = self;
        for_each_window(sentence, window, |types| {
            for_each_tuple(types, 2, |t| {
                *pairs.entry(t).or_insert(0) += 1;
                *total_pairs += 1;
            });
            for_each_tuple(types, 3, |t| {
                *triples.entry(t).or_insert(0) += 1;
                *total_triples += 1;
            });
        });
    }

    /// Adds counts gathered over a disjoint shard of the corpus.
    pub fn merge(&mut self, other: CoocStats) {
        if other.unigram.len() > self.unigram.len() {
            self.unigram.resize(other.unigram.len(), 0);
        }
        for (mine, theirs) in self.unigram.iter_mut().zip(&other.unigram) {
            *mine += theirs;
        }
        for (t, n) in other.pairs {
            *self.pairs.entry(t).or_insert(0) += n;
        }
        for (t, n) in other.triples {
            *self.triples.entry(t).or_insert(0) += n;
        }
        self.total_tokens += other.total_tokens;
        self.total_pairs += other.total_pairs;
        self.total_triples += other.total_triples;
    }

    pub fn dim(&self) -> usize {
        self.unigram.len()
    }

    pub fn unigram(&self, id: WordId) -> u64 {
        self.unigram.get(id as usize).copied().unwrap_or(0)
    }

    pub fn pair(&self, i: WordId, j: WordId) -> u64 {
        self.pairs.get(&IndexTuple::pair(i, j)).copied().unwrap_or(0)
    }

    pub fn triple(&self, i: WordId, j: WordId, k: WordId) -> u64 {
        self.triples
            .get(&IndexTuple::triple(i, j, k))
            .copied()
            .unwrap_or(0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&IndexTuple, &u64)> {
        self.pairs.iter()
    }

    pub fn triples(&self) -> impl Iterator<Item = (&IndexTuple, &u64)> {
        self.triples.iter()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn total_triples(&self) -> u64 {
        self.total_triples
    }

    fn p_word(&self, id: WordId) -> f64 {
        self.unigram(id) as f64 / self.total_tokens as f64
    }

    fn pmi_of(&self, tuple: &IndexTuple, joint: u64, total: u64) -> f64 {
        if joint == 0 {
            return f64::NEG_INFINITY;
        }
        let p_joint = joint as f64 / total as f64;
        let marginals: f64 = tuple.ids().iter().map(|&id| self.p_word(id)).product();
        (p_joint / marginals).ln()
    }
}

/// Counts co-occurrences over all sentences. The vocabulary dimension is
/// one more than the largest id seen.
pub fn count_cooccurrences<'a>(
    sentences: impl IntoIterator<Item = &'a IndexedSentence>,
    window: usize,
) -> CoocStats {
    let mut stats = CoocStats::default();
    for s in sentences {
        stats.add_sentence(&s.ids, window);
    }
    stats
}

/// Two-word PMI; `-inf` when the pair never co-occurs.
pub fn pmi2(stats: &CoocStats, i: WordId, j: WordId) -> Result<f64> {
    if i == j {
        return Err(Error::Domain(format!("pmi2 needs distinct ids, got {i} twice")));
    }
    let t = IndexTuple::pair(i, j);
    Ok(stats.pmi_of(&t, stats.pair(i, j), stats.total_pairs))
}

/// Three-word PMI; `-inf` when the triple never co-occurs.
pub fn pmi3(stats: &CoocStats, i: WordId, j: WordId, k: WordId) -> Result<f64> {
    let t = IndexTuple::triple(i, j, k);
    if !t.is_distinct() {
        return Err(Error::Domain(format!(
            "pmi3 needs pairwise distinct ids, got ({i}, {j}, {k})"
        )));
    }
    Ok(stats.pmi_of(&t, stats.triple(i, j, k), stats.total_triples))
}

/// Sparse supersymmetric nonnegative tensor of order 2 or 3.
///
/// Only strictly positive values are stored, keyed by the sorted index
/// tuple; lookups accept any permutation.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymTensor {
    order: usize,
    dim: usize,
    entries: HashMap<IndexTuple, f64>,
}

impl SparseSymTensor {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        if order != 2 && order != 3 {
            return Err(Error::Config(format!("tensor order must be 2 or 3, got {order}")));
        }
        Ok(SparseSymTensor {
            order,
            dim,
            entries: HashMap::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets the value at `ids` (any permutation). Non-positive values clear
    /// the entry.
    pub fn set(&mut self, ids: &[WordId], value: f64) -> Result<()> {
        if ids.len() != self.order {
            return Err(Error::Domain(format!(
                "tuple of length {} in order-{} tensor",
                ids.len(),
                self.order
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.dim) {
            return Err(Error::Domain(format!("index {bad} out of range {}", self.dim)));
        }
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite tensor value {value}")));
        }
        let key = IndexTuple::from_ids(ids);
        if value > 0.0 {
            self.entries.insert(key, value);
        } else {
            self.entries.remove(&key);
        }
        Ok(())
    }

    /// Value at `ids` in any order; zero when absent.
    pub fn get(&self, ids: &[WordId]) -> f64 {
        if ids.len() != self.order {
            return 0.0;
        }
        self.lookup(&IndexTuple::from_ids(ids))
    }

    pub fn lookup(&self, tuple: &IndexTuple) -> f64 {
        self.entries.get(tuple).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, tuple: &IndexTuple) -> bool {
        self.entries.contains_key(tuple)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexTuple, &f64)> {
        self.entries.iter()
    }

    /// Entries in ascending lexicographic tuple order.
    pub fn sorted_entries(&self) -> Vec<(IndexTuple, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(t, &x)| (*t, x)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    /// Number of canonical distinct-id tuples in the index space.
    pub fn distinct_tuple_count(&self) -> u128 {
        let n = self.dim as u128;
        match self.order {
            2 => n * n.saturating_sub(1) / 2,
            _ => n * n.saturating_sub(1) * n.saturating_sub(2) / 6,
        }
    }

    /// Writes the text format: header `order dim nnz`, then one line per
    /// entry with ids ascending and 17 significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.order, self.dim, self.nnz())?;
        for (t, v) in self.sorted_entries() {
            writeln!(out, "{t} {v:.16e}")?;
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
        let header = lines.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, 1, "header must be `order dim nnz`"))?;
        let [order, dim, nnz] = head[..] else {
            return Err(Error::parse(path, 1, "header must be `order dim nnz`"));
        };
        let mut tensor =
            SparseSymTensor::new(order, dim).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        let mut prev: Option<IndexTuple> = None;
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != order + 1 {
                return Err(Error::parse(path, lineno, format!("expected {} fields", order + 1)));
            }
            let ids: Vec<WordId> = fields[..order]
                .iter()
                .map(|f| f.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno, "invalid index"))?;
            let value: f64 = fields[order]
                .parse()
                .map_err(|_| Error::parse(path, lineno, "invalid value"))?;
            let key = IndexTuple::from_ids(&ids);
            if key.ids() != ids.as_slice() || prev.is_some_and(|p| p >= key) {
                return Err(Error::parse(path, lineno, "entries must be canonical and ascending"));
            }
            if value <= 0.0 {
                return Err(Error::parse(path, lineno, "stored values must be positive"));
            }
            tensor
                .set(&ids, value)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            prev = Some(key);
        }
        if tensor.nnz() != nnz {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {nnz} entries, found {}", tensor.nnz()),
            ));
        }
        Ok(tensor)
    }
}

/// Builds the shifted PPMI tensor `max(PMI - shift, 0)` of the given order.
/// Tuples that never co-occur or whose shifted value is not positive are
/// left implicit.
pub fn build_ppmi(stats: &CoocStats, order: usize, shift: f64) -> Result<SparseSymTensor> {
    if shift < 0.0 || !shift.is_finite() {
        return Err(Error::Config(format!("shift must be finite and >= 0, got {shift}")));
    }
    let mut tensor = SparseSymTensor::new(order, stats.dim())?;
    let (counts, total) = match order {
        2 => (&stats.pairs, stats.total_pairs),
        _ => (&stats.triples, stats.total_triples),
    };
    for (tuple, &n) in counts {
        let value = stats.pmi_of(tuple, n, total) - shift;
        if value > 0.0 {
            tensor.entries.insert(*tuple, value);
        }
    }
    Ok(tensor)
}
