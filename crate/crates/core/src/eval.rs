//! Intrinsic evaluation: outlier detection with pairwise (OD2) or three-way
//! (OD3) compactness, and word similarity by Spearman rank correlation.
//!
//! For a list `L` of `n + 1` words, `c(w)` scores how compact `L \ {w}` is.
//! OD2 uses the mean pairwise cosine. OD3 sums, over unordered 3-subsets,
//! the inverse of the mean distance of the three vectors to their centroid.
//! The predicted outlier maximizes `c(w)`. The outlier position OP is the
//! zero-based rank of the true outlier when the words are sorted by
//! ascending `c(w)`, so `OP = n` is a correct detection and OPP averages
//! `OP / n`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::decode_utf8;
use crate::embedding::{dot, norm, Embedding};
use crate::error::{Error, Result};

/// Floor applied to the mean centroid distance in the three-way similarity.
pub const CENTROID_DISTANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutlierMode {
    Od2,
    Od3,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutlierCase {
    pub words: Vec<String>,
    pub outlier_index: usize,
}

impl OutlierCase {
    pub fn new(words: Vec<String>, outlier_index: usize) -> Result<Self> {
        if words.len() < 3 {
            return Err(Error::Domain(format!(
                "an outlier case needs at least 3 words, got {}",
                words.len()
            )));
        }
        if outlier_index >= words.len() {
            return Err(Error::Domain(format!(
                "outlier index {outlier_index} out of range for {} words",
                words.len()
            )));
        }
        let distinct: HashSet<&String> = words.iter().collect();
        if distinct.len() != words.len() {
            return Err(Error::Domain("outlier case words must be distinct".into()));
        }
        Ok(OutlierCase {
            words,
            outlier_index,
        })
    }

    /// Number of related words (`n`).
    pub fn n(&self) -> usize {
        self.words.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub cases_total: usize,
    pub cases_skipped: usize,
    pub accuracy: f64,
    pub opp: f64,
}

impl EvalReport {
    /// `key=value` lines for machine consumption.
    pub fn key_values(&self) -> String {
        format!(
            "accuracy={:.6}\nopp={:.6}\nskipped={}\ntotal={}\n",
            self.accuracy, self.opp, self.cases_skipped, self.cases_total
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "evaluated {} of {} cases ({} skipped for unknown words)",
            self.cases_total - self.cases_skipped,
            self.cases_total,
            self.cases_skipped
        )?;
        writeln!(f, "accuracy: {:.4}", self.accuracy)?;
        write!(f, "OPP:      {:.2}%", 100.0 * self.opp)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

/// Inverse mean Euclidean distance of three vectors to their centroid,
/// with the distance floored at [`CENTROID_DISTANCE_FLOOR`].
pub fn triple_similarity(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let mut spread = 0.0;
    for v in [a, b, c] {
        let d2: f64 = (0..v.len())
            .map(|r| {
                let centroid = (a[r] + b[r] + c[r]) / 3.0;
                (v[r] - centroid) * (v[r] - centroid)
            })
            .sum();
        spread += d2.sqrt();
    }
    1.0 / (spread / 3.0).max(CENTROID_DISTANCE_FLOOR)
}

/// Mean pairwise cosine of `vectors` without the one at `skip`.
pub fn pairwise_compactness(vectors: &[&[f64]], skip: usize) -> f64 {
    let rest: Vec<&[f64]> = without(vectors, skip);
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..rest.len() {
        for b in a + 1..rest.len() {
            sum += cosine(rest[a], rest[b]);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Sum of [`triple_similarity`] over unordered 3-subsets of `vectors`
/// without the one at `skip`.
pub fn triple_compactness(vectors: &[&[f64]], skip: usize) -> f64 {
    let rest: Vec<&[f64]> = without(vectors, skip);
    let mut sum = 0.0;
    for a in 0..rest.len() {
        for b in a + 1..rest.len() {
            for c in b + 1..rest.len() {
                sum += triple_similarity(rest[a], rest[b], rest[c]);
            }
        }
    }
    sum
}

fn without<'a>(vectors: &[&'a [f64]], skip: usize) -> Vec<&'a [f64]> {
    vectors
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, v)| *v)
        .collect()
}

/// `c(w)` for every position of the list.
pub fn compactness_scores(vectors: &[&[f64]], mode: OutlierMode) -> Vec<f64> {
    (0..vectors.len())
        .map(|i| match mode {
            OutlierMode::Od2 => pairwise_compactness(vectors, i),
            OutlierMode::Od3 => triple_compactness(vectors, i),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Detection {
    /// List position with the highest compactness (lowest position on ties).
    pub predicted: usize,
    /// Rank of the true outlier in the stable ascending compactness order.
    pub position: usize,
}

/// Prediction and outlier position from precomputed compactness scores.
pub fn rank_outlier(scores: &[f64], outlier_index: usize) -> Detection {
    let mut predicted = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[predicted] {
            predicted = i;
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let position = order
        .iter()
        .position(|&i| i == outlier_index)
        .expect("outlier index within list");
    Detection {
        predicted,
        position,
    }
}

fn unit_vectors(emb: &Embedding, words: &[String]) -> Result<Vec<Vec<f64>>> {
    words.iter().map(|w| emb.unit_vector(w)).collect()
}

fn position_of(list: &[String], w: &str) -> Result<usize> {
    list.iter()
        .position(|x| x == w)
        .ok_or_else(|| Error::Domain(format!("{w:?} is not in the list")))
}

/// OD2 compactness of `list` without `w`. Unknown words yield
/// [`Error::UnknownWord`], which callers treat as a skip.
pub fn compactness2(emb: &Embedding, list: &[String], w: &str) -> Result<f64> {
    if list.len() < 3 {
        return Err(Error::Domain("pairwise compactness needs at least 3 words".into()));
    }
    let skip = position_of(list, w)?;
    let vectors = unit_vectors(emb, list)?;
    let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
    Ok(pairwise_compactness(&refs, skip))
}

/// OD3 compactness of `list` without `w`.
pub fn compactness3(emb: &Embedding, list: &[String], w: &str) -> Result<f64> {
    if list.len() < 4 {
        return Err(Error::Domain("three-way compactness needs at least 3 words besides w".into()));
    }
    let skip = position_of(list, w)?;
    let vectors = unit_vectors(emb, list)?;
    let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
    Ok(triple_compactness(&refs, skip))
}

pub fn detect_outlier(emb: &Embedding, case: &OutlierCase, mode: OutlierMode) -> Result<Detection> {
    if mode == OutlierMode::Od3 && case.words.len() < 4 {
        return Err(Error::Domain("OD3 needs at least 4 words per case".into()));
    }
    let vectors = unit_vectors(emb, &case.words)?;
    let refs: Vec<&[f64]> = vectors.iter().map(Vec::as_slice).collect();
    Ok(rank_outlier(&compactness_scores(&refs, mode), case.outlier_index))
}

/// Accuracy and OPP over all cases whose words are all in the vocabulary.
pub fn run_outlier_eval(
    emb: &Embedding,
    cases: &[OutlierCase],
    mode: OutlierMode,
) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::Evaluation("no outlier cases".into()));
    }
    let mut skipped = 0;
    let mut hits = 0.0;
    let mut opp = 0.0;
    for case in cases {
        match detect_outlier(emb, case, mode) {
            Ok(d) => {
                let n = case.n();
                if d.position == n {
                    hits += 1.0;
                }
                opp += d.position as f64 / n as f64;
            }
            Err(Error::UnknownWord(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let used = cases.len() - skipped;
    if used == 0 {
        return Err(Error::Evaluation(format!(
            "all {} cases contain unknown words",
            cases.len()
        )));
    }
    Ok(EvalReport {
        cases_total: cases.len(),
        cases_skipped: skipped,
        accuracy: hits / used as f64,
        opp: opp / used as f64,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimPair {
    pub w1: String,
    pub w2: String,
    pub human_score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityReport {
    pub rho: f64,
    pub used: usize,
    pub skipped: usize,
}

impl SimilarityReport {
    pub fn key_values(&self) -> String {
        format!(
            "rho={:.6}\nused={}\nskipped={}\n",
            self.rho, self.used, self.skipped
        )
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of average ranks. `None` when
/// either side has no rank variance.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation between model cosines and human scores; pairs with
/// unknown words are skipped.
pub fn spearman(emb: &Embedding, pairs: &[SimPair]) -> Result<SimilarityReport> {
    let mut model = Vec::with_capacity(pairs.len());
    let mut human = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for p in pairs {
        match emb.cosine(&p.w1, &p.w2) {
            Ok(c) => {
                model.push(c);
                human.push(p.human_score);
            }
            Err(Error::UnknownWord(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if model.len() < 2 {
        return Err(Error::Evaluation(format!(
            "{} usable pairs; at least 2 are needed",
            model.len()
        )));
    }
    let rho = spearman_rho(&model, &human)
        .ok_or_else(|| Error::Evaluation("rank correlation undefined for constant scores".into()))?;
    Ok(SimilarityReport {
        rho,
        used: model.len(),
        skipped,
    })
}

/// Parses outlier cases: blank-line separated blocks, one word per line,
/// exactly one line per block prefixed `OUTLIER:`. Words are lowercased.
pub fn parse_outlier_cases(text: &str, source: &str) -> Result<Vec<OutlierCase>> {
    let mut cases = Vec::new();
    let mut words = Vec::new();
    let mut outlier = None;
    let mut block_start = 1;
    let finish = |words: &mut Vec<String>, outlier: &mut Option<usize>, line: usize| {
        let index = outlier
            .take()
            .ok_or_else(|| Error::parse(source, line, "block has no OUTLIER: line"))?;
        OutlierCase::new(std::mem::take(words), index)
            .map_err(|e| Error::parse(source, line, e.to_string()))
    };
    for (n, raw) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            if !words.is_empty() {
                cases.push(finish(&mut words, &mut outlier, block_start)?);
            }
            continue;
        }
        if words.is_empty() {
            block_start = lineno;
        }
        let word = match line.strip_prefix("OUTLIER:") {
            Some(w) => {
                if outlier.is_some() {
                    return Err(Error::parse(source, lineno, "second OUTLIER: line in block"));
                }
                outlier = Some(words.len());
                w.trim()
            }
            None => line,
        };
        if word.is_empty() {
            return Err(Error::parse(source, lineno, "empty word"));
        }
        words.push(word.to_lowercase());
    }
    if !words.is_empty() {
        cases.push(finish(&mut words, &mut outlier, block_start)?);
    }
    Ok(cases)
}

pub fn read_outlier_cases(path: impl AsRef<Path>) -> Result<Vec<OutlierCase>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_outlier_cases(decode_utf8(&bytes)?, &path.display().to_string())
}

/// Parses `w1<TAB>w2<TAB>score` lines. Words are lowercased.
pub fn parse_sim_pairs(text: &str, source: &str) -> Result<Vec<SimPair>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [w1, w2, score] = fields[..] else {
            return Err(Error::parse(source, lineno, "expected w1<TAB>w2<TAB>score"));
        };
        let human_score: f64 = score
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("invalid score {score:?}")))?;
        let (w1, w2) = (w1.to_lowercase(), w2.to_lowercase());
        if w1.is_empty() || w2.is_empty() || w1 == w2 {
            return Err(Error::parse(source, lineno, "pair needs two distinct words"));
        }
        pairs.push(SimPair {
            w1,
            w2,
            human_score,
        });
    }
    Ok(pairs)
}

pub fn read_sim_pairs(path: impl AsRef<Path>) -> Result<Vec<SimPair>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_sim_pairs(decode_utf8(&bytes)?, &path.display().to_string())
}
