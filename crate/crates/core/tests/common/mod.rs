//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use symcp::corpus::IndexedSentence;

/// Random corpus over `dim` word ids with at most `max_tokens` tokens.
pub fn random_corpus<R: Rng>(rng: &mut R, dim: u32, max_tokens: usize) -> Vec<IndexedSentence> {
    let mut left = rng.random_range(1..=max_tokens);
    let mut out = Vec::new();
    while left > 0 {
        let len = rng.random_range(1..=left.min(12));
        left -= len;
        out.push(IndexedSentence::new(
            (0..len).map(|_| rng.random_range(0..dim)).collect(),
        ));
    }
    out
}

/// Windows of a sentence as slices: one per start position, or the whole
/// sentence when it is shorter than the window.
fn windows(ids: &[u32], window: usize) -> Vec<&[u32]> {
    if ids.is_empty() {
        vec![]
    } else if ids.len() <= window {
        vec![ids]
    } else {
        (0..=ids.len() - window).map(|s| &ids[s..s + window]).collect()
    }
}

/// Brute-force counts: unigram counts, and per-window sets of distinct
/// pairs and triples.
pub struct BruteCounts {
    pub unigram: BTreeMap<u32, f64>,
    pub pairs: BTreeMap<(u32, u32), f64>,
    pub triples: BTreeMap<(u32, u32, u32), f64>,
}

impl BruteCounts {
    pub fn new(corpus: &[IndexedSentence], window: usize) -> Self {
        let mut c = BruteCounts {
            unigram: BTreeMap::new(),
            pairs: BTreeMap::new(),
            triples: BTreeMap::new(),
        };
        for s in corpus {
            for &w in &s.ids {
                *c.unigram.entry(w).or_default() += 1.0;
            }
            for win in windows(&s.ids, window) {
                let mut p = BTreeSet::new();
                let mut t = BTreeSet::new();
                for a in 0..win.len() {
                    for b in 0..win.len() {
                        if win[a] < win[b] {
                            p.insert((win[a], win[b]));
                        }
                        for d in 0..win.len() {
                            if win[a] < win[b] && win[b] < win[d] {
                                t.insert((win[a], win[b], win[d]));
                            }
                        }
                    }
                }
                for k in p {
                    *c.pairs.entry(k).or_default() += 1.0;
                }
                for k in t {
                    *c.triples.entry(k).or_default() += 1.0;
                }
            }
        }
        c
    }

    fn totals(&self) -> (f64, f64, f64) {
        (
            self.unigram.values().sum(),
            self.pairs.values().sum(),
            self.triples.values().sum(),
        )
    }

    /// Shifted PPMI of a pair with `i < j`.
    pub fn ppmi2(&self, i: u32, j: u32, shift: f64) -> f64 {
        let (n, np, _) = self.totals();
        let Some(&c) = self.pairs.get(&(i, j)) else { return 0.0 };
        let pi = self.unigram[&i] / n;
        let pj = self.unigram[&j] / n;
        ((c / np / (pi * pj)).ln() - shift).max(0.0)
    }

    /// Shifted PPMI of a triple with `i < j < k`.
    pub fn ppmi3(&self, i: u32, j: u32, k: u32, shift: f64) -> f64 {
        let (n, _, nt) = self.totals();
        let Some(&c) = self.triples.get(&(i, j, k)) else { return 0.0 };
        let pi = self.unigram[&i] / n;
        let pj = self.unigram[&j] / n;
        let pk = self.unigram[&k] / n;
        ((c / nt / (pi * pj * pk)).ln() - shift).max(0.0)
    }
}

/// Row-major `dim x rank` matrix of standard normals.
pub fn normal_matrix<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Vec<f64> {
    (0..dim * rank).map(|_| StandardNormal.sample(rng)).collect()
}

/// `Σ_r Π_m u[ids[m], r]`, evaluated in the given id order.
pub fn cp_value(u: &[f64], rank: usize, ids: &[u32]) -> f64 {
    (0..rank)
        .map(|r| ids.iter().map(|&i| u[i as usize * rank + r]).product::<f64>())
        .sum()
}

/// Squared-error loss over `(ids, target)` examples.
pub fn cp_loss(u: &[f64], rank: usize, examples: &[(Vec<u32>, f64)]) -> f64 {
    examples
        .iter()
        .map(|(ids, y)| {
            let e = y - cp_value(u, rank, ids);
            e * e
        })
        .sum()
}

/// Central finite-difference gradient of [`cp_loss`].
pub fn fd_gradient(u: &[f64], rank: usize, examples: &[(Vec<u32>, f64)], h: f64) -> Vec<f64> {
    let mut work = u.to_vec();
    (0..u.len())
        .map(|p| {
            work[p] = u[p] + h;
            let plus = cp_loss(&work, rank, examples);
            work[p] = u[p] - h;
            let minus = cp_loss(&work, rank, examples);
            work[p] = u[p];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest elementwise relative error, with the denominator floored at
/// `1e-4` times the largest reference magnitude. Entries far below the
/// largest one are then compared at the finite-difference noise level
/// instead of relative to themselves.
pub fn max_relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = (1e-4 * scale).max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(reference)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Inverse mean distance of three vectors to their centroid (floored).
pub fn triple_sim_oracle(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let centroid: Vec<f64> = (0..a.len()).map(|r| (a[r] + b[r] + c[r]) / 3.0).collect();
    let dist = |v: &[f64]| {
        v.iter()
            .zip(&centroid)
            .map(|(x, m)| (x - m) * (x - m))
            .sum::<f64>()
            .sqrt()
    };
    let mean = (dist(a) + dist(b) + dist(c)) / 3.0;
    1.0 / mean.max(1e-9)
}

/// OD3 compactness of the list without position `skip`, enumerating 3-subsets
/// as bitmasks.
pub fn compactness3_oracle(vectors: &[Vec<f64>], skip: usize) -> f64 {
    let n = vectors.len();
    let unit: Vec<Vec<f64>> = vectors.iter().map(|v| unit(v)).collect();
    let mut sum = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() != 3 || mask & (1 << skip) != 0 {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        sum += triple_sim_oracle(&unit[members[0]], &unit[members[1]], &unit[members[2]]);
    }
    sum
}

/// OD2 compactness: mean pairwise cosine without position `skip`.
pub fn compactness2_oracle(vectors: &[Vec<f64>], skip: usize) -> f64 {
    let unit: Vec<Vec<f64>> = vectors.iter().map(|v| unit(v)).collect();
    let (mut sum, mut count) = (0.0, 0.0);
    for a in 0..unit.len() {
        for b in a + 1..unit.len() {
            if a != skip && b != skip {
                sum += unit[a].iter().zip(&unit[b]).map(|(x, y)| x * y).sum::<f64>();
                count += 1.0;
            }
        }
    }
    sum / count
}

/// Number of list entries strictly less compact than the outlier, plus
/// equal ones that precede it: its position in a stable ascending sort.
pub fn outlier_position_oracle(scores: &[f64], outlier: usize) -> usize {
    let c = scores[outlier];
    (0..scores.len())
        .filter(|&j| scores[j] < c || (scores[j] == c && j < outlier))
        .count()
}
