//! Training minibatches: observed tensor entries from a chunk of consecutive
//! sentences, plus uniformly drawn zero entries as negative samples.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use crate::cooccur::{for_each_tuple, for_each_window, IndexTuple, SparseSymTensor};
use crate::corpus::{IndexedSentence, WordId};
use crate::error::{Error, Result};

/// Rejection attempts allowed per requested negative sample.
pub const NEGATIVE_RETRY_BUDGET: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingExample {
    pub indices: IndexTuple,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minibatch {
    pub order: usize,
    pub examples: Vec<TrainingExample>,
    pub step: u64,
}

impl Minibatch {
    /// Every stored entry of `tensor` in ascending tuple order.
    pub fn from_tensor(tensor: &SparseSymTensor) -> Self {
        Minibatch {
            order: tensor.order(),
            examples: tensor
                .sorted_entries()
                .into_iter()
                .map(|(indices, target)| TrainingExample { indices, target })
                .collect(),
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// One example per distinct canonical tuple realized in the chunk's windows
/// that has a nonzero value in `tensor`, in first-occurrence order.
pub fn positives_from_chunk(
    chunk: &[IndexedSentence],
    tensor: &SparseSymTensor,
    window: usize,
) -> Vec<TrainingExample> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for sentence in chunk {
        for_each_window(&sentence.ids, window, |types| {
            for_each_tuple(types, tensor.order(), |t| {
                if seen.insert(t) {
                    let target = tensor.lookup(&t);
                    if target > 0.0 {
                        out.push(TrainingExample { indices: t, target });
                    }
                }
            });
        });
    }
    out
}

/// Appends `ceil(ratio * |positives|)` zero-target examples drawn uniformly
/// from distinct-id canonical tuples absent from `tensor`, without
/// repetition inside the batch.
pub fn add_negatives<R: Rng + ?Sized>(
    positives: Vec<TrainingExample>,
    tensor: &SparseSymTensor,
    ratio: f64,
    rng: &mut R,
    step: u64,
) -> Result<Minibatch> {
    let order = tensor.order();
    let dim = tensor.dim();
    if ratio < 0.0 || !ratio.is_finite() {
        return Err(Error::Config(format!("negative ratio must be >= 0, got {ratio}")));
    }
    if dim < order {
        return Err(Error::Domain(format!(
            "cannot draw order-{order} tuples from {dim} ids"
        )));
    }
    let needed = (ratio * positives.len() as f64).ceil() as usize;
    let zero_tuples = tensor.distinct_tuple_count().saturating_sub(tensor.nnz() as u128);
    if needed as u128 > zero_tuples {
        return Err(Error::Sampling(format!(
            "{needed} negatives requested but only {zero_tuples} zero tuples exist"
        )));
    }

    let mut examples = positives;
    examples.reserve(needed);
    let mut drawn = HashSet::with_capacity(needed);
    let mut ids: Vec<WordId> = Vec::with_capacity(order);
    for _ in 0..needed {
        let mut accepted = false;
        for _ in 0..NEGATIVE_RETRY_BUDGET {
            ids.clear();
            ids.extend(index::sample(rng, dim, order).into_iter().map(|i| i as WordId));
            let t = IndexTuple::from_ids(&ids);
            if !tensor.contains(&t) && drawn.insert(t) {
                examples.push(TrainingExample {
                    indices: t,
                    target: 0.0,
                });
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Sampling(format!(
                "no free tuple found after {NEGATIVE_RETRY_BUDGET} attempts"
            )));
        }
    }
    Ok(Minibatch {
        order,
        examples,
        step,
    })
}
