//! Word embeddings from symmetric CP decomposition of shifted-PPMI
//! co-occurrence tensors.
//!
//! The pipeline runs corpus → [`corpus::Vocabulary`] →
//! [`cooccur::CoocStats`] → [`cooccur::SparseSymTensor`] → minibatches →
//! [`factor::FactorMatrix`] → [`embedding::Embedding`], and
//! [`eval`] scores the result with outlier detection (pairwise and
//! three-way compactness) and word similarity.

pub mod cli;
pub mod cooccur;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod factor;
pub mod minibatch;

pub use error::{Error, Result};
