//! Symmetric CP factorization of shifted-PPMI tensors.
//!
//! A single factor matrix `U` (one row per word) approximates an order-3
//! tensor as `m_ijk ≈ Σ_r u_ir u_jr u_kr` and an order-2 tensor as
//! `m_ij ≈ Σ_r u_ir u_jr`. Training minimizes the squared error over
//! minibatches with sparse Adam updates. CP-S fits the order-3 tensor alone,
//! JCP-S fits the order-2 and order-3 tensors jointly with one shared `U`.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cooccur::{build_ppmi, CoocStats, SparseSymTensor};
use crate::corpus::{IndexedSentence, WordId};
use crate::error::{Error, Result};
use crate::minibatch::{add_negatives, positives_from_chunk, Minibatch};

/// Random sub-stream for factor initialization.
pub const STREAM_INIT: u64 = 1;
/// Random sub-stream for negative sampling.
pub const STREAM_NEGATIVES: u64 = 2;

/// Dense `dim × rank` factor matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatrix {
    dim: usize,
    rank: usize,
    values: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        FactorMatrix {
            dim,
            rank,
            values: vec![0.0; dim * rank],
        }
    }

    pub fn from_vec(dim: usize, rank: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * rank {
            return Err(Error::Domain(format!(
                "{} values for a {dim}x{rank} factor matrix",
                values.len()
            )));
        }
        Ok(FactorMatrix { dim, rank, values })
    }

    /// Entries drawn i.i.d. from `N(0, std²)`.
    pub fn random_normal<R: rand::Rng + ?Sized>(
        dim: usize,
        rank: usize,
        std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let normal = Normal::new(0.0, std)
            .map_err(|e| Error::Config(format!("invalid init std {std}: {e}")))?;
        let values = (0..dim * rank).map(|_| normal.sample(rng)).collect();
        Ok(FactorMatrix { dim, rank, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: WordId) -> &[f64] {
        let i = i as usize;
        &self.values[i * self.rank..(i + 1) * self.rank]
    }

    pub fn row_mut(&mut self, i: WordId) -> &mut [f64] {
        let i = i as usize;
        &mut self.values[i * self.rank..(i + 1) * self.rank]
    }

    /// Returns a copy with rows reordered so that new row `i` is old row
    /// `perm[i]`.
    pub fn permute_rows(&self, perm: &[WordId]) -> Self {
        let mut out = FactorMatrix::zeros(self.dim, self.rank);
        for (i, &p) in perm.iter().enumerate() {
            out.row_mut(i as WordId).copy_from_slice(self.row(p));
        }
        out
    }
}

/// Symmetric CP prediction for a tuple of 2 or 3 ids, in any order.
///
/// The ids are sorted before multiplying so that every permutation of the
/// tuple produces the same floating point result.
pub fn predict(u: &FactorMatrix, ids: &[WordId]) -> f64 {
    match *ids {
        [i, j] => {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            u.row(a).iter().zip(u.row(b)).map(|(x, y)| x * y).sum()
        }
        [i, j, k] => {
            let mut s = [i, j, k];
            s.sort_unstable();
            let (a, b, c) = (u.row(s[0]), u.row(s[1]), u.row(s[2]));
            (0..u.rank).map(|r| a[r] * b[r] * c[r]).sum()
        }
        _ => panic!("predict needs 2 or 3 ids, got {}", ids.len()),
    }
}

/// Sum of squared residuals over the batch.
pub fn batch_loss(u: &FactorMatrix, batch: &Minibatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Domain("loss of an empty minibatch".into()));
    }
    Ok(batch
        .examples
        .iter()
        .map(|e| {
            let r = e.target - predict(u, e.indices.ids());
            r * r
        })
        .sum())
}

/// Gradient restricted to the rows it touches. Rows are kept in first-touch
/// order so accumulation is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct RowGradient {
    rank: usize,
    rows: Vec<WordId>,
    slot: HashMap<WordId, usize>,
    values: Vec<f64>,
}

impl RowGradient {
    pub fn new(rank: usize) -> Self {
        RowGradient {
            rank,
            rows: Vec::new(),
            slot: HashMap::new(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[WordId] {
        &self.rows
    }

    pub fn get(&self, row: WordId) -> Option<&[f64]> {
        self.slot
            .get(&row)
            .map(|&s| &self.values[s * self.rank..(s + 1) * self.rank])
    }

    pub fn iter(&self) -> impl Iterator<Item = (WordId, &[f64])> {
        self.rows
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.rank.max(1)))
    }

    fn row_mut(&mut self, row: WordId) -> &mut [f64] {
        let rank = self.rank;
        let s = match self.slot.get(&row) {
            Some(&s) => s,
            None => {
                self.rows.push(row);
                self.values.extend(std::iter::repeat_n(0.0, rank));
                self.slot.insert(row, self.rows.len() - 1);
                self.rows.len() - 1
            }
        };
        &mut self.values[s * rank..(s + 1) * rank]
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &RowGradient, weight: f64) {
        for (row, g) in other.iter() {
            for (a, b) in self.row_mut(row).iter_mut().zip(g) {
                *a += weight * b;
            }
        }
    }
}

/// Analytic gradient of [`batch_loss`] with respect to `U`.
pub fn batch_gradient(u: &FactorMatrix, batch: &Minibatch) -> Result<RowGradient> {
    if batch.is_empty() {
        return Err(Error::Domain("gradient of an empty minibatch".into()));
    }
    let rank = u.rank;
    let mut grad = RowGradient::new(rank);
    let mut buf = vec![0.0; rank];
    for e in &batch.examples {
        let ids = e.indices.ids();
        let residual = predict(u, ids) - e.target;
        if residual == 0.0 {
            continue;
        }
        let scale = 2.0 * residual;
        match *ids {
            [i, j] => {
                for (b, x) in buf.iter_mut().zip(u.row(j)) {
                    *b = scale * x;
                }
                add_into(grad.row_mut(i), &buf);
                for (b, x) in buf.iter_mut().zip(u.row(i)) {
                    *b = scale * x;
                }
                add_into(grad.row_mut(j), &buf);
            }
            [i, j, k] => {
                for (target, (p, q)) in [(i, (j, k)), (j, (i, k)), (k, (i, j))] {
                    let (rp, rq) = (u.row(p), u.row(q));
                    for r in 0..rank {
                        buf[r] = scale * rp[r] * rq[r];
                    }
                    add_into(grad.row_mut(target), &buf);
                }
            }
            _ => unreachable!("index tuples have order 2 or 3"),
        }
    }
    Ok(grad)
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for every entry of `U`; `t` counts calls to [`adam_step`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize, rank: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: vec![0.0; dim * rank],
            v: vec![0.0; dim * rank],
            t: 0,
        }
    }
}

/// Sparse Adam: only rows present in `grad` have their moments and values
/// updated, with bias correction from the global step counter.
///
/// The step is rejected, leaving `u` and `state` untouched, if the gradient
/// or any updated value is not finite.
pub fn adam_step(u: &mut FactorMatrix, grad: &RowGradient, state: &mut AdamState) -> Result<()> {
    if state.m.len() != u.values.len() || state.v.len() != u.values.len() {
        return Err(Error::Domain("Adam state does not match the factor matrix".into()));
    }
    if grad.rank != u.rank {
        return Err(Error::Domain("gradient rank does not match the factor matrix".into()));
    }
    if let Some((row, _)) = grad.iter().find(|(_, g)| g.iter().any(|x| !x.is_finite())) {
        return Err(Error::Numeric(format!("non-finite gradient in row {row}")));
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let t = state.t + 1;
    let bias1 = 1.0 - beta1.powf(t as f64);
    let bias2 = 1.0 - beta2.powf(t as f64);
    let rank = u.rank;

    // (flat index, m, v, value)
    let mut updates = Vec::with_capacity(grad.len() * rank);
    for (row, g) in grad.iter() {
        let base = row as usize * rank;
        for (r, &g) in g.iter().enumerate() {
            let idx = base + r;
            let m = beta1 * state.m[idx] + (1.0 - beta1) * g;
            let v = beta2 * state.v[idx] + (1.0 - beta2) * g * g;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            let value = u.values[idx] - lr * m_hat / (v_hat.sqrt() + eps);
            if !value.is_finite() {
                return Err(Error::Numeric(format!("update produced {value} in row {row}")));
            }
            updates.push((idx, m, v, value));
        }
    }
    for (idx, m, v, value) in updates {
        state.m[idx] = m;
        state.v[idx] = v;
        u.values[idx] = value;
    }
    state.t = t;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cps,
    Jcps,
}

impl Mode {
    /// Default PPMI shift: 3 for CP-S, none for JCP-S.
    pub fn default_shift(self) -> f64 {
        match self {
            Mode::Cps => 3.0,
            Mode::Jcps => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub rank: usize,
    pub shift: f64,
    pub window: usize,
    pub chunk_sentences: usize,
    pub negative_ratio: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_std: f64,
    pub adam: AdamConfig,
    /// Loss weights for the order-2 and order-3 terms of the joint loss.
    pub joint_weights: [f64; 2],
}

impl TrainConfig {
    pub fn new(mode: Mode) -> Self {
        TrainConfig {
            mode,
            rank: 300,
            shift: mode.default_shift(),
            window: 5,
            chunk_sentences: 1000,
            negative_ratio: 1.0,
            epochs: 1,
            seed: 0,
            init_std: 0.1,
            adam: AdamConfig::default(),
            joint_weights: [1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(self.rank >= 1, "rank must be at least 1")?;
        check(self.shift >= 0.0 && self.shift.is_finite(), "shift must be >= 0")?;
        check(self.window >= 2, "window must be at least 2")?;
        check(self.chunk_sentences >= 1, "chunk size must be at least 1")?;
        check(
            self.negative_ratio >= 0.0 && self.negative_ratio.is_finite(),
            "negative ratio must be >= 0",
        )?;
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check(self.init_std > 0.0 && self.init_std.is_finite(), "init std must be > 0")?;
        check(self.adam.lr > 0.0, "learning rate must be > 0")?;
        check(
            (0.0..1.0).contains(&self.adam.beta1) && (0.0..1.0).contains(&self.adam.beta2),
            "Adam betas must lie in [0, 1)",
        )?;
        check(self.adam.eps > 0.0, "Adam epsilon must be > 0")?;
        check(
            self.joint_weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
            "joint weights must be >= 0",
        )
    }

    fn weight(&self, order: usize) -> f64 {
        self.joint_weights[order - 2]
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn init_factor(&self, dim: usize) -> Result<FactorMatrix> {
        FactorMatrix::random_normal(dim, self.rank, self.init_std, &mut self.rng(STREAM_INIT))
    }
}

/// Streaming trainer over a fixed corpus. Each step consumes one chunk of
/// consecutive sentences; the run ends after `epochs` passes.
pub struct Trainer<'a> {
    corpus: &'a [IndexedSentence],
    config: TrainConfig,
    tensors: Vec<SparseSymTensor>,
    factor: FactorMatrix,
    adam: AdamState,
    rng: ChaCha8Rng,
    epoch: usize,
    next_chunk: usize,
}

impl<'a> Trainer<'a> {
    /// Counts co-occurrences over `corpus`, builds the shifted-PPMI tensors
    /// the mode needs and initializes `U`. `dim` is the vocabulary size.
    pub fn new(corpus: &'a [IndexedSentence], dim: usize, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if corpus.iter().all(|s| s.ids.is_empty()) {
            return Err(Error::Config("corpus contains no in-vocabulary tokens".into()));
        }
        if let Some(bad) = corpus.iter().flat_map(|s| &s.ids).find(|&&id| id as usize >= dim) {
            return Err(Error::Domain(format!("word id {bad} outside vocabulary of {dim}")));
        }
        let mut stats = CoocStats::with_dim(dim);
        for s in corpus {
            stats.add_sentence(&s.ids, config.window);
        }
        let orders: &[usize] = match config.mode {
            Mode::Cps => &[3],
            Mode::Jcps => &[2, 3],
        };
        let tensors = orders
            .iter()
            .map(|&o| build_ppmi(&stats, o, config.shift))
            .collect::<Result<Vec<_>>>()?;
        if tensors.iter().all(|t| t.is_empty()) {
            return Err(Error::Config(
                "shifted PPMI tensor has no positive entries; nothing to train".into(),
            ));
        }
        let factor = config.init_factor(dim)?;
        let adam = AdamState::new(dim, config.rank, config.adam);
        let rng = config.rng(STREAM_NEGATIVES);
        Ok(Trainer {
            corpus,
            config,
            tensors,
            factor,
            adam,
            rng,
            epoch: 0,
            next_chunk: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[SparseSymTensor] {
        &self.tensors
    }

    pub fn factor(&self) -> &FactorMatrix {
        &self.factor
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn into_factor(self) -> FactorMatrix {
        self.factor
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn chunk_count(&self) -> usize {
        self.corpus.len().div_ceil(self.config.chunk_sentences)
    }

    /// Builds the minibatches for the next chunk and applies one Adam step
    /// on the summed gradient. Returns the weighted loss before the update,
    /// or `None` when the chunk yields no training examples (no step taken).
    /// Returns `Ok(None)` as well once training is finished.
    pub fn step(&mut self) -> Result<Option<f64>> {
        if self.is_done() {
            return Ok(None);
        }
        let size = self.config.chunk_sentences;
        let start = self.next_chunk * size;
        let chunk = &self.corpus[start..(start + size).min(self.corpus.len())];

        let mut batches = Vec::with_capacity(self.tensors.len());
        for tensor in &self.tensors {
            let positives = positives_from_chunk(chunk, tensor, self.config.window);
            if positives.is_empty() {
                continue;
            }
            let batch = add_negatives(
                positives,
                tensor,
                self.config.negative_ratio,
                &mut self.rng,
                self.adam.t,
            )?;
            batches.push(batch);
        }

        self.next_chunk += 1;
        if self.next_chunk == self.chunk_count() {
            self.next_chunk = 0;
            self.epoch += 1;
        }
        if batches.is_empty() {
            return Ok(None);
        }
        let (loss, grad) = weighted_objective(&self.factor, &batches, &self.config)?;
        adam_step(&mut self.factor, &grad, &mut self.adam)?;
        Ok(Some(loss))
    }

    /// Runs until all epochs are consumed.
    pub fn run(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    /// Writes the full optimizer state; see [`Trainer::resume`].
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf)
            .map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    fn write_checkpoint(&self, out: &mut Vec<u8>) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        let fingerprint = serde_json::to_vec(&self.config).expect("config serializes");
        put_u64(out, fingerprint.len() as u64);
        out.write_all(&fingerprint)?;
        put_u64(out, self.factor.dim as u64);
        put_u64(out, self.factor.rank as u64);
        put_u64(out, self.adam.t);
        put_u64(out, self.epoch as u64);
        put_u64(out, self.next_chunk as u64);
        out.write_all(&self.rng.get_seed())?;
        put_u64(out, self.rng.get_stream());
        out.write_all(&self.rng.get_word_pos().to_le_bytes())?;
        for values in [&self.factor.values, &self.adam.m, &self.adam.v] {
            for x in values.iter() {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Rebuilds the trainer for the same corpus and configuration and
    /// restores the state saved by [`Trainer::save_checkpoint`]. Continuing
    /// from here reproduces an uninterrupted run bit for bit.
    pub fn resume(
        corpus: &'a [IndexedSentence],
        dim: usize,
        config: TrainConfig,
        path: impl AsRef<Path>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut trainer = Trainer::new(corpus, dim, config)?;
        trainer
            .read_checkpoint(&mut bytes.as_slice())
            .map_err(|msg| Error::parse(path, 0, msg))?;
        Ok(trainer)
    }

    fn read_checkpoint(&mut self, input: &mut &[u8]) -> std::result::Result<(), String> {
        let mut magic = [0u8; 8];
        read_exact(input, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err("not a checkpoint file (bad magic)".into());
        }
        let len = get_u64(input)? as usize;
        if len > input.len() {
            return Err("truncated checkpoint".into());
        }
        let (fingerprint, rest) = input.split_at(len);
        *input = rest;
        let saved: TrainConfig = serde_json::from_slice(fingerprint)
            .map_err(|e| format!("invalid configuration record: {e}"))?;
        if saved != self.config {
            return Err("checkpoint was written with a different configuration".into());
        }
        let dim = get_u64(input)? as usize;
        let rank = get_u64(input)? as usize;
        if dim != self.factor.dim || rank != self.factor.rank {
            return Err(format!(
                "checkpoint is {dim}x{rank}, expected {}x{}",
                self.factor.dim, self.factor.rank
            ));
        }
        let t = get_u64(input)?;
        let epoch = get_u64(input)? as usize;
        let next_chunk = get_u64(input)? as usize;
        let mut seed = [0u8; 32];
        read_exact(input, &mut seed)?;
        let stream = get_u64(input)?;
        let mut pos = [0u8; 16];
        read_exact(input, &mut pos)?;
        let n = dim * rank;
        let mut arrays = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for array in arrays.iter_mut() {
            for x in array.iter_mut() {
                let mut b = [0u8; 8];
                read_exact(input, &mut b)?;
                *x = f64::from_le_bytes(b);
            }
        }
        if !input.is_empty() {
            return Err("trailing bytes after checkpoint".into());
        }
        let [values, m, v] = arrays;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from_le_bytes(pos));
        self.factor.values = values;
        self.adam.m = m;
        self.adam.v = v;
        self.adam.t = t;
        self.epoch = epoch;
        self.next_chunk = next_chunk;
        self.rng = rng;
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"SYMCPCK1";

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn read_exact(input: &mut &[u8], buf: &mut [u8]) -> std::result::Result<(), String> {
    input
        .read_exact(buf)
        .map_err(|_| "truncated checkpoint".to_string())
}

fn get_u64(input: &mut &[u8]) -> std::result::Result<u64, String> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Weighted sum of batch losses and gradients, with weights taken from
/// `config.joint_weights` by batch order.
pub fn weighted_objective(
    u: &FactorMatrix,
    batches: &[Minibatch],
    config: &TrainConfig,
) -> Result<(f64, RowGradient)> {
    let mut loss = 0.0;
    let mut grad = RowGradient::new(u.rank);
    for batch in batches {
        let w = config.weight(batch.order);
        loss += w * batch_loss(u, batch)?;
        grad.add_scaled(&batch_gradient(u, batch)?, w);
    }
    Ok((loss, grad))
}

/// CP-S: symmetric CP decomposition of the order-3 shifted-PPMI tensor.
pub fn train_cps(
    corpus: &[IndexedSentence],
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<FactorMatrix> {
    if config.mode != Mode::Cps {
        return Err(Error::Config("train_cps needs mode = cps".into()));
    }
    let mut trainer = Trainer::new(corpus, vocab_size, config.clone())?;
    trainer.run()?;
    Ok(trainer.into_factor())
}

/// JCP-S: joint symmetric CP decomposition of the order-2 and order-3
/// shifted-PPMI tensors with one shared factor matrix.
pub fn train_jcps(
    corpus: &[IndexedSentence],
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<FactorMatrix> {
    if config.mode != Mode::Jcps {
        return Err(Error::Config("train_jcps needs mode = jcps".into()));
    }
    let mut trainer = Trainer::new(corpus, vocab_size, config.clone())?;
    trainer.run()?;
    Ok(trainer.into_factor())
}

/// Result of [`fit_tensors`]: the factor and the weighted loss before each
/// step.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub factor: FactorMatrix,
    pub losses: Vec<f64>,
}

/// Full-batch fit of one or more supersymmetric tensors sharing a factor
/// matrix, for `steps` Adam steps. Every stored entry is used at each step
/// and no negatives are drawn. Initialization and Adam settings come from
/// `config`.
pub fn fit_tensors(
    tensors: &[&SparseSymTensor],
    config: &TrainConfig,
    steps: usize,
) -> Result<FitResult> {
    config.validate()?;
    let dim = tensors
        .first()
        .ok_or_else(|| Error::Config("no tensors to fit".into()))?
        .dim();
    fit_tensors_from(tensors, config, steps, config.init_factor(dim)?)
}

/// [`fit_tensors`] starting from the given factor instead of a seeded
/// random one.
pub fn fit_tensors_from(
    tensors: &[&SparseSymTensor],
    config: &TrainConfig,
    steps: usize,
    init: FactorMatrix,
) -> Result<FitResult> {
    config.validate()?;
    let dim = init.dim();
    if init.rank() != config.rank {
        return Err(Error::Config(format!(
            "initial factor has rank {}, config says {}",
            init.rank(),
            config.rank
        )));
    }
    if tensors.is_empty() {
        return Err(Error::Config("no tensors to fit".into()));
    }
    if tensors.iter().any(|t| t.dim() != dim) {
        return Err(Error::Config("all tensors must share one dimension".into()));
    }
    let batches: Vec<Minibatch> = tensors
        .iter()
        .map(|t| Minibatch::from_tensor(t))
        .filter(|b| !b.is_empty())
        .collect();
    if batches.is_empty() {
        return Err(Error::Config("tensors have no entries".into()));
    }
    let mut factor = init;
    let mut adam = AdamState::new(dim, config.rank, config.adam);
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (loss, grad) = weighted_objective(&factor, &batches, config)?;
        losses.push(loss);
        adam_step(&mut factor, &grad, &mut adam)?;
    }
    Ok(FitResult { factor, losses })
}
