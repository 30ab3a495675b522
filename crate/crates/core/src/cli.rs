//! Command line front end. Every subcommand that produces an artifact also
//! writes a JSON run manifest recording its arguments, resolved flags and
//! input digests; `replay` re-executes a manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cooccur::{build_ppmi, count_cooccurrences};
use crate::corpus::{self, index_sentences, read_corpus, read_stopwords, Vocabulary};
use crate::embedding::{random_embedding, Composition, Embedding};
use crate::error::Error;
use crate::eval::{read_outlier_cases, read_sim_pairs, run_outlier_eval, spearman, OutlierMode};
use crate::factor::{AdamConfig, Mode, TrainConfig, Trainer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "symcp", version, about = "Word embeddings by symmetric CP decomposition of PPMI tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a frequency-filtered vocabulary from a corpus (one sentence per line).
    Vocab(VocabArgs),
    /// Write a shifted-PPMI matrix or tensor in the sparse text format.
    Ppmi(PpmiArgs),
    /// Train CP-S or JCP-S embeddings.
    Train(TrainArgs),
    /// Write a random Gaussian baseline embedding (variance 1/2).
    Random(RandomArgs),
    /// Outlier detection accuracy and OPP (OD2 or OD3).
    EvalOutlier(EvalOutlierArgs),
    /// Spearman correlation against a word similarity dataset.
    EvalWordsim(EvalWordsimArgs),
    /// Nearest neighbors of a word by cosine similarity.
    Nn(NnArgs),
    /// Nearest neighbors of the product or sum of two word vectors.
    Compose(ComposeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
struct VocabArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Newline-delimited stopword file.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PpmiArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.0)]
    shift: f64,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Cps,
    Jcps,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, value_enum, default_value = "cps")]
    mode: ModeArg,
    #[arg(long, default_value_t = 300)]
    rank: usize,
    /// PPMI shift; defaults to 3 for cps and 0 for jcps.
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Sentences per minibatch chunk.
    #[arg(long, default_value_t = 1000)]
    chunk: usize,
    /// Negative samples per positive example.
    #[arg(long, default_value_t = 1.0)]
    neg_ratio: f64,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.1)]
    init_std: f64,
    /// Weight of the order-2 loss in jcps mode.
    #[arg(long, default_value_t = 1.0)]
    weight2: f64,
    /// Weight of the order-3 loss in jcps mode.
    #[arg(long, default_value_t = 1.0)]
    weight3: f64,
    /// Continue from a checkpoint written by an earlier run with the same flags.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also write the checkpoint every N optimizer steps.
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Stop after this many optimizer steps in this invocation; resume later
    /// from the checkpoint.
    #[arg(long)]
    stop_after: Option<u64>,
    /// Embedding output; the checkpoint goes to <out>.ckpt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct RandomArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OdArg {
    Od2,
    Od3,
}

#[derive(Debug, Args, Serialize)]
struct EvalOutlierArgs {
    #[arg(long)]
    embedding: PathBuf,
    /// Blank-line separated blocks; the outlier line is prefixed `OUTLIER:`.
    #[arg(long)]
    cases: PathBuf,
    #[arg(long, value_enum, default_value = "od2")]
    mode: OdArg,
    /// Write a run manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvalWordsimArgs {
    #[arg(long)]
    embedding: PathBuf,
    /// Lines of `w1<TAB>w2<TAB>score`.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct NnArgs {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Keep the query word in the results.
    #[arg(long)]
    include_query: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OpArg {
    Mul,
    Add,
}

#[derive(Debug, Args, Serialize)]
struct ComposeArgs {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    w1: String,
    #[arg(long)]
    w2: String,
    #[arg(long, value_enum, default_value = "mul")]
    op: OpArg,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Keep the two source words in the results.
    #[arg(long)]
    include_sources: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Command line after the program name.
    pub args: Vec<String>,
    pub flags: serde_json::Value,
    /// Input path → SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()).into())
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::Config(_) => EXIT_USAGE,
                Error::Numeric(_) | Error::Sampling(_) => EXIT_NUMERIC,
                _ => EXIT_DATA,
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let rest = args.get(1..).map(<[String]>::to_vec).unwrap_or_default();
    match dispatch(cli.command, rest) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, args: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Vocab(a) => cmd_vocab(a, args),
        Command::Ppmi(a) => cmd_ppmi(a, args),
        Command::Train(a) => cmd_train(a, args),
        Command::Random(a) => cmd_random(a, args),
        Command::EvalOutlier(a) => cmd_eval_outlier(a, args),
        Command::EvalWordsim(a) => cmd_eval_wordsim(a, args),
        Command::Nn(a) => cmd_nn(a, args),
        Command::Compose(a) => cmd_compose(a, args),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_manifest<T: Serialize>(
    target: &Path,
    subcommand: &str,
    args: &[String],
    flags: &T,
    inputs: &[&Path],
    seed: Option<u64>,
    outputs: &[&Path],
) -> Result<(), CliError> {
    let mut digests = BTreeMap::new();
    for p in inputs {
        digests.insert(p.display().to_string(), digest(p)?);
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        args: args.to_vec(),
        flags: serde_json::to_value(flags).expect("flags serialize"),
        inputs: digests,
        seed,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(target, text + "\n").map_err(|e| Error::io(target, e))?;
    Ok(())
}

fn cmd_vocab(a: VocabArgs, args: Vec<String>) -> Result<(), CliError> {
    let sentences = read_corpus(&a.corpus)?;
    let stopwords = match &a.stopwords {
        Some(p) => read_stopwords(p)?,
        None => HashSet::new(),
    };
    let vocab = corpus::build_vocab(&sentences, a.min_count, &stopwords)?;
    vocab.save(&a.out)?;
    eprintln!("{} words kept from {} sentences", vocab.len(), sentences.len());
    let mut inputs = vec![a.corpus.as_path()];
    inputs.extend(a.stopwords.as_deref());
    write_manifest(
        &with_suffix(&a.out, ".manifest.json"),
        "vocab",
        &args,
        &a,
        &inputs,
        None,
        &[&a.out],
    )
}

fn load_indexed(corpus_path: &Path, vocab_path: &Path) -> Result<(Vocabulary, Vec<corpus::IndexedSentence>), CliError> {
    let vocab = Vocabulary::load(vocab_path)?;
    if vocab.is_empty() {
        return Err(Error::Config(format!("{} is an empty vocabulary", vocab_path.display())).into());
    }
    let sentences = read_corpus(corpus_path)?;
    let indexed = index_sentences(&sentences, &vocab);
    Ok((vocab, indexed))
}

fn cmd_ppmi(a: PpmiArgs, args: Vec<String>) -> Result<(), CliError> {
    if a.window < 2 {
        return Err(CliError::Usage("--window must be at least 2".into()));
    }
    let (vocab, indexed) = load_indexed(&a.corpus, &a.vocab)?;
    let mut stats = crate::cooccur::CoocStats::with_dim(vocab.len());
    stats.merge(count_cooccurrences(&indexed, a.window));
    let tensor = build_ppmi(&stats, a.order, a.shift)?;
    tensor.save(&a.out)?;
    eprintln!("order-{} tensor with {} stored entries", tensor.order(), tensor.nnz());
    write_manifest(
        &with_suffix(&a.out, ".manifest.json"),
        "ppmi",
        &args,
        &a,
        &[&a.corpus, &a.vocab],
        None,
        &[&a.out],
    )
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    let mode = match a.mode {
        ModeArg::Cps => Mode::Cps,
        ModeArg::Jcps => Mode::Jcps,
    };
    TrainConfig {
        mode,
        rank: a.rank,
        shift: a.shift.unwrap_or(mode.default_shift()),
        window: a.window,
        chunk_sentences: a.chunk,
        negative_ratio: a.neg_ratio,
        epochs: a.epochs,
        seed: a.seed,
        init_std: a.init_std,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        joint_weights: [a.weight2, a.weight3],
    }
}

fn cmd_train(a: TrainArgs, args: Vec<String>) -> Result<(), CliError> {
    let config = train_config(&a);
    config.validate()?;
    if config.mode == Mode::Jcps && config.shift != 0.0 {
        eprintln!(
            "warning: shift {} with jcps; joint training has worked best on unshifted PPMI (shift 0)",
            config.shift
        );
    }
    let (vocab, indexed) = load_indexed(&a.corpus, &a.vocab)?;
    let started = Instant::now();
    let mut trainer = match &a.resume {
        Some(ckpt) => Trainer::resume(&indexed, vocab.len(), config.clone(), ckpt)?,
        None => Trainer::new(&indexed, vocab.len(), config.clone())?,
    };
    let nnz: Vec<String> = trainer
        .tensors()
        .iter()
        .map(|t| format!("order {}: {} entries", t.order(), t.nnz()))
        .collect();
    eprintln!(
        "{} words, {} sentences; {} ({:.1}s)",
        vocab.len(),
        indexed.len(),
        nnz.join(", "),
        started.elapsed().as_secs_f64()
    );

    let ckpt_path = with_suffix(&a.out, ".ckpt");
    let mut epoch = trainer.epoch();
    let (mut loss_sum, mut steps, mut taken) = (0.0, 0u64, 0u64);
    while !trainer.is_done() {
        if a.stop_after.is_some_and(|n| taken >= n) {
            eprintln!("stopped after {taken} steps; resume from {}", ckpt_path.display());
            break;
        }
        if let Some(loss) = trainer.step()? {
            loss_sum += loss;
            steps += 1;
            taken += 1;
            if a.checkpoint_every.is_some_and(|n| n > 0 && trainer.adam().t % n == 0) {
                trainer.save_checkpoint(&ckpt_path)?;
            }
        }
        if trainer.epoch() != epoch {
            epoch = trainer.epoch();
            eprintln!(
                "epoch {epoch}/{}: {steps} steps, mean batch loss {:.6e} ({:.1}s)",
                config.epochs,
                if steps > 0 { loss_sum / steps as f64 } else { 0.0 },
                started.elapsed().as_secs_f64()
            );
            loss_sum = 0.0;
            steps = 0;
        }
    }
    trainer.save_checkpoint(&ckpt_path)?;
    let embedding = Embedding::from_factor(vocab, trainer.factor())?;
    embedding.save(&a.out)?;

    let mut inputs = vec![a.corpus.as_path(), a.vocab.as_path()];
    inputs.extend(a.resume.as_deref());
    write_manifest(
        &with_suffix(&a.out, ".manifest.json"),
        "train",
        &args,
        &config,
        &inputs,
        Some(config.seed),
        &[&a.out, &ckpt_path],
    )
}

fn cmd_random(a: RandomArgs, args: Vec<String>) -> Result<(), CliError> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let emb = random_embedding(vocab, a.dim, a.seed)?;
    emb.save(&a.out)?;
    write_manifest(
        &with_suffix(&a.out, ".manifest.json"),
        "random",
        &args,
        &a,
        &[&a.vocab],
        Some(a.seed),
        &[&a.out],
    )
}

fn load_normalized(path: &Path) -> Result<Embedding, CliError> {
    Ok(Embedding::load(path)?.normalize()?)
}

fn cmd_eval_outlier(a: EvalOutlierArgs, args: Vec<String>) -> Result<(), CliError> {
    let emb = load_normalized(&a.embedding)?;
    let cases = read_outlier_cases(&a.cases)?;
    let mode = match a.mode {
        OdArg::Od2 => OutlierMode::Od2,
        OdArg::Od3 => OutlierMode::Od3,
    };
    let report = run_outlier_eval(&emb, &cases, mode)?;
    println!("{report}");
    print!("{}", report.key_values());
    if let Some(m) = &a.manifest {
        write_manifest(m, "eval-outlier", &args, &a, &[&a.embedding, &a.cases], None, &[])?;
    }
    Ok(())
}

fn cmd_eval_wordsim(a: EvalWordsimArgs, args: Vec<String>) -> Result<(), CliError> {
    let emb = load_normalized(&a.embedding)?;
    let pairs = read_sim_pairs(&a.pairs)?;
    let report = spearman(&emb, &pairs)?;
    println!(
        "Spearman rho {:.4} over {} pairs ({} skipped for unknown words)",
        report.rho, report.used, report.skipped
    );
    print!("{}", report.key_values());
    if let Some(m) = &a.manifest {
        write_manifest(m, "eval-wordsim", &args, &a, &[&a.embedding, &a.pairs], None, &[])?;
    }
    Ok(())
}

fn print_neighbors(neighbors: &[(String, f64)]) {
    for (w, s) in neighbors {
        println!("{w}\t{s:.6}");
    }
}

fn cmd_nn(a: NnArgs, args: Vec<String>) -> Result<(), CliError> {
    let emb = load_normalized(&a.embedding)?;
    let query = emb.vector(&a.word)?.to_vec();
    let mut exclude = HashSet::new();
    if !a.include_query {
        exclude.insert(a.word.clone());
    }
    print_neighbors(&emb.nearest_neighbors(&query, a.k, &exclude)?);
    if let Some(m) = &a.manifest {
        write_manifest(m, "nn", &args, &a, &[&a.embedding], None, &[])?;
    }
    Ok(())
}

fn cmd_compose(a: ComposeArgs, args: Vec<String>) -> Result<(), CliError> {
    let emb = load_normalized(&a.embedding)?;
    let op = match a.op {
        OpArg::Mul => Composition::Multiplicative,
        OpArg::Add => Composition::Additive,
    };
    let query = emb.compose(&a.w1, &a.w2, op)?;
    let mut exclude = HashSet::new();
    if !a.include_sources {
        exclude.insert(a.w1.clone());
        exclude.insert(a.w2.clone());
    }
    print_neighbors(&emb.nearest_neighbors(&query, a.k, &exclude)?);
    if let Some(m) = &a.manifest {
        write_manifest(m, "compose", &args, &a, &[&a.embedding], None, &[])?;
    }
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<(), CliError> {
    let manifest = RunManifest::load(&a.manifest)?;
    for (path, expected) in &manifest.inputs {
        let actual = digest(Path::new(path))?;
        if &actual != expected {
            return Err(Error::Domain(format!(
                "input {path} changed since the manifest was written"
            ))
            .into());
        }
    }
    if manifest.subcommand == "replay" || manifest.args.first().map(String::as_str) == Some("replay") {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    let mut argv = vec![manifest.tool.clone()];
    argv.extend(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
    dispatch(cli.command, manifest.args)
}
