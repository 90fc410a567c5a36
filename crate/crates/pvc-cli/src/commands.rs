//! The four batch commands: train, baseline, eval, and synth.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pvc_core::baselines::{cooccurrence_scores, dqe_scores, DqeConfig};
use pvc_core::corpus::{
    build_corpus, parse_messages, split_lexicon, FeatureId, IndexedCorpus, Lexicon, NgramOrders,
};
use pvc_core::eval::{filtered_population, lift, roc_curve, top_words, EvalError};
use pvc_core::solver::{fit, SolverConfig, SolverError};
use pvc_core::synth::{generate, SynthConfig, SynthError};

use crate::formats::{self, ScoreRow, KIND_BULLY, KIND_LIFT, KIND_VICTIM, KIND_WORD};
use crate::manifest::RunManifest;
use crate::{runtime_error, usage_error, CliResult};

/// Weakly supervised scoring of harassment participants and vocabulary from
/// directed message corpora.
#[derive(Debug, Parser)]
#[command(name = "pvc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit bully, victim, and word indicator scores from a corpus and seeds.
    Train(TrainArgs),
    /// Score words with a comparison method instead of the full model.
    Baseline(BaselineArgs),
    /// Evaluate a score table against held-out target words.
    Eval(EvalArgs),
    /// Generate a synthetic corpus with planted ground truth.
    Synth(SynthArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Baseline(args) => cmd_baseline(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Message file: one id<TAB>sender<TAB>receiver<TAB>text record per line.
    #[arg(long)]
    pub messages: PathBuf,
    /// Seed lexicon: one indicator phrase per line.
    #[arg(long)]
    pub seeds: PathBuf,
    /// Comma-separated n-gram orders to extract.
    #[arg(long = "ngram-orders", value_delimiter = ',', default_value = "1,2")]
    pub ngram_orders: Vec<usize>,
    /// Drop features occurring in fewer than this many messages.
    #[arg(long = "min-df", default_value_t = 1)]
    pub min_df: usize,
    /// Ridge regularization weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
    /// Convergence threshold on the largest per-coordinate change per
    /// iteration (relative to the largest score, floored at 1).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Directory for scores.tsv, trace.tsv, and manifest.json.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.lambda.is_nan() || args.lambda <= 0.0 {
        return Err(usage_error(anyhow!("--lambda must be positive")));
    }
    if args.max_iters < 1 {
        return Err(usage_error(anyhow!("--max-iters must be at least 1")));
    }
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(usage_error(anyhow!("--tol must be nonnegative")));
    }
    let loaded = load_corpus_and_seeds(
        &args.messages,
        &args.seeds,
        &args.ngram_orders,
        args.min_df,
        false,
    )?;

    let config = SolverConfig {
        lambda: args.lambda,
        max_iters: args.max_iters,
        tol: args.tol,
    };
    let (params, trace) = fit(&loaded.corpus, &loaded.seeds, &config).map_err(map_solver_error)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(usage_error)?;

    let corpus = &loaded.corpus;
    let mut rows = Vec::with_capacity(2 * corpus.n_users() + corpus.n_features());
    for (u, name) in corpus.users().iter().enumerate() {
        rows.push(ScoreRow::new(KIND_BULLY, name.clone(), params.b[u]));
        rows.push(ScoreRow::new(KIND_VICTIM, name.clone(), params.v[u]));
    }
    for (k, phrase) in corpus.phrases().iter().enumerate() {
        rows.push(ScoreRow::new(KIND_WORD, phrase.clone(), params.w[k]));
    }
    let scores_path = args.out_dir.join("scores.tsv");
    formats::write_score_table(&scores_path, &rows).map_err(runtime_error)?;
    let trace_path = args.out_dir.join("trace.tsv");
    formats::write_trace(&trace_path, &trace).map_err(runtime_error)?;

    let mut manifest = RunManifest::new("train");
    manifest
        .parameter("messages", args.messages.display())
        .parameter("seeds", args.seeds.display())
        .parameter("ngram_orders", join_orders(&args.ngram_orders))
        .parameter("min_df", args.min_df)
        .parameter("lambda", args.lambda)
        .parameter("max_iters", args.max_iters)
        .parameter("tol", args.tol)
        .parameter("out_dir", args.out_dir.display());
    write_manifest(
        manifest,
        &[&args.messages, &args.seeds],
        &[&scores_path, &trace_path],
        &args.out_dir,
        started,
    )?;

    println!(
        "train: {} users, {} features, {} interactions; {} iterations (converged: {}), objective {}",
        corpus.n_users(),
        corpus.n_features(),
        corpus.n_interactions(),
        trace.iterations(),
        trace.converged,
        trace.final_objective()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    /// Score 1 for words sharing a message with any seed, else 0.
    Cooccur,
    /// Dynamic query expansion: iterated document-frequency scoring.
    Dqe,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    #[arg(long)]
    pub messages: PathBuf,
    #[arg(long)]
    pub seeds: PathBuf,
    #[arg(long = "ngram-orders", value_delimiter = ',', default_value = "1,2")]
    pub ngram_orders: Vec<usize>,
    #[arg(long = "min-df", default_value_t = 1)]
    pub min_df: usize,
    /// Keyword budget per DQE iteration.
    #[arg(long = "dqe-k", default_value_t = 100)]
    pub dqe_k: usize,
    #[arg(long = "dqe-max-iters", default_value_t = 10)]
    pub dqe_max_iters: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn cmd_baseline(args: &BaselineArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.dqe_k < 1 {
        return Err(usage_error(anyhow!("--dqe-k must be at least 1")));
    }
    if args.dqe_max_iters < 1 {
        return Err(usage_error(anyhow!("--dqe-max-iters must be at least 1")));
    }
    // DQE has a defined degenerate outcome when no seed occurs in the
    // corpus; co-occurrence does not, so only DQE proceeds in that case.
    let allow_no_seed_hits = args.method == BaselineMethod::Dqe;
    let loaded = load_corpus_and_seeds(
        &args.messages,
        &args.seeds,
        &args.ngram_orders,
        args.min_df,
        allow_no_seed_hits,
    )?;
    let corpus = &loaded.corpus;

    let (scores, summary) = match args.method {
        BaselineMethod::Cooccur => {
            let scores = cooccurrence_scores(corpus, &loaded.seeds);
            let hits = scores.iter().filter(|&&s| s == 1.0).count();
            (scores, format!("{hits} of {} words co-occur with seeds", corpus.n_features()))
        }
        BaselineMethod::Dqe => {
            let config = DqeConfig {
                k: args.dqe_k,
                max_iters: args.dqe_max_iters,
            };
            let outcome = dqe_scores(corpus, &loaded.seeds, &config);
            if outcome.degenerate {
                eprintln!(
                    "warning: degenerate result: no message matched the keyword set; all scores are zero"
                );
            }
            let summary = format!(
                "{} keywords after {} rounds (stabilized: {})",
                outcome.keywords.len(),
                outcome.iterations,
                outcome.stabilized
            );
            (outcome.scores, summary)
        }
    };

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(usage_error)?;
    let rows: Vec<ScoreRow> = corpus
        .phrases()
        .iter()
        .zip(&scores)
        .map(|(phrase, &s)| ScoreRow::new(KIND_WORD, phrase.clone(), s))
        .collect();
    let scores_path = args.out_dir.join("scores.tsv");
    formats::write_score_table(&scores_path, &rows).map_err(runtime_error)?;

    let method_name = match args.method {
        BaselineMethod::Cooccur => "cooccur",
        BaselineMethod::Dqe => "dqe",
    };
    let mut manifest = RunManifest::new("baseline");
    manifest
        .parameter("method", method_name)
        .parameter("messages", args.messages.display())
        .parameter("seeds", args.seeds.display())
        .parameter("ngram_orders", join_orders(&args.ngram_orders))
        .parameter("min_df", args.min_df)
        .parameter("dqe_k", args.dqe_k)
        .parameter("dqe_max_iters", args.dqe_max_iters)
        .parameter("out_dir", args.out_dir.display());
    write_manifest(
        manifest,
        &[&args.messages, &args.seeds],
        &[&scores_path],
        &args.out_dir,
        started,
    )?;

    println!("baseline ({method_name}): {summary}");
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Score table produced by train or baseline.
    #[arg(long)]
    pub scores: PathBuf,
    /// Held-out target lexicon: one phrase per line.
    #[arg(long)]
    pub targets: PathBuf,
    /// Seed lexicon to exclude from the evaluated population.
    #[arg(long)]
    pub seeds: PathBuf,
    /// Number of top-ranked words to report.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.k < 1 {
        return Err(usage_error(anyhow!("--k must be at least 1")));
    }
    let rows = formats::read_score_table(&args.scores).map_err(usage_error)?;
    let mut names: Vec<String> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.kind == KIND_WORD) {
        names.push(row.name.clone());
        scores.push(row.score);
    }
    if names.is_empty() {
        return Err(usage_error(anyhow!(
            "no word rows in {}",
            args.scores.display()
        )));
    }
    for (i, name) in names.iter().enumerate() {
        if index.insert(name, i).is_some() {
            return Err(usage_error(anyhow!(
                "duplicate word {name:?} in {}",
                args.scores.display()
            )));
        }
    }

    let target_lex = read_lexicon(&args.targets)?;
    let seed_lex = read_lexicon(&args.seeds)?;
    if target_lex.is_empty() {
        return Err(usage_error(anyhow!(
            "target lexicon {} is empty",
            args.targets.display()
        )));
    }

    let mut targets: BTreeSet<FeatureId> = BTreeSet::new();
    for phrase in target_lex.iter() {
        match index.get(phrase) {
            Some(&i) => {
                targets.insert(FeatureId(i as u32));
            }
            None => eprintln!("warning: target phrase {phrase:?} is not among the scored words"),
        }
    }
    if targets.is_empty() {
        return Err(usage_error(anyhow!(
            "none of the target phrases appear among the scored words"
        )));
    }
    let exclude: BTreeSet<FeatureId> = seed_lex
        .iter()
        .filter_map(|phrase| index.get(phrase).map(|&i| FeatureId(i as u32)))
        .collect();

    let roc = roc_curve(&scores, &targets, &exclude).map_err(|e| usage_error(anyhow!(e)))?;
    let top = top_words(&scores, &names, args.k, &exclude);

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(usage_error)?;
    let roc_path = args.out_dir.join("roc.tsv");
    formats::write_roc(&roc_path, &roc).map_err(runtime_error)?;
    let top_path = args.out_dir.join("top_words.tsv");
    let top_rows: Vec<ScoreRow> = top
        .into_iter()
        .map(|(name, score)| ScoreRow::new(KIND_WORD, name, score))
        .collect();
    formats::write_score_table(&top_path, &top_rows).map_err(runtime_error)?;

    // Seeds are supervision, not discoveries: lift is computed over the
    // seed-free population. Degenerate (constant) scores end the run here,
    // after the ROC and top-word artifacts are already on disk.
    let (population, remapped_targets) = filtered_population(&scores, &targets, &exclude);
    let lift_value = lift(&population, &remapped_targets).map_err(|e| match e {
        EvalError::DegenerateScores => runtime_error(anyhow!(e)),
        other => usage_error(anyhow!(other)),
    })?;
    let lift_path = args.out_dir.join("lift.tsv");
    formats::write_score_table(
        &lift_path,
        &[ScoreRow::new(KIND_LIFT, "targets", lift_value)],
    )
    .map_err(runtime_error)?;

    let mut manifest = RunManifest::new("eval");
    manifest
        .parameter("scores", args.scores.display())
        .parameter("targets", args.targets.display())
        .parameter("seeds", args.seeds.display())
        .parameter("k", args.k)
        .parameter("out_dir", args.out_dir.display());
    write_manifest(
        manifest,
        &[&args.scores, &args.targets, &args.seeds],
        &[&roc_path, &top_path, &lift_path],
        &args.out_dir,
        started,
    )?;

    println!("eval: auc {}, lift {}", roc.auc, lift_value);
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long = "n-users", default_value_t = 20)]
    pub n_users: usize,
    #[arg(long = "n-words", default_value_t = 50)]
    pub n_words: usize,
    #[arg(long = "n-bully-words", default_value_t = 10)]
    pub n_bully_words: usize,
    #[arg(long = "n-messages", default_value_t = 500)]
    pub n_messages: usize,
    /// Probability that a user is planted as a bully (independently, as a
    /// victim). Strictly between 0 and 1.
    #[arg(long = "bully-user-fraction", default_value_t = 0.2)]
    pub bully_user_fraction: f64,
    /// Perturbation applied to planted scores and slot probabilities.
    #[arg(long = "score-noise", default_value_t = 0.05)]
    pub score_noise: f64,
    #[arg(long = "rng-seed", default_value_t = 42)]
    pub rng_seed: u64,
    /// Fraction of the planted vocabulary used as the seed lexicon; the rest
    /// becomes the held-out target lexicon.
    #[arg(long = "seed-fraction", default_value_t = 0.5)]
    pub seed_fraction: f64,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let started = Instant::now();
    let config = SynthConfig {
        n_users: args.n_users,
        n_words: args.n_words,
        n_bully_words: args.n_bully_words,
        n_messages: args.n_messages,
        bully_user_fraction: args.bully_user_fraction,
        score_noise: args.score_noise,
        rng_seed: args.rng_seed,
    };
    let world = generate(&config).map_err(|e| match e {
        SynthError::InvalidConfig(_) => usage_error(anyhow!(e)),
        SynthError::CoverageInfeasible { .. } => runtime_error(anyhow!(e)),
    })?;
    let (seed_lex, target_lex) =
        split_lexicon(&world.seed_candidates, args.seed_fraction, args.rng_seed)
            .map_err(|e| usage_error(anyhow!(e)))?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(usage_error)?;
    let messages_path = args.out_dir.join("messages.tsv");
    formats::write_messages(&messages_path, &world.messages).map_err(runtime_error)?;
    let seed_path = args.out_dir.join("seed_lexicon.txt");
    formats::write_lexicon(&seed_path, &seed_lex).map_err(runtime_error)?;
    let target_path = args.out_dir.join("target_lexicon.txt");
    formats::write_lexicon(&target_path, &target_lex).map_err(runtime_error)?;

    let mut truth_rows = Vec::new();
    for (u, name) in world.users.iter().enumerate() {
        truth_rows.push(ScoreRow::new(KIND_BULLY, name.clone(), world.true_b[u]));
        truth_rows.push(ScoreRow::new(KIND_VICTIM, name.clone(), world.true_v[u]));
    }
    for (k, word) in world.words.iter().enumerate() {
        truth_rows.push(ScoreRow::new(KIND_WORD, word.clone(), world.true_w[k]));
    }
    let truth_path = args.out_dir.join("ground_truth.tsv");
    formats::write_score_table(&truth_path, &truth_rows).map_err(runtime_error)?;

    let mut manifest = RunManifest::new("synth");
    manifest
        .parameter("n_users", args.n_users)
        .parameter("n_words", args.n_words)
        .parameter("n_bully_words", args.n_bully_words)
        .parameter("n_messages", args.n_messages)
        .parameter("bully_user_fraction", args.bully_user_fraction)
        .parameter("score_noise", args.score_noise)
        .parameter("rng_seed", args.rng_seed)
        .parameter("seed_fraction", args.seed_fraction)
        .parameter("out_dir", args.out_dir.display());
    write_manifest(
        manifest,
        &[],
        &[&messages_path, &seed_path, &target_path, &truth_path],
        &args.out_dir,
        started,
    )?;

    println!(
        "synth: {} messages over {} users, {} words ({} planted); seed/target split {}/{}",
        world.messages.len(),
        world.users.len(),
        world.words.len(),
        world.bully_words.len(),
        seed_lex.len(),
        target_lex.len()
    );
    Ok(())
}

struct LoadedCorpus {
    corpus: IndexedCorpus,
    seeds: BTreeSet<FeatureId>,
}

/// Reads and indexes a message corpus plus its seed lexicon, reporting seed
/// phrases that never occur. With `allow_no_seed_hits` the caller accepts an
/// empty resolved seed set (warned, not fatal).
fn load_corpus_and_seeds(
    messages_path: &Path,
    seeds_path: &Path,
    ngram_orders: &[usize],
    min_df: usize,
    allow_no_seed_hits: bool,
) -> CliResult<LoadedCorpus> {
    if min_df < 1 {
        return Err(usage_error(anyhow!("--min-df must be at least 1")));
    }
    let orders = NgramOrders::new(ngram_orders).map_err(|e| usage_error(anyhow!(e)))?;

    let text = fs::read_to_string(messages_path)
        .with_context(|| format!("reading messages {}", messages_path.display()))
        .map_err(usage_error)?;
    let messages = parse_messages(&text)
        .with_context(|| format!("parsing {}", messages_path.display()))
        .map_err(usage_error)?;

    let seed_lex = read_lexicon(seeds_path)?;
    if seed_lex.is_empty() {
        return Err(usage_error(anyhow!(
            "seed lexicon {} is empty",
            seeds_path.display()
        )));
    }

    let corpus = build_corpus(&messages, &orders, min_df);
    let resolved = corpus.resolve_lexicon(&seed_lex);
    for phrase in &resolved.missing {
        eprintln!("warning: seed phrase {phrase:?} does not occur in the corpus; skipping");
    }
    if resolved.found.is_empty() && !allow_no_seed_hits {
        return Err(usage_error(anyhow!(
            "no seed phrase from {} occurs in the corpus",
            seeds_path.display()
        )));
    }

    Ok(LoadedCorpus {
        corpus,
        seeds: resolved.found,
    })
}

fn read_lexicon(path: &Path) -> CliResult<Lexicon> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading lexicon {}", path.display()))
        .map_err(usage_error)?;
    Ok(Lexicon::parse(&text))
}

fn map_solver_error(e: SolverError) -> crate::CliError {
    match e {
        SolverError::EmptySeedSet => usage_error(anyhow!(e)),
        other => runtime_error(anyhow!(other)),
    }
}

fn join_orders(orders: &[usize]) -> String {
    orders
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn write_manifest(
    mut manifest: RunManifest,
    inputs: &[&Path],
    outputs: &[&Path],
    out_dir: &Path,
    started: Instant,
) -> CliResult<()> {
    for path in inputs {
        manifest.input(path).map_err(runtime_error)?;
    }
    for path in outputs {
        manifest.output(path).map_err(runtime_error)?;
    }
    manifest.write(out_dir, started).map_err(runtime_error)?;
    Ok(())
}
