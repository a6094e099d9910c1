use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mimax::io::{format_clusters, format_induced, format_plain, format_tagged, read_plain, read_tagged, write_text};
use mimax::model_file::{load_model, save_model};
use mimax::trainer::{format_log, train, Batching, Objective, TrainConfig};
use mimax_core::bias_audit::bias_scaling_report;
use mimax_core::brown::{bigram_counts, brown_cluster, brown_objective, brute_force_clustering};
use mimax_core::corpus::{extract_pairs, Vocab};
use mimax_core::eval::evaluate_model;
use mimax_core::model::induce_all;
use mimax_core::objectives::ObjectiveKind;
use mimax_core::synth::{sample_hmm, HmmSpec};

#[derive(Parser)]
#[command(name = "mimax", version, about = "Unsupervised part-of-speech induction by mutual information maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a plain-text corpus
    Train(TrainArgs),
    /// Label every token of a plain-text corpus
    Induce(InduceArgs),
    /// Many-to-one accuracy and V-measure against a tagged corpus
    Eval(EvalArgs),
    /// Minibatch gradient bias of both objectives as JSON lines
    BiasAudit(BiasAuditArgs),
    /// Brown clustering baseline
    Brown(BrownArgs),
    /// Sample a tagged corpus from a hidden Markov chain
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    #[value(alias = "variational")]
    Var,
    #[value(alias = "gen_brown", alias = "gen-brown")]
    Mi,
}

#[derive(Clone, Copy, ValueEnum)]
enum BatchingArg {
    Random,
    Sentence,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tagged corpus whose tag count sets m when --m is absent
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "var")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    d: u64,
    #[arg(long = "H", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    h: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    m: Option<u64>,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 80, value_parser = clap::value_parser!(u64).range(1..))]
    batch: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    batching: BatchingArg,
    #[arg(long = "min-count", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
    /// Rescale gradients whose L2 norm exceeds this (off by default)
    #[arg(long = "clip-norm")]
    clip_norm: Option<f64>,
    /// Training log path (default: <out>.log.jsonl)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct InduceArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    labeled: PathBuf,
}

#[derive(Args)]
struct BiasAuditArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated batch sizes
    #[arg(long = "batch-sizes", value_delimiter = ',', required = true, num_args = 1..)]
    batch_sizes: Vec<usize>,
    /// Number of random partitions per batch size (seeds 0..N)
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
}

#[derive(Args)]
struct BrownArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also run the exhaustive search and print both objective values
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    states: u64,
    #[arg(long, default_value_t = 150, value_parser = clap::value_parser!(u64).range(1..))]
    vocab: u64,
    #[arg(long, default_value_t = 30000, value_parser = clap::value_parser!(u64).range(1..))]
    tokens: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes <PREFIX>.tagged and <PREFIX>.txt
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(mimax::Error),
}

impl From<mimax::Error> for Failure {
    fn from(e: mimax::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<mimax_core::Error> for Failure {
    fn from(e: mimax_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Induce(a) => cmd_induce(a),
        Command::Eval(a) => cmd_eval(a),
        Command::BiasAudit(a) => cmd_bias_audit(a),
        Command::Brown(a) => cmd_brown(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_train(a: TrainArgs) -> Outcome {
    if a.d % 2 != 0 {
        return Err(Failure::Usage(format!("--d must be even, got {}", a.d)));
    }
    let m = match (a.m, &a.labels) {
        (Some(m), _) => m as usize,
        (None, Some(path)) => read_tagged(path)?.num_tags(),
        (None, None) => return Err(Failure::Usage("give --m or --labels to fix the number of labels".into())),
    };
    let config = TrainConfig {
        d: a.d as usize,
        h: a.h as usize,
        m,
        learning_rate: a.lr,
        batch_size: a.batch as usize,
        epochs: a.epochs as usize,
        restarts: a.restarts as usize,
        seed: a.seed,
        objective: match a.objective {
            ObjectiveArg::Var => Objective::Variational,
            ObjectiveArg::Mi => Objective::GenBrown,
        },
        batching: match a.batching {
            BatchingArg::Random => Batching::Random,
            BatchingArg::Sentence => Batching::Sentence,
        },
        min_count: a.min_count,
        clip_norm: a.clip_norm,
    };
    if let Err(e) = config.validate() {
        return Err(Failure::Usage(e.to_string()));
    }
    let sentences = read_plain(&a.corpus)?;
    let outcome = train(&config, &sentences)?;
    for log in outcome.logs.iter().filter(|l| l.error.is_some()) {
        eprintln!("warning: restart {} aborted: {}", log.restart, log.error.as_deref().unwrap_or_default());
    }
    save_model(&a.out, &outcome.params, &outcome.vocab, Some(&config))?;
    let log_path = a.log.unwrap_or_else(|| with_suffix(&a.out, ".log.jsonl"));
    write_text(&log_path, &format_log(&outcome.logs))?;
    let best = &outcome.logs[outcome.best_restart];
    eprintln!(
        "restart {} kept, final {} = {:.6} bits",
        outcome.best_restart,
        ObjectiveKind::from(config.objective).name(),
        best.final_objective.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_induce(a: InduceArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let sentences = read_plain(&a.corpus)?;
    let table = induce_all(&model.params, &model.vocab)?;
    let labels: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().map(|w| table[model.vocab.id(w) as usize]).collect())
        .collect();
    write_text(&a.out, &format_induced(&sentences, &labels))?;
    Ok(())
}

#[derive(Serialize)]
struct EvalJson {
    m2o: f64,
    v_measure: f64,
    n_tokens: u64,
    m: usize,
    num_gold_tags: usize,
    mapping: std::collections::BTreeMap<usize, String>,
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let corpus = read_tagged(&a.labeled)?;
    let report = evaluate_model(&model.params, &corpus, &model.vocab)?;
    let json = EvalJson {
        m2o: report.m2o,
        v_measure: report.v_measure,
        n_tokens: report.n_tokens,
        m: report.m,
        num_gold_tags: report.num_gold_tags,
        mapping: report.mapping.iter().enumerate().map(|(z, &t)| (z, corpus.tag_names[t].clone())).collect(),
    };
    println!("{}", serde_json::to_string(&json).expect("plain data"));
    Ok(())
}

#[derive(Serialize)]
struct BiasJson {
    objective: &'static str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    seed: u64,
    eps_norm: f64,
    grad_norm: f64,
    residual: f64,
}

fn cmd_bias_audit(a: BiasAuditArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let sentences = read_plain(&a.corpus)?;
    let pairs = extract_pairs(&sentences, &model.vocab, model.params.hyper.width)?;
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let report = bias_scaling_report(&model.params, &model.vocab, &pairs, &a.batch_sizes, &seeds)?;
    for m in &report.skipped {
        eprintln!("warning: batch size {m} does not divide N = {}; skipped", pairs.len());
    }
    for r in &report.rows {
        let row = BiasJson {
            objective: r.objective.name(),
            n: r.n,
            k: r.k,
            m: r.m,
            seed: r.seed,
            eps_norm: r.eps_norm,
            grad_norm: r.grad_norm,
            residual: r.residual,
        };
        println!("{}", serde_json::to_string(&row).expect("plain data"));
    }
    Ok(())
}

fn cmd_brown(a: BrownArgs) -> Outcome {
    let sentences = read_plain(&a.corpus)?;
    let vocab = Vocab::build(&sentences, 1)?;
    let table = bigram_counts(&sentences, &vocab);
    let m = a.m as usize;
    let clustering = brown_cluster(&table, &vocab, m)?;
    write_text(&a.out, &format_clusters(&vocab, &clustering))?;
    if a.oracle {
        let (_, best) = match brute_force_clustering(&table, &vocab, m) {
            Ok(r) => r,
            Err(e @ mimax_core::Error::TooLarge { .. }) => return Err(Failure::Usage(format!("refusing --oracle: {e}"))),
            Err(e) => return Err(e.into()),
        };
        println!("heuristic\t{}", brown_objective(&clustering, &table)?);
        println!("oracle\t{best}");
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Outcome {
    if a.vocab < a.states {
        return Err(Failure::Usage(format!("--vocab ({}) must be at least --states ({})", a.vocab, a.states)));
    }
    let spec = HmmSpec { states: a.states as usize, vocab: a.vocab as usize, tokens: a.tokens as usize, ..HmmSpec::default() };
    let corpus = sample_hmm(&spec, a.seed)?;
    write_text(&with_suffix(&a.out, ".tagged"), &format_tagged(&corpus))?;
    write_text(&with_suffix(&a.out, ".txt"), &format_plain(&corpus.sentences))?;
    Ok(())
}
