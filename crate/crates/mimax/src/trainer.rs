//! Minibatch gradient ascent with restarts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mimax_core::corpus::{extract_pairs, minibatches, sentence_batches, Batch, ContextWordPair, Vocab};
use mimax_core::model::{Hyper, ModelParams};
use mimax_core::objectives::{corpus_objective, objective_gradient, ObjectiveKind};
use mimax_core::optim::{Adam, AdamConfig};

use crate::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MIMAX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Variational,
    GenBrown,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Variational => ObjectiveKind::Variational,
            Objective::GenBrown => ObjectiveKind::GenBrown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batching {
    /// Shuffled pairs cut into batches of `batch_size`.
    Random,
    /// One batch per sentence, sentence order shuffled each epoch.
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub d: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub m: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    pub objective: Objective,
    pub batching: Batching,
    pub min_count: u64,
    /// Rescale any gradient whose L2 norm exceeds this.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 200,
            h: 2,
            m: 45,
            learning_rate: 0.001,
            batch_size: 80,
            epochs: 10,
            restarts: 10,
            seed: 0,
            objective: Objective::Variational,
            batching: Batching::Random,
            min_count: 1,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("H", self.h),
            ("m", self.m),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("restarts", self.restarts),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.d % 2 != 0 {
            return Err(Error::Config(format!("d must be even, got {}", self.d)));
        }
        if self.m < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be positive".into()));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("clip norm must be positive".into()));
        }
        Ok(())
    }

    pub fn hyper(&self, vocab: &Vocab) -> Hyper {
        Hyper { dim: self.d, width: self.h, labels: self.m, vocab_size: vocab.len(), char_count: vocab.char_count() }
    }
}

/// One line of the training log. Epoch 0 is the initial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub restart: usize,
    pub epoch: usize,
    pub objective: f64,
    pub wall_seconds: f64,
    pub steps: usize,
    pub grad_norm_mean: f64,
    pub grad_norm_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub restart: usize,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub final_objective: Option<f64>,
    pub error: Option<String>,
}

/// A restart that ran to completion.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub best_restart: usize,
    pub logs: Vec<TrainLog>,
}

/// Training data shared by all restarts.
pub struct TrainData {
    pub vocab: Vocab,
    pub pairs: Vec<ContextWordPair>,
    sentence_batches: Vec<Batch>,
}

impl TrainData {
    pub fn new<S: AsRef<str>>(config: &TrainConfig, sentences: &[Vec<S>]) -> Result<Self> {
        let vocab = Vocab::build(sentences, config.min_count)?;
        let pairs = extract_pairs(sentences, &vocab, config.h)?;
        let sentence_batches = match config.batching {
            Batching::Sentence => sentence_batches(sentences, &vocab, config.h)?,
            Batching::Random => Vec::new(),
        };
        Ok(Self { vocab, pairs, sentence_batches })
    }

    fn epoch_batches(&self, config: &TrainConfig, seed: u64) -> Result<Vec<Batch>> {
        Ok(match config.batching {
            Batching::Random => minibatches(&self.pairs, config.batch_size, seed)?,
            Batching::Sentence => {
                let mut order: Vec<&Batch> = self.sentence_batches.iter().collect();
                rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
                order.into_iter().cloned().collect()
            }
        })
    }
}

/// Worker count from `MIMAX_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs restart `restart` (seed `config.seed + restart`). A non-finite value
/// ends the restart with an error describing where it happened.
pub fn train_restart(config: &TrainConfig, data: &TrainData, restart: usize) -> std::result::Result<RestartOutcome, TrainLog> {
    let seed = config.seed.wrapping_add(restart as u64);
    let which: ObjectiveKind = config.objective.into();
    let mut log = TrainLog { restart, seed, epochs: Vec::new(), final_objective: None, error: None };
    let fail = |mut log: TrainLog, msg: String| {
        log.error = Some(msg);
        log
    };

    let mut params = match ModelParams::init(config.hyper(&data.vocab), seed) {
        Ok(p) => p,
        Err(e) => return Err(fail(log, e.to_string())),
    };
    let mut adam = Adam::new(AdamConfig { learning_rate: config.learning_rate, ..AdamConfig::default() }, &params);
    let mut shuffles = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();

    let evaluate = |params: &ModelParams| -> std::result::Result<f64, String> {
        let v = corpus_objective(params, &data.vocab, &data.pairs, which).map_err(|e| e.to_string())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("corpus objective is {v}"))
        }
    };
    let initial = match evaluate(&params) {
        Ok(v) => v,
        Err(e) => return Err(fail(log, format!("epoch 0: {e}"))),
    };
    log.epochs.push(EpochRecord {
        restart,
        epoch: 0,
        objective: initial,
        wall_seconds: start.elapsed().as_secs_f64(),
        steps: 0,
        grad_norm_mean: 0.0,
        grad_norm_max: 0.0,
    });

    for epoch in 1..=config.epochs {
        let batches = match data.epoch_batches(config, shuffles.gen()) {
            Ok(b) => b,
            Err(e) => return Err(fail(log, e.to_string())),
        };
        let (mut norm_sum, mut norm_max) = (0.0, 0.0f64);
        for batch in &batches {
            let mut grad = match objective_gradient(&params, &data.vocab, &batch.pairs, which) {
                Ok((_, g)) => g,
                Err(e) => return Err(fail(log, format!("epoch {epoch}, batch {}: {e}", batch.index))),
            };
            let norm = grad.l2_norm();
            norm_sum += norm;
            norm_max = norm_max.max(norm);
            if let Some(c) = config.clip_norm {
                if norm > c {
                    grad.scale(c / norm);
                }
            }
            adam.ascend(&mut params, &grad);
        }
        let objective = match evaluate(&params) {
            Ok(v) => v,
            Err(e) => return Err(fail(log, format!("epoch {epoch}: {e}"))),
        };
        log.epochs.push(EpochRecord {
            restart,
            epoch,
            objective,
            wall_seconds: start.elapsed().as_secs_f64(),
            steps: batches.len(),
            grad_norm_mean: norm_sum / batches.len().max(1) as f64,
            grad_norm_max: norm_max,
        });
    }
    log.final_objective = log.epochs.last().map(|e| e.objective);
    Ok(RestartOutcome { params, log })
}

fn pool() -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit() {
        b = b.num_threads(n);
    }
    b.build().expect("thread pool")
}

/// Trains every restart and keeps the one with the highest final corpus
/// objective (lowest restart index on ties).
pub fn train<S: AsRef<str> + Sync>(config: &TrainConfig, sentences: &[Vec<S>]) -> Result<TrainOutcome> {
    config.validate()?;
    let data = TrainData::new(config, sentences)?;
    train_on(config, data)
}

/// Every restart, in restart order, on the worker pool.
pub fn train_all(config: &TrainConfig, data: &TrainData) -> Vec<std::result::Result<RestartOutcome, TrainLog>> {
    pool().install(|| (0..config.restarts).into_par_iter().map(|r| train_restart(config, data, r)).collect())
}

pub fn train_on(config: &TrainConfig, data: TrainData) -> Result<TrainOutcome> {
    config.validate()?;
    let results = train_all(config, &data);
    let mut logs = Vec::with_capacity(results.len());
    let mut best: Option<(usize, f64, ModelParams)> = None;
    for result in results {
        match result {
            Ok(RestartOutcome { params, log }) => {
                let value = log.final_objective.expect("completed restarts record a final value");
                if best.as_ref().is_none_or(|(_, v, _)| value > *v) {
                    best = Some((log.restart, value, params));
                }
                logs.push(log);
            }
            Err(log) => logs.push(log),
        }
    }
    match best {
        Some((best_restart, _, params)) => Ok(TrainOutcome { params, vocab: data.vocab, best_restart, logs }),
        None => Err(Error::AllRestartsFailed(
            logs.iter().map(|l| format!("restart {}: {}", l.restart, l.error.as_deref().unwrap_or("?"))).collect(),
        )),
    }
}

/// Line-delimited JSON: every epoch record, then one summary line per restart.
pub fn format_log(logs: &[TrainLog]) -> String {
    #[derive(Serialize)]
    struct Summary<'a> {
        restart: usize,
        seed: u64,
        final_objective: Option<f64>,
        error: Option<&'a str>,
    }
    let mut out = String::new();
    for log in logs {
        for e in &log.epochs {
            out.push_str(&serde_json::to_string(e).expect("plain data"));
            out.push('\n');
        }
    }
    for log in logs {
        let s = Summary {
            restart: log.restart,
            seed: log.seed,
            final_objective: log.final_objective,
            error: log.error.as_deref(),
        };
        out.push_str(&serde_json::to_string(&s).expect("plain data"));
        out.push('\n');
    }
    out
}
