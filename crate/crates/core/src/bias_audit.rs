//! Exact minibatch gradient bias of both objectives with respect to the word
//! classifier `q`.
//!
//! For a partition of `N` pairs into `K` batches of `M` pairs and the loss
//! `l = −J`, the bias is `ε = ∇l_N − (1/K) Σ_k ∇l_k`. Gradients are taken
//! through `q` only, with every `p(·|x)` held fixed. ε is assembled from
//! weighted backward passes through each batch and checked against the
//! difference of full and per-batch gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{extract_pairs, minibatches, Batch, ContextWordPair, Vocab};
use crate::math::{log2, pairwise_sum, INV_LN2};
use crate::model::{GradientSet, Hyper, ModelParams};
use crate::objectives::{word_path_gradient, ForwardPass, ObjectiveKind};
use crate::synth::random_corpus;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub objective: ObjectiveKind,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub epsilon: GradientSet,
    pub epsilon_norm: f64,
    /// L2 norm of `(1/K) Σ_k ∇l_k`.
    pub grad_norm: f64,
    /// Max-abs of `∇l_N − [(1/K) Σ_k ∇l_k + ε]`.
    pub direct_residual: f64,
}

/// Checks that `partition` is a rearrangement of `pairs` into equal batches
/// and returns the batch size.
fn batch_size(pairs: &[ContextWordPair], partition: &[Batch]) -> Result<usize> {
    let first = partition.first().ok_or(Error::Empty("partition"))?;
    let m = first.len();
    if m == 0 {
        return Err(Error::Empty("batch"));
    }
    for (index, b) in partition.iter().enumerate() {
        if b.len() != m {
            return Err(Error::UnequalBatches { index, found: b.len(), expected: m });
        }
    }
    let mut covered: Vec<&ContextWordPair> = partition.iter().flat_map(|b| &b.pairs).collect();
    let mut given: Vec<&ContextWordPair> = pairs.iter().collect();
    covered.sort();
    given.sort();
    if covered != given {
        return Err(Error::BadPartition("batches are not a disjoint cover of the pairs".into()));
    }
    Ok(m)
}

/// Component-wise pairwise mean of equally long vectors.
fn pairwise_mean(rows: &[&[f64]]) -> Vec<f64> {
    let len = rows[0].len();
    (0..len)
        .map(|z| pairwise_sum(&rows.iter().map(|r| r[z]).collect::<Vec<_>>()) / rows.len() as f64)
        .collect()
}

/// Recorded passes over every batch, with data-wide means built from the
/// batch means so replicated batches reproduce them bit for bit.
struct PartitionPasses {
    passes: Vec<ForwardPass>,
    p_hat: Vec<f64>,
    q_hat: Vec<f64>,
    m: usize,
}

impl PartitionPasses {
    fn run(params: &ModelParams, vocab: &Vocab, pairs: &[ContextWordPair], partition: &[Batch]) -> Result<Self> {
        let m = batch_size(pairs, partition)?;
        let passes = partition
            .iter()
            .map(|b| ForwardPass::run(params, vocab, &b.pairs, true))
            .collect::<Result<Vec<_>>>()?;
        let p_hat = pairwise_mean(&passes.iter().map(|p| p.fwd.p_hat()).collect::<Vec<_>>());
        let q_hat = pairwise_mean(&passes.iter().map(|p| p.fwd.q_hat()).collect::<Vec<_>>());
        Ok(Self { passes, p_hat, q_hat, m })
    }

    fn k(&self) -> usize {
        self.passes.len()
    }

    fn n(&self) -> usize {
        self.k() * self.m
    }
}

/// `ε` for the variational objective: each batch backpropagates the
/// cotangent `log(q̂(z)/q̂_k(z))` through `q̂_k`, weighted by `1/K`.
pub fn variational_bias(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    partition: &[Batch],
) -> Result<GradientSet> {
    let run = PartitionPasses::run(params, vocab, pairs, partition)?;
    Ok(variational_from(params, partition, &run))
}

fn variational_from(params: &ModelParams, partition: &[Batch], run: &PartitionPasses) -> GradientSet {
    let labels = params.hyper.labels;
    let mut eps = GradientSet::zeros_for(params);
    for (pass, batch) in run.passes.iter().zip(partition) {
        let q_k = pass.fwd.q_hat();
        // d q̂_k / d Q_i = 1/M
        let row: Vec<f64> = (0..labels).map(|z| log2(run.q_hat[z] / q_k[z]) / run.m as f64).collect();
        let d_q = row.repeat(batch.len());
        let g = pass.backward(params, &batch.pairs, None, Some(&d_q));
        eps.add_scaled(1.0 / run.k() as f64, &g);
    }
    eps
}

/// `ε` for the generalized Brown objective: the per-sample term weighted by
/// `log(p̂(z) q̂(z') / (p̂_k(z) q̂_k(z')))` plus the `ε_k(z, z')`-weighted
/// accumulation of `∇q̂_k(z')`, all scaled by `1/N`.
pub fn gen_brown_bias(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    partition: &[Batch],
) -> Result<GradientSet> {
    let run = PartitionPasses::run(params, vocab, pairs, partition)?;
    Ok(gen_brown_from(params, partition, &run))
}

fn gen_brown_from(params: &ModelParams, partition: &[Batch], run: &PartitionPasses) -> GradientSet {
    let labels = params.hyper.labels;
    let (n, k, m) = (run.n() as f64, run.k() as f64, run.m as f64);

    // T_k(z, z') = Σ_{i ∈ B_k} P[i,z] Q[i,z']; the data-wide sum is their pairwise sum
    let joint: Vec<Vec<f64>> = run
        .passes
        .iter()
        .map(|pass| {
            let mut t = vec![0.0; labels * labels];
            for i in 0..pass.fwd.len() {
                let (p, q) = (pass.fwd.p_row(i), pass.fwd.q_row(i));
                for z in 0..labels {
                    for zp in 0..labels {
                        t[z * labels + zp] += p[z] * q[zp];
                    }
                }
            }
            t
        })
        .collect();
    let total: Vec<f64> = (0..labels * labels)
        .map(|c| pairwise_sum(&joint.iter().map(|t| t[c]).collect::<Vec<_>>()))
        .collect();

    let mut eps = GradientSet::zeros_for(params);
    for ((pass, batch), t_k) in run.passes.iter().zip(partition).zip(&joint) {
        let (p_k, q_k) = (pass.fwd.p_hat(), pass.fwd.q_hat());
        let log_p: Vec<f64> = (0..labels).map(|z| log2(run.p_hat[z] / p_k[z])).collect();
        let log_q: Vec<f64> = (0..labels).map(|z| log2(run.q_hat[z] / q_k[z])).collect();
        // Σ_z ε_k(z, z') pushed through d q̂_k(z') / d Q_i = 1/M
        let eps_k: Vec<f64> = (0..labels)
            .map(|zp| {
                let s: f64 = (0..labels)
                    .map(|z| total[z * labels + zp] / k / run.q_hat[zp] - t_k[z * labels + zp] / q_k[zp])
                    .sum();
                INV_LN2 * s / m
            })
            .collect();
        let mut d_q = vec![0.0; batch.len() * labels];
        for i in 0..batch.len() {
            let p = pass.fwd.p_row(i);
            let shared: f64 = p.iter().zip(&log_p).map(|(a, b)| a * b).sum();
            for zp in 0..labels {
                d_q[i * labels + zp] = (shared + log_q[zp] + eps_k[zp]) / n;
            }
        }
        let g = pass.backward(params, &batch.pairs, None, Some(&d_q));
        eps.add_scaled(1.0, &g);
    }
    eps
}

/// ε for `which` together with the direct-differencing check.
pub fn audit(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    partition: &[Batch],
    which: ObjectiveKind,
) -> Result<BiasReport> {
    let run = PartitionPasses::run(params, vocab, pairs, partition)?;
    let epsilon = match which {
        ObjectiveKind::Variational => variational_from(params, partition, &run),
        ObjectiveKind::GenBrown => gen_brown_from(params, partition, &run),
    };
    // gradients of l = −J
    let (_, mut full) = word_path_gradient(params, vocab, pairs, which)?;
    full.scale(-1.0);
    let mut mean = GradientSet::zeros_for(params);
    for batch in partition {
        let (_, g) = word_path_gradient(params, vocab, &batch.pairs, which)?;
        mean.add_scaled(-1.0 / run.k() as f64, &g);
    }
    let mut predicted = mean.clone();
    predicted.add_scaled(1.0, &epsilon);
    Ok(BiasReport {
        objective: which,
        n: run.n(),
        k: run.k(),
        m: run.m,
        epsilon_norm: epsilon.l2_norm(),
        grad_norm: mean.l2_norm(),
        direct_residual: full.max_abs_diff(&predicted),
        epsilon,
    })
}

/// ε computed the slow way: `∇l_N − (1/K) Σ_k ∇l_k`.
pub fn direct_bias(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    partition: &[Batch],
    which: ObjectiveKind,
) -> Result<GradientSet> {
    batch_size(pairs, partition)?;
    let (_, mut eps) = word_path_gradient(params, vocab, pairs, which)?;
    eps.scale(-1.0);
    for batch in partition {
        let (_, g) = word_path_gradient(params, vocab, &batch.pairs, which)?;
        eps.add_scaled(1.0 / partition.len() as f64, &g);
    }
    Ok(eps)
}

/// One audited partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub objective: ObjectiveKind,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    pub eps_norm: f64,
    pub grad_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSummary {
    pub objective: ObjectiveKind,
    pub m: usize,
    pub mean_eps_norm: f64,
    pub mean_grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingReport {
    pub rows: Vec<BiasRow>,
    /// Batch sizes that do not divide the number of pairs.
    pub skipped: Vec<usize>,
}

impl ScalingReport {
    /// Means over seeds, per objective and batch size, in row order.
    pub fn summaries(&self) -> Vec<ScalingSummary> {
        let mut out: Vec<(ScalingSummary, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(s, _)| s.objective == r.objective && s.m == r.m) {
                Some((s, count)) => {
                    s.mean_eps_norm += r.eps_norm;
                    s.mean_grad_norm += r.grad_norm;
                    *count += 1;
                }
                None => out.push((
                    ScalingSummary { objective: r.objective, m: r.m, mean_eps_norm: r.eps_norm, mean_grad_norm: r.grad_norm },
                    1,
                )),
            }
        }
        out.into_iter()
            .map(|(mut s, c)| {
                s.mean_eps_norm /= c as f64;
                s.mean_grad_norm /= c as f64;
                s
            })
            .collect()
    }
}

/// Audits a fresh seeded random partition for every batch size, seed and
/// objective.
pub fn bias_scaling_report(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    batch_sizes: &[usize],
    seeds: &[u64],
) -> Result<ScalingReport> {
    let mut report = ScalingReport::default();
    for &m in batch_sizes {
        if m == 0 || pairs.len() % m != 0 {
            report.skipped.push(m);
            continue;
        }
        for &seed in seeds {
            let partition = minibatches(pairs, m, seed)?;
            for which in [ObjectiveKind::Variational, ObjectiveKind::GenBrown] {
                let r = audit(params, vocab, pairs, &partition, which)?;
                report.rows.push(BiasRow {
                    objective: which,
                    n: r.n,
                    k: r.k,
                    m: r.m,
                    seed,
                    eps_norm: r.epsilon_norm,
                    grad_norm: r.grad_norm,
                    residual: r.direct_residual,
                });
            }
        }
    }
    Ok(report)
}

/// Small random model and the first `n_pairs` pairs (`H = 1`, `d = 6`) of a
/// random corpus over 17 words.
pub fn tiny_instance(seed: u64, n_pairs: usize, labels: usize) -> Result<(Vocab, ModelParams, Vec<ContextWordPair>)> {
    let sentences_needed = n_pairs.div_ceil(5).max(4);
    let sents = random_corpus(17, sentences_needed, 5..=9, seed);
    let vocab = Vocab::build(&sents, 1)?;
    let hyper = Hyper { dim: 6, width: 1, labels, vocab_size: vocab.len(), char_count: vocab.char_count() };
    let params = ModelParams::init(hyper, seed)?;
    let mut pairs = extract_pairs(&sents, &vocab, 1)?;
    if pairs.len() < n_pairs {
        return Err(Error::InvalidHyper("corpus too small for the requested pair count".into()));
    }
    pairs.truncate(n_pairs);
    Ok((vocab, params, pairs))
}

/// A tiny instance whose word classifier is nearly deterministic (word `y`
/// goes to label `y mod m` with probability about `1 − 3e−9`), partitioned so
/// that every batch holds words of few labels. Batch marginals `q̂_k` then
/// have entries close to zero.
pub fn near_degenerate_instance(seed: u64) -> Result<(Vocab, ModelParams, Vec<ContextWordPair>, Vec<Batch>)> {
    let labels = 4;
    let (vocab, mut params, mut pairs) = tiny_instance(seed, 48, labels)?;
    params.w_char.as_mut_slice().fill(0.0);
    params.w_word.as_mut_slice().fill(0.0);
    for z in 0..labels {
        params.w_word.set(z, z, 1.0);
    }
    for y in 0..vocab.len() {
        let row = params.word_emb.row_mut(y);
        row[..labels].fill(0.0);
        row[y % labels] = 20.0;
    }
    pairs.sort_by_key(|p| (p.word as usize % labels, p.word));
    let partition = crate::corpus::contiguous_partition(&pairs, 12);
    Ok((vocab, params, pairs, partition))
}
