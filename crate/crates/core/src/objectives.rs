//! Empirical objectives over a set of context-word pairs and their exact
//! gradients.
//!
//! Both objectives are computed in bits from the per-pair label distributions
//! `P[i] = p(·|x_i)`, `Q[i] = q(·|y_i)` and their means `p̂`, `q̂` over the
//! same set of pairs:
//!
//! * variational: `H(q̂) − (1/n) Σ_i H(Q[i], P[i])`
//! * generalized Brown: `(1/n) Σ_i Σ_{z,z'} P[i,z] Q[i,z'] log(P[i,z] Q[i,z'] / (p̂(z) q̂(z')))`
//!
//! Gradients are for ascent and treat `p̂`, `q̂` as functions of the pairs
//! passed in, so on a minibatch they are the (biased) minibatch gradients.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{ContextWordPair, Vocab};
use crate::infotheory::entropy_of;
use crate::math::{log2, INV_LN2};
use crate::model::{
    context_backward, context_logits, softmax_backward, validate_inputs, word_backward, word_forward_taped,
    word_logits_from, GradientSet, ModelParams, WordTape,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Variational,
    GenBrown,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Variational => "variational",
            ObjectiveKind::GenBrown => "gen_brown",
        }
    }
}

/// Label distributions of a set of pairs and their means.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchForward {
    labels: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    p_hat: Vec<f64>,
    q_hat: Vec<f64>,
}

fn row_mean(rows: &[f64], labels: usize) -> Vec<f64> {
    let n = rows.len() / labels;
    let mut mean = vec![0.0; labels];
    for row in rows.chunks_exact(labels) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    mean
}

impl BatchForward {
    /// Builds from explicit row-major `P` and `Q` rows.
    pub fn from_rows(labels: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if labels == 0 || p.is_empty() || p.len() % labels != 0 {
            return Err(Error::Empty("label rows"));
        }
        if p.len() != q.len() {
            return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
        }
        for row in p.chunks_exact(labels).chain(q.chunks_exact(labels)) {
            crate::infotheory::Distribution::new(row.to_vec())?;
        }
        let p_hat = row_mean(&p, labels);
        let q_hat = row_mean(&q, labels);
        Ok(Self { labels, p, q, p_hat, q_hat })
    }

    pub fn len(&self) -> usize {
        self.p.len() / self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn p_row(&self, i: usize) -> &[f64] {
        &self.p[i * self.labels..(i + 1) * self.labels]
    }

    pub fn q_row(&self, i: usize) -> &[f64] {
        &self.q[i * self.labels..(i + 1) * self.labels]
    }

    pub fn p_rows(&self) -> &[f64] {
        &self.p
    }

    pub fn q_rows(&self) -> &[f64] {
        &self.q
    }

    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn q_hat(&self) -> &[f64] {
        &self.q_hat
    }
}

/// A forward pass that can be backpropagated.
pub(crate) struct ForwardPass {
    pub fwd: BatchForward,
    tapes: Vec<WordTape>,
    /// index into `tapes` for each pair
    slot: Vec<usize>,
}

impl ForwardPass {
    pub(crate) fn run(params: &ModelParams, vocab: &Vocab, pairs: &[ContextWordPair], record: bool) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let labels = params.hyper.labels;
        let mut types: BTreeMap<u32, usize> = BTreeMap::new();
        let mut tapes: Vec<WordTape> = Vec::new();
        let mut type_probs: Vec<Vec<f64>> = Vec::new();
        let mut slot = Vec::with_capacity(pairs.len());
        let mut p = Vec::with_capacity(pairs.len() * labels);
        let mut q = Vec::with_capacity(pairs.len() * labels);
        for pair in pairs {
            validate_inputs(params, vocab, &pair.context, pair.word)?;
            let mut row = context_logits(params, &pair.context)?;
            crate::math::softmax_in_place(&mut row);
            p.extend_from_slice(&row);

            let s = *types.entry(pair.word).or_insert_with(|| {
                if record {
                    let t = word_forward_taped(params, pair.word, vocab);
                    type_probs.push(t.probs.clone());
                    tapes.push(t);
                } else {
                    let enc = crate::model::char_encode(params, pair.word, vocab).expect("ids validated above");
                    let mut v = word_logits_from(params, pair.word, &enc);
                    crate::math::softmax_in_place(&mut v);
                    type_probs.push(v);
                }
                type_probs.len() - 1
            });
            slot.push(s);
            q.extend_from_slice(&type_probs[s]);
        }
        let p_hat = row_mean(&p, labels);
        let q_hat = row_mean(&q, labels);
        Ok(Self { fwd: BatchForward { labels, p, q, p_hat, q_hat }, tapes, slot })
    }

    /// Gradient from cotangents on the `P` logits and on the `Q`
    /// probabilities (both row-major, one row per pair). Needs a recorded pass
    /// when `d_q_probs` is given.
    pub(crate) fn backward(
        &self,
        params: &ModelParams,
        pairs: &[ContextWordPair],
        d_p_logits: Option<&[f64]>,
        d_q_probs: Option<&[f64]>,
    ) -> GradientSet {
        let labels = self.fwd.labels;
        let mut grads = GradientSet::zeros_for(params);
        if let Some(d) = d_p_logits {
            for (pair, row) in pairs.iter().zip(d.chunks_exact(labels)) {
                context_backward(params, &pair.context, row, &mut grads.0);
            }
        }
        if let Some(d) = d_q_probs {
            assert_eq!(self.tapes.len(), self.slot.iter().max().map_or(0, |m| m + 1), "pass was not recorded");
            let mut per_type = vec![0.0; self.tapes.len() * labels];
            for (&s, row) in self.slot.iter().zip(d.chunks_exact(labels)) {
                for (acc, g) in per_type[s * labels..(s + 1) * labels].iter_mut().zip(row) {
                    *acc += g;
                }
            }
            let mut d_logits = vec![0.0; labels];
            for (tape, d_probs) in self.tapes.iter().zip(per_type.chunks_exact(labels)) {
                softmax_backward(&tape.probs, d_probs, &mut d_logits);
                word_backward(params, tape, &d_logits, &mut grads.0);
            }
        }
        grads
    }
}

pub fn batch_forward(params: &ModelParams, vocab: &Vocab, pairs: &[ContextWordPair]) -> Result<BatchForward> {
    Ok(ForwardPass::run(params, vocab, pairs, false)?.fwd)
}

/// `Ĥ(Z) − Ĥ(q,p)` in bits.
pub fn variational_objective(fwd: &BatchForward) -> f64 {
    let n = fwd.len() as f64;
    let mut cross = 0.0;
    for i in 0..fwd.len() {
        for (&qz, &pz) in fwd.q_row(i).iter().zip(fwd.p_row(i)) {
            if qz > 0.0 {
                cross -= qz * log2(pz);
            }
        }
    }
    entropy_of(&fwd.q_hat) - cross / n
}

/// Mean per-pair mutual information between the predictions of `p` and `q`.
pub fn gen_brown_objective(fwd: &BatchForward) -> f64 {
    let n = fwd.len() as f64;
    let mut total = 0.0;
    for i in 0..fwd.len() {
        for (z, &pz) in fwd.p_row(i).iter().enumerate() {
            for (zp, &qz) in fwd.q_row(i).iter().enumerate() {
                let joint = pz * qz;
                if joint > 0.0 {
                    total += joint * log2(joint / (fwd.p_hat[z] * fwd.q_hat[zp]));
                }
            }
        }
    }
    total / n
}

pub fn objective_value(fwd: &BatchForward, which: ObjectiveKind) -> f64 {
    match which {
        ObjectiveKind::Variational => variational_objective(fwd),
        ObjectiveKind::GenBrown => gen_brown_objective(fwd),
    }
}

/// Ascent cotangents: `(d J / d P-logits, d J / d Q-probabilities)`.
pub(crate) fn objective_cotangents(fwd: &BatchForward, which: ObjectiveKind) -> (Vec<f64>, Vec<f64>) {
    let labels = fwd.labels;
    let n = fwd.len() as f64;
    let mut d_p = vec![0.0; fwd.p.len()];
    let mut d_q = vec![0.0; fwd.q.len()];
    let log_q_hat: Vec<f64> = fwd.q_hat.iter().map(|&x| log2(x)).collect();
    match which {
        ObjectiveKind::Variational => {
            for i in 0..fwd.len() {
                let (p, q) = (fwd.p_row(i), fwd.q_row(i));
                for z in 0..labels {
                    d_p[i * labels + z] = (q[z] - p[z]) * INV_LN2 / n;
                    d_q[i * labels + z] = (log2(p[z]) - log_q_hat[z] - INV_LN2) / n;
                }
            }
        }
        ObjectiveKind::GenBrown => {
            let log_p_hat: Vec<f64> = fwd.p_hat.iter().map(|&x| log2(x)).collect();
            let mut d_p_probs = vec![0.0; labels];
            for i in 0..fwd.len() {
                let (p, q) = (fwd.p_row(i), fwd.q_row(i));
                for z in 0..labels {
                    // row-constant terms vanish under the softmax Jacobian
                    d_p_probs[z] = (log2(p[z]) - log_p_hat[z]) / n;
                    d_q[i * labels + z] = (log2(q[z]) - log_q_hat[z]) / n;
                }
                softmax_backward(p, &d_p_probs, &mut d_p[i * labels..(i + 1) * labels]);
            }
        }
    }
    (d_p, d_q)
}

fn check_finite(value: f64, grads: &GradientSet) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(String::from("objective value")));
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite(name));
    }
    Ok(())
}

/// Objective value on `pairs` and its exact gradient (ascent direction) with
/// respect to every parameter.
pub fn objective_gradient(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    which: ObjectiveKind,
) -> Result<(f64, GradientSet)> {
    let pass = ForwardPass::run(params, vocab, pairs, true)?;
    let value = objective_value(&pass.fwd, which);
    let (d_p, d_q) = objective_cotangents(&pass.fwd, which);
    let grads = pass.backward(params, pairs, Some(&d_p), Some(&d_q));
    check_finite(value, &grads)?;
    Ok((value, grads))
}

/// Gradient of the objective through the word classifier only, holding every
/// `p(·|x)` fixed. Context arrays are zero; `word_emb` carries only the
/// `q`-path contribution.
pub fn word_path_gradient(
    params: &ModelParams,
    vocab: &Vocab,
    pairs: &[ContextWordPair],
    which: ObjectiveKind,
) -> Result<(f64, GradientSet)> {
    let pass = ForwardPass::run(params, vocab, pairs, true)?;
    let value = objective_value(&pass.fwd, which);
    let (_, d_q) = objective_cotangents(&pass.fwd, which);
    let grads = pass.backward(params, pairs, None, Some(&d_q));
    check_finite(value, &grads)?;
    Ok((value, grads))
}

/// The objective with `p̂`, `q̂` taken over all pairs.
pub fn corpus_objective(params: &ModelParams, vocab: &Vocab, pairs: &[ContextWordPair], which: ObjectiveKind) -> Result<f64> {
    Ok(objective_value(&batch_forward(params, vocab, pairs)?, which))
}
