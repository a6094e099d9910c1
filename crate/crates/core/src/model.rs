//! The context classifier `p(z|x)` and the word classifier `q(z|y)`.
//!
//! `p` sums one `m×d` projection per context position over shared word
//! embeddings. `q` runs two single-layer LSTMs over the character embeddings
//! of the word (left-to-right and right-to-left), projects the concatenated
//! final hidden states and adds a projection of the word's own embedding.
//! Both end in a max-subtracted softmax.
//!
//! Forward passes can record a tape so that `objectives` can backpropagate
//! arbitrary cotangents on the output probabilities.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocab;
use crate::math::{sigmoid, softmax_in_place, sqrt, tanh};
use crate::{Error, Result};

/// Half-width of the uniform initialization interval.
pub const INIT_SCALE: f64 = 0.1;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidHyper(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self · x`
    #[inline]
    pub fn mul_vec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    /// `out += selfᵀ · v`
    #[inline]
    pub fn mul_t_vec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (&vr, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            if vr != 0.0 {
                axpy(vr, row, out);
            }
        }
    }

    /// `self += a ⊗ b`
    #[inline]
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        for (&ar, row) in a.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            if ar != 0.0 {
                axpy(ar, b, row);
            }
        }
    }

    fn fill_uniform(&mut self, rng: &mut ChaCha8Rng) {
        for v in &mut self.data {
            *v = rng.gen_range(-INIT_SCALE..=INIT_SCALE);
        }
    }
}

/// Four independent partial sums so the loop vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Single-layer LSTM cell weights; gate blocks ordered input, forget,
/// candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_input: Matrix,
    pub w_hidden: Matrix,
    pub bias: Matrix,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Matrix::zeros(4 * hidden, input),
            w_hidden: Matrix::zeros(4 * hidden, hidden),
            bias: Matrix::zeros(4 * hidden, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.cols
    }
}

/// Architecture sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hyper {
    /// Embedding dimension `d` (even).
    pub dim: usize,
    /// Context half-width `H`.
    pub width: usize,
    /// Number of labels `m`.
    pub labels: usize,
    pub vocab_size: usize,
    pub char_count: usize,
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim % 2 != 0 {
            return Err(Error::InvalidHyper(format!("d must be positive and even, got {}", self.dim)));
        }
        if self.width < 1 {
            return Err(Error::InvalidHyper("H must be at least 1".into()));
        }
        if self.labels < 2 {
            return Err(Error::InvalidHyper(format!("m must be at least 2, got {}", self.labels)));
        }
        if self.vocab_size == 0 || self.char_count == 0 {
            return Err(Error::InvalidHyper("empty vocabulary or character inventory".into()));
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        self.dim / 2
    }
}

/// Which classifier a parameter array feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// Word embeddings, used by both classifiers.
    Shared,
    /// Only the context classifier `p`.
    Context,
    /// Only the word classifier `q`.
    Word,
}

/// All trainable arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hyper: Hyper,
    pub word_emb: Matrix,
    pub context: Vec<Matrix>,
    pub char_emb: Matrix,
    pub lstm_fwd: LstmParams,
    pub lstm_bwd: LstmParams,
    pub w_char: Matrix,
    pub w_word: Matrix,
}

impl ModelParams {
    pub fn zeros(hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        let Hyper { dim, width, labels, vocab_size, char_count } = hyper;
        let half = hyper.half();
        Ok(Self {
            hyper,
            word_emb: Matrix::zeros(vocab_size, dim),
            context: (0..2 * width).map(|_| Matrix::zeros(labels, dim)).collect(),
            char_emb: Matrix::zeros(char_count, half),
            lstm_fwd: LstmParams::zeros(half, half),
            lstm_bwd: LstmParams::zeros(half, half),
            w_char: Matrix::zeros(labels, dim),
            w_word: Matrix::zeros(labels, dim),
        })
    }

    /// Uniform `[-0.1, 0.1]` entries, forget-gate biases 1, other biases 0.
    pub fn init(hyper: Hyper, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(hyper)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = hyper.half();
        for (name, m) in params.arrays_mut() {
            if name.ends_with(".bias") {
                for (i, b) in m.as_mut_slice().iter_mut().enumerate() {
                    *b = if (half..2 * half).contains(&i) { 1.0 } else { 0.0 };
                }
            } else {
                m.fill_uniform(&mut rng);
            }
        }
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hyper).expect("hyperparameters were validated at construction")
    }

    /// Arrays in manifest order.
    pub fn arrays(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![(String::from("word_emb"), &self.word_emb)];
        for (j, m) in self.context.iter().enumerate() {
            out.push((format!("context.{j}"), m));
        }
        out.push((String::from("char_emb"), &self.char_emb));
        for (prefix, l) in [("lstm_fwd", &self.lstm_fwd), ("lstm_bwd", &self.lstm_bwd)] {
            out.push((format!("{prefix}.w_input"), &l.w_input));
            out.push((format!("{prefix}.w_hidden"), &l.w_hidden));
            out.push((format!("{prefix}.bias"), &l.bias));
        }
        out.push((String::from("w_char"), &self.w_char));
        out.push((String::from("w_word"), &self.w_word));
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![(String::from("word_emb"), &mut self.word_emb)];
        for (j, m) in self.context.iter_mut().enumerate() {
            out.push((format!("context.{j}"), m));
        }
        out.push((String::from("char_emb"), &mut self.char_emb));
        for (prefix, l) in [("lstm_fwd", &mut self.lstm_fwd), ("lstm_bwd", &mut self.lstm_bwd)] {
            out.push((format!("{prefix}.w_input"), &mut l.w_input));
            out.push((format!("{prefix}.w_hidden"), &mut l.w_hidden));
            out.push((format!("{prefix}.bias"), &mut l.bias));
        }
        out.push((String::from("w_char"), &mut self.w_char));
        out.push((String::from("w_word"), &mut self.w_word));
        out
    }

    pub fn role(name: &str) -> ParamRole {
        if name == "word_emb" {
            ParamRole::Shared
        } else if name.starts_with("context.") {
            ParamRole::Context
        } else {
            ParamRole::Word
        }
    }

    pub fn num_values(&self) -> usize {
        self.arrays().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    /// Name of the first array holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        self.arrays()
            .into_iter()
            .find(|(_, m)| m.as_slice().iter().any(|v| !v.is_finite()))
            .map(|(n, _)| n)
    }

    fn check_word(&self, id: u32) -> Result<()> {
        if id as usize >= self.hyper.vocab_size {
            return Err(Error::IdOutOfRange { kind: "word", id: id as usize, size: self.hyper.vocab_size });
        }
        Ok(())
    }

    fn check_vocab(&self, vocab: &Vocab) -> Result<()> {
        if vocab.len() != self.hyper.vocab_size || vocab.char_count() != self.hyper.char_count {
            return Err(Error::InvalidHyper(format!(
                "vocabulary ({} words, {} chars) does not match model ({} words, {} chars)",
                vocab.len(),
                vocab.char_count(),
                self.hyper.vocab_size,
                self.hyper.char_count
            )));
        }
        Ok(())
    }
}

/// Gradient (or any cotangent) with one array per parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub ModelParams);

impl GradientSet {
    pub fn zeros_for(params: &ModelParams) -> Self {
        Self(params.zeros_like())
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.arrays().into_iter().flat_map(|(_, m)| m.as_slice().iter().copied())
    }

    pub fn l2_norm(&self) -> f64 {
        sqrt(self.values().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }

    pub fn first_non_finite(&self) -> Option<String> {
        self.0.first_non_finite()
    }

    /// `self += alpha · other`
    pub fn add_scaled(&mut self, alpha: f64, other: &GradientSet) {
        for ((_, a), (_, b)) in self.0.arrays_mut().into_iter().zip(other.0.arrays()) {
            axpy(alpha, b.as_slice(), a.as_mut_slice());
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for (_, a) in self.0.arrays_mut() {
            for v in a.as_mut_slice() {
                *v *= alpha;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &GradientSet) -> f64 {
        self.0
            .arrays()
            .into_iter()
            .zip(other.0.arrays())
            .flat_map(|((_, a), (_, b))| {
                a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Zeroes every array of the context classifier.
    pub fn restrict_to_word_classifier(&mut self) {
        for (name, a) in self.0.arrays_mut() {
            if ModelParams::role(&name) == ParamRole::Context {
                a.as_mut_slice().fill(0.0);
            }
        }
    }
}

/// A strictly positive probability vector over labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution(pub Vec<f64>);

impl LabelDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Index of the largest probability, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Hidden and cell vectors of an LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentCellState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

/// Per-step activations of one LSTM run, kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub(crate) struct LstmTape {
    inputs: Vec<u32>,
    /// `[i, f, g, o]` activations, `4h` per step.
    gates: Vec<f64>,
    /// cell state after each step, `h` per step
    cells: Vec<f64>,
    /// `tanh(cell)`, `h` per step
    cell_tanh: Vec<f64>,
    /// hidden state after each step, `h` per step
    hidden: Vec<f64>,
}

fn lstm_run(params: &LstmParams, char_emb: &Matrix, chars: impl Iterator<Item = u32>, tape: Option<&mut LstmTape>) -> RecurrentCellState {
    let h = params.hidden();
    let mut state = RecurrentCellState { hidden: vec![0.0; h], cell: vec![0.0; h] };
    let mut pre = vec![0.0; 4 * h];
    let mut local = LstmTape::default();
    let record = tape.is_some();
    for ch in chars {
        pre.copy_from_slice(params.bias.as_slice());
        params.w_input.mul_vec_add(char_emb.row(ch as usize), &mut pre);
        params.w_hidden.mul_vec_add(&state.hidden, &mut pre);
        for k in 0..h {
            let i = sigmoid(pre[k]);
            let f = sigmoid(pre[h + k]);
            let g = tanh(pre[2 * h + k]);
            let o = sigmoid(pre[3 * h + k]);
            pre[k] = i;
            pre[h + k] = f;
            pre[2 * h + k] = g;
            pre[3 * h + k] = o;
            state.cell[k] = f * state.cell[k] + i * g;
        }
        if record {
            local.inputs.push(ch);
            local.gates.extend_from_slice(&pre);
            local.cells.extend_from_slice(&state.cell);
        }
        for k in 0..h {
            let tc = tanh(state.cell[k]);
            state.hidden[k] = pre[3 * h + k] * tc;
            if record {
                local.cell_tanh.push(tc);
            }
        }
        if record {
            local.hidden.extend_from_slice(&state.hidden);
        }
    }
    if let Some(t) = tape {
        *t = local;
    }
    state
}

/// Backpropagates `d_final` (cotangent of the last hidden state) through a
/// recorded run, accumulating into `grads` and `d_char_emb`.
fn lstm_backward(params: &LstmParams, char_emb: &Matrix, tape: &LstmTape, d_final: &[f64], grads: &mut LstmParams, d_char_emb: &mut Matrix) {
    let h = params.hidden();
    let steps = tape.inputs.len();
    let mut dh = d_final.to_vec();
    let mut dc = vec![0.0; h];
    let mut da = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];
    for t in (0..steps).rev() {
        let gates = &tape.gates[t * 4 * h..(t + 1) * 4 * h];
        let tc = &tape.cell_tanh[t * h..(t + 1) * h];
        let c_prev = if t > 0 { &tape.cells[(t - 1) * h..t * h] } else { &zeros[..] };
        let h_prev = if t > 0 { &tape.hidden[(t - 1) * h..t * h] } else { &zeros[..] };
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let d_o = dh[k] * tc[k];
            let dck = dc[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
            da[k] = dck * g * i * (1.0 - i);
            da[h + k] = dck * c_prev[k] * f * (1.0 - f);
            da[2 * h + k] = dck * i * (1.0 - g * g);
            da[3 * h + k] = d_o * o * (1.0 - o);
            dc[k] = dck * f;
        }
        let x = char_emb.row(tape.inputs[t] as usize);
        grads.w_input.add_outer(&da, x);
        grads.w_hidden.add_outer(&da, h_prev);
        axpy(1.0, &da, grads.bias.as_mut_slice());
        params.w_input.mul_t_vec_add(&da, d_char_emb.row_mut(tape.inputs[t] as usize));
        dh.fill(0.0);
        params.w_hidden.mul_t_vec_add(&da, &mut dh);
    }
}

pub fn context_logits(params: &ModelParams, context: &[u32]) -> Result<Vec<f64>> {
    if context.len() != params.context.len() {
        return Err(Error::LengthMismatch { left: context.len(), right: params.context.len() });
    }
    let mut logits = vec![0.0; params.hyper.labels];
    for (w, &id) in params.context.iter().zip(context) {
        params.check_word(id)?;
        w.mul_vec_add(params.word_emb.row(id as usize), &mut logits);
    }
    Ok(logits)
}

/// `p(·|x) = softmax(Σ_j W_j e_{x_j})`
pub fn context_forward(params: &ModelParams, context: &[u32]) -> Result<LabelDistribution> {
    let mut v = context_logits(params, context)?;
    softmax_in_place(&mut v);
    Ok(LabelDistribution(v))
}

/// `[f_T ; b_T]`, the final hidden states of the forward and backward LSTMs
/// over the characters of `word`.
pub fn char_encode(params: &ModelParams, word: u32, vocab: &Vocab) -> Result<Vec<f64>> {
    params.check_vocab(vocab)?;
    params.check_word(word)?;
    Ok(encode_chars(params, vocab.chars_of(word), None))
}

fn encode_chars(params: &ModelParams, chars: &[u32], tapes: Option<(&mut LstmTape, &mut LstmTape)>) -> Vec<f64> {
    let (tf, tb) = match tapes {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let f = lstm_run(&params.lstm_fwd, &params.char_emb, chars.iter().copied(), tf);
    let b = lstm_run(&params.lstm_bwd, &params.char_emb, chars.iter().rev().copied(), tb);
    let mut out = f.hidden;
    out.extend_from_slice(&b.hidden);
    out
}

pub(crate) fn word_logits_from(params: &ModelParams, word: u32, encoding: &[f64]) -> Vec<f64> {
    let mut logits = vec![0.0; params.hyper.labels];
    params.w_char.mul_vec_add(encoding, &mut logits);
    params.w_word.mul_vec_add(params.word_emb.row(word as usize), &mut logits);
    logits
}

/// `q(·|y) = softmax(W_c [f_T; b_T] + W_w e_y)`
pub fn word_forward(params: &ModelParams, word: u32, vocab: &Vocab) -> Result<LabelDistribution> {
    let enc = char_encode(params, word, vocab)?;
    let mut v = word_logits_from(params, word, &enc);
    softmax_in_place(&mut v);
    Ok(LabelDistribution(v))
}

/// `argmax_z q(z|y)`, lowest label on ties.
pub fn induce_label(params: &ModelParams, word: u32, vocab: &Vocab) -> Result<usize> {
    Ok(word_forward(params, word, vocab)?.argmax())
}

/// Labels for every vocabulary id.
pub fn induce_all(params: &ModelParams, vocab: &Vocab) -> Result<Vec<usize>> {
    (0..vocab.len() as u32).map(|w| induce_label(params, w, vocab)).collect()
}

/// Recorded word-classifier pass for one word type.
#[derive(Debug, Clone)]
pub(crate) struct WordTape {
    pub word: u32,
    pub encoding: Vec<f64>,
    pub probs: Vec<f64>,
    fwd: LstmTape,
    bwd: LstmTape,
}

pub(crate) fn word_forward_taped(params: &ModelParams, word: u32, vocab: &Vocab) -> WordTape {
    let mut fwd = LstmTape::default();
    let mut bwd = LstmTape::default();
    let encoding = encode_chars(params, vocab.chars_of(word), Some((&mut fwd, &mut bwd)));
    let mut probs = word_logits_from(params, word, &encoding);
    softmax_in_place(&mut probs);
    WordTape { word, encoding, probs, fwd, bwd }
}

pub(crate) fn validate_inputs(params: &ModelParams, vocab: &Vocab, context: &[u32], word: u32) -> Result<()> {
    params.check_vocab(vocab)?;
    params.check_word(word)?;
    if context.len() != params.context.len() {
        return Err(Error::LengthMismatch { left: context.len(), right: params.context.len() });
    }
    context.iter().try_for_each(|&c| params.check_word(c))
}

/// Backprop of a logit cotangent through the context classifier.
pub(crate) fn context_backward(params: &ModelParams, context: &[u32], d_logits: &[f64], grads: &mut ModelParams) {
    for (j, &id) in context.iter().enumerate() {
        let e = params.word_emb.row(id as usize);
        grads.context[j].add_outer(d_logits, e);
        params.context[j].mul_t_vec_add(d_logits, grads.word_emb.row_mut(id as usize));
    }
}

/// Backprop of a logit cotangent through the word classifier.
pub(crate) fn word_backward(params: &ModelParams, tape: &WordTape, d_logits: &[f64], grads: &mut ModelParams) {
    let half = params.hyper.half();
    grads.w_char.add_outer(d_logits, &tape.encoding);
    grads.w_word.add_outer(d_logits, params.word_emb.row(tape.word as usize));
    params.w_word.mul_t_vec_add(d_logits, grads.word_emb.row_mut(tape.word as usize));
    let mut d_enc = vec![0.0; params.hyper.dim];
    params.w_char.mul_t_vec_add(d_logits, &mut d_enc);
    let ModelParams { char_emb, lstm_fwd, lstm_bwd, .. } = grads;
    lstm_backward(&params.lstm_fwd, &params.char_emb, &tape.fwd, &d_enc[..half], lstm_fwd, char_emb);
    lstm_backward(&params.lstm_bwd, &params.char_emb, &tape.bwd, &d_enc[half..], lstm_bwd, char_emb);
}

/// Cotangent on softmax logits from a cotangent on its probabilities.
pub(crate) fn softmax_backward(probs: &[f64], d_probs: &[f64], out: &mut [f64]) {
    let inner: f64 = probs.iter().zip(d_probs).map(|(p, g)| p * g).sum();
    for ((o, p), g) in out.iter_mut().zip(probs).zip(d_probs) {
        *o = p * (g - inner);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocab;
    use alloc::string::ToString;

    fn vocab(words: &[&str]) -> Vocab {
        let s = vec![words.iter().map(|w| w.to_string()).collect::<Vec<_>>()];
        Vocab::build(&s, 1).unwrap()
    }

    fn hyper_for(v: &Vocab, dim: usize, width: usize, labels: usize) -> Hyper {
        Hyper { dim, width, labels, vocab_size: v.len(), char_count: v.char_count() }
    }

    #[test]
    fn zero_context_weights_give_uniform() {
        let v = vocab(&["a", "b", "c"]);
        let mut p = ModelParams::init(hyper_for(&v, 4, 1, 5), 1).unwrap();
        for w in &mut p.context {
            w.as_mut_slice().fill(0.0);
        }
        let out = context_forward(&p, &[3, 4]).unwrap();
        for &x in out.probs() {
            assert!((x - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn crafted_context_logits() {
        // logits (ln 3, 0) -> (0.75, 0.25)
        let v = vocab(&["a"]);
        let mut p = ModelParams::zeros(hyper_for(&v, 2, 1, 2)).unwrap();
        p.word_emb.set(3, 0, 1.0);
        p.context[0].set(0, 0, 3f64.ln());
        let out = context_forward(&p, &[3, 0]).unwrap();
        assert!((out.0[0] - 0.75).abs() < 1e-12);
        assert!((out.0[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn context_rejects_bad_ids() {
        let v = vocab(&["a"]);
        let p = ModelParams::init(hyper_for(&v, 2, 1, 2), 0).unwrap();
        assert!(matches!(context_forward(&p, &[99, 0]), Err(Error::IdOutOfRange { .. })));
        assert!(context_forward(&p, &[0]).is_err());
        assert!(word_forward(&p, 99, &v).is_err());
    }

    #[test]
    fn zero_lstm_encodes_to_zero() {
        let v = vocab(&["hello", "x"]);
        let mut p = ModelParams::init(hyper_for(&v, 6, 1, 3), 2).unwrap();
        p.lstm_fwd = LstmParams::zeros(3, 3);
        p.lstm_bwd = LstmParams::zeros(3, 3);
        let enc = char_encode(&p, v.id("hello"), &v).unwrap();
        assert_eq!(enc, vec![0.0; 6]);
    }

    #[test]
    fn single_char_word_takes_one_step() {
        let v = vocab(&["x", "yy"]);
        let p = ModelParams::init(hyper_for(&v, 4, 1, 2), 3).unwrap();
        let mut tf = LstmTape::default();
        let mut tb = LstmTape::default();
        encode_chars(&p, v.chars_of(v.id("x")), Some((&mut tf, &mut tb)));
        assert_eq!(tf.inputs.len(), 1);
        assert_eq!(tb.inputs.len(), 1);
    }

    #[test]
    fn palindrome_with_tied_cells_is_symmetric() {
        let v = vocab(&["abcba", "abc"]);
        let mut p = ModelParams::init(hyper_for(&v, 8, 1, 3), 4).unwrap();
        p.lstm_bwd = p.lstm_fwd.clone();
        let enc = char_encode(&p, v.id("abcba"), &v).unwrap();
        assert_eq!(enc[..4], enc[4..]);
        let enc = char_encode(&p, v.id("abc"), &v).unwrap();
        assert_ne!(enc[..4], enc[4..]);
    }

    #[test]
    fn word_path_crafted() {
        let v = vocab(&["a"]);
        let mut p = ModelParams::zeros(hyper_for(&v, 2, 1, 2)).unwrap();
        assert_eq!(word_forward(&p, 3, &v).unwrap().0, vec![0.5, 0.5]);
        // W_c = 0, logits (0, ln 9) -> (0.1, 0.9)
        p.char_emb.as_mut_slice().fill(0.3);
        p.word_emb.set(3, 1, 1.0);
        p.w_word.set(1, 1, 9f64.ln());
        let q = word_forward(&p, 3, &v).unwrap();
        assert!((q.0[0] - 0.1).abs() < 1e-12);
        assert!((q.0[1] - 0.9).abs() < 1e-12);
        assert_eq!(induce_label(&p, 3, &v).unwrap(), 1);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(LabelDistribution(vec![0.25; 4]).argmax(), 0);
        assert_eq!(LabelDistribution(vec![0.0, 0.0, 0.0, 1.0]).argmax(), 3);
        assert_eq!(LabelDistribution(vec![0.1, 0.4, 0.4, 0.1]).argmax(), 1);
        let v = vocab(&["a"]);
        let p = ModelParams::zeros(hyper_for(&v, 2, 1, 3)).unwrap();
        assert_eq!(induce_label(&p, 3, &v).unwrap(), 0);
    }

    #[test]
    fn argmax_invariant_under_monotone_transform() {
        let v = vocab(&["ab", "cd", "ef"]);
        let mut p = ModelParams::init(hyper_for(&v, 4, 1, 4), 9).unwrap();
        let before = induce_all(&p, &v).unwrap();
        // doubling all output weights doubles the logits
        p.w_char.as_mut_slice().iter_mut().for_each(|x| *x *= 2.0);
        p.w_word.as_mut_slice().iter_mut().for_each(|x| *x *= 2.0);
        assert_eq!(before, induce_all(&p, &v).unwrap());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let v = vocab(&["a", "b"]);
        let h = hyper_for(&v, 6, 2, 3);
        let a = ModelParams::init(h, 11).unwrap();
        assert_eq!(a, ModelParams::init(h, 11).unwrap());
        assert_ne!(a, ModelParams::init(h, 12).unwrap());
        for (name, m) in a.arrays() {
            if name.ends_with(".bias") {
                for (i, &b) in m.as_slice().iter().enumerate() {
                    assert_eq!(b, if (3..6).contains(&i) { 1.0 } else { 0.0 });
                }
            } else {
                assert!(m.as_slice().iter().all(|x| x.abs() <= INIT_SCALE));
            }
        }
        assert!(ModelParams::init(hyper_for(&v, 5, 1, 3), 0).is_err());
        assert!(ModelParams::init(hyper_for(&v, 4, 1, 1), 0).is_err());
    }

    #[test]
    fn tuned_shapes() {
        let h = Hyper { dim: 200, width: 2, labels: 45, vocab_size: 10, char_count: 5 };
        let p = ModelParams::zeros(h).unwrap();
        assert_eq!(p.context.len(), 4);
        assert!(p.context.iter().all(|w| w.shape() == [45, 200]));
        assert_eq!(p.char_emb.shape(), [5, 100]);
        assert_eq!(p.lstm_fwd.w_input.shape(), [400, 100]);
    }

    #[test]
    fn outputs_are_simplex_and_stable() {
        let v = vocab(&["alpha", "beta", "gamma"]);
        let mut p = ModelParams::init(hyper_for(&v, 6, 1, 4), 5).unwrap();
        for w in 0..v.len() as u32 {
            let q = word_forward(&p, w, &v).unwrap();
            assert!((q.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(q.0.iter().all(|&x| x > 0.0));
        }
        // logits of magnitude ~1e3
        p.word_emb.as_mut_slice().iter_mut().for_each(|x| *x *= 1e4);
        let out = context_forward(&p, &[3, 4]).unwrap();
        assert!(out.0.iter().all(|x| x.is_finite()));
        assert!((out.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn locality() {
        let v = vocab(&["aa", "bb", "cc", "dd"]);
        let mut p = ModelParams::init(hyper_for(&v, 4, 1, 3), 6).unwrap();
        let before_ctx = context_forward(&p, &[3, 4]).unwrap();
        let before_word = word_forward(&p, 3, &v).unwrap();
        for x in p.word_emb.row_mut(6) {
            *x += 1.0;
        }
        // chars of "dd" are not used by "aa"
        let d = v.char_id('d') as usize;
        for x in p.char_emb.row_mut(d) {
            *x -= 1.0;
        }
        assert_eq!(before_ctx, context_forward(&p, &[3, 4]).unwrap());
        assert_eq!(before_word, word_forward(&p, 3, &v).unwrap());
    }
}
