//! Many-to-one accuracy and V-measure over token-level label/tag counts.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{TaggedCorpus, Vocab};
use crate::infotheory::entropy_of;
use crate::math::log2;
use crate::model::{induce_all, ModelParams};
use crate::{Error, Result};

/// `counts[z][t]`: tokens with induced label `z` and gold tag `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    labels: usize,
    tags: usize,
    counts: Vec<u64>,
    total: u64,
}

impl Contingency {
    pub fn new(induced: &[usize], gold: &[usize], labels: usize, tags: usize) -> Result<Self> {
        if induced.len() != gold.len() {
            return Err(Error::LengthMismatch { left: induced.len(), right: gold.len() });
        }
        if induced.is_empty() {
            return Err(Error::Empty("label sequence"));
        }
        let mut counts = vec![0u64; labels * tags];
        for (&z, &t) in induced.iter().zip(gold) {
            if z >= labels {
                return Err(Error::IdOutOfRange { kind: "label", id: z, size: labels });
            }
            if t >= tags {
                return Err(Error::IdOutOfRange { kind: "tag", id: t, size: tags });
            }
            counts[z * tags + t] += 1;
        }
        Ok(Self { labels, tags, counts, total: induced.len() as u64 })
    }

    pub fn from_counts(labels: usize, tags: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != labels * tags {
            return Err(Error::LengthMismatch { left: counts.len(), right: labels * tags });
        }
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty("contingency table"));
        }
        Ok(Self { labels, tags, counts, total })
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn tags(&self) -> usize {
        self.tags
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, z: usize, t: usize) -> u64 {
        self.counts[z * self.tags + t]
    }

    fn row(&self, z: usize) -> &[u64] {
        &self.counts[z * self.tags..(z + 1) * self.tags]
    }
}

/// Sizes are inferred as one past the largest id.
pub fn contingency(induced: &[usize], gold: &[usize]) -> Result<Contingency> {
    let labels = induced.iter().max().map_or(0, |m| m + 1);
    let tags = gold.iter().max().map_or(0, |m| m + 1);
    Contingency::new(induced, gold, labels, tags)
}

/// Most frequent gold tag for every induced label, lowest tag on ties.
pub fn many_to_one_mapping(c: &Contingency) -> Vec<usize> {
    (0..c.labels)
        .map(|z| {
            let row = c.row(z);
            let mut best = 0;
            for (t, &n) in row.iter().enumerate() {
                if n > row[best] {
                    best = t;
                }
            }
            best
        })
        .collect()
}

pub fn many_to_one(c: &Contingency) -> f64 {
    let hits: u64 = (0..c.labels).map(|z| c.row(z).iter().copied().max().unwrap_or(0)).sum();
    hits as f64 / c.total as f64
}

/// `(homogeneity, completeness)` in bits.
pub fn homogeneity_completeness(c: &Contingency) -> (f64, f64) {
    let n = c.total as f64;
    let label_totals: Vec<f64> = (0..c.labels).map(|z| c.row(z).iter().sum::<u64>() as f64).collect();
    let mut tag_totals = vec![0.0; c.tags];
    for z in 0..c.labels {
        for (t, &k) in c.row(z).iter().enumerate() {
            tag_totals[t] += k as f64;
        }
    }
    let h_tag = entropy_of(&tag_totals.iter().map(|x| x / n).collect::<Vec<_>>());
    let h_label = entropy_of(&label_totals.iter().map(|x| x / n).collect::<Vec<_>>());
    let mut h_tag_given_label = 0.0;
    let mut h_label_given_tag = 0.0;
    for z in 0..c.labels {
        for (t, &k) in c.row(z).iter().enumerate() {
            if k > 0 {
                let k = k as f64;
                h_tag_given_label -= k / n * log2(k / label_totals[z]);
                h_label_given_tag -= k / n * log2(k / tag_totals[t]);
            }
        }
    }
    let homogeneity = if h_tag == 0.0 { 1.0 } else { 1.0 - h_tag_given_label / h_tag };
    let completeness = if h_label == 0.0 { 1.0 } else { 1.0 - h_label_given_tag / h_label };
    (homogeneity, completeness)
}

/// Harmonic mean of homogeneity and completeness.
pub fn v_measure(c: &Contingency) -> f64 {
    let (h, v) = homogeneity_completeness(c);
    if h + v == 0.0 {
        0.0
    } else {
        2.0 * h * v / (h + v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub m2o: f64,
    pub v_measure: f64,
    pub n_tokens: u64,
    pub m: usize,
    pub num_gold_tags: usize,
    /// Gold tag id for every induced label.
    pub mapping: Vec<usize>,
}

/// Scores a labeling that assigns one label per vocabulary id.
pub fn evaluate_labels(word_labels: &[usize], m: usize, corpus: &TaggedCorpus, vocab: &Vocab) -> Result<EvalReport> {
    if corpus.num_tags() == 0 {
        return Err(Error::Empty("tag inventory"));
    }
    let mut induced = Vec::with_capacity(corpus.num_tokens());
    let mut gold = Vec::with_capacity(corpus.num_tokens());
    for (s, t) in corpus.sentences.iter().zip(&corpus.tags) {
        for (w, &tag) in s.iter().zip(t) {
            induced.push(word_labels[vocab.id(w) as usize]);
            gold.push(tag as usize);
        }
    }
    let c = Contingency::new(&induced, &gold, m, corpus.num_tags())?;
    Ok(EvalReport {
        m2o: many_to_one(&c),
        v_measure: v_measure(&c),
        n_tokens: c.total(),
        m,
        num_gold_tags: corpus.num_tags(),
        mapping: many_to_one_mapping(&c),
    })
}

/// Labels every token with `argmax_z q(z|y)` of its word and scores the
/// result against the gold tags. Words outside the vocabulary go through
/// the unknown-word id.
pub fn evaluate_model(params: &ModelParams, corpus: &TaggedCorpus, vocab: &Vocab) -> Result<EvalReport> {
    let labels = induce_all(params, vocab)?;
    evaluate_labels(&labels, params.hyper.labels, corpus, vocab)
}
