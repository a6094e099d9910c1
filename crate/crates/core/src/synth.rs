//! Seeded synthetic corpora: a block-structured hidden Markov tagger for
//! end-to-end runs and small random corpora for tests.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::TaggedCorpus;
use crate::{Error, Result};

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// `n` distinct lowercase pseudo-words of 3 to 8 letters.
pub fn pseudo_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.gen_range(3..=8);
        let w: String = (0..len).map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Hidden Markov generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    pub states: usize,
    pub vocab: usize,
    pub tokens: usize,
    /// Probability of staying in the same state.
    pub self_transition: f64,
    /// Emission mass a state puts on its own vocabulary block.
    pub in_block: f64,
    pub sentence_len: RangeInclusive<usize>,
}

impl Default for HmmSpec {
    fn default() -> Self {
        Self {
            states: 5,
            vocab: 150,
            tokens: 30_000,
            self_transition: 0.6,
            in_block: 0.95,
            sentence_len: 5..=20,
        }
    }
}

impl HmmSpec {
    /// Block owning word index `w`; blocks are contiguous and the first
    /// `vocab % states` blocks get one extra word.
    pub fn block_of(&self, w: usize) -> usize {
        let base = self.vocab / self.states;
        let extra = self.vocab % self.states;
        let big = extra * (base + 1);
        if w < big {
            w / (base + 1)
        } else {
            extra + (w - big) / base
        }
    }

    fn block_range(&self, s: usize) -> core::ops::Range<usize> {
        let base = self.vocab / self.states;
        let extra = self.vocab % self.states;
        let start = s * base + s.min(extra);
        let len = base + usize::from(s < extra);
        start..start + len
    }
}

/// Samples a tagged corpus from a hidden Markov chain.
///
/// Each sentence starts in a uniformly drawn state; the chain stays with
/// probability `self_transition` and otherwise moves uniformly to another
/// state. A state emits a uniform word of its own block with total
/// probability `in_block` and a uniform word from outside it otherwise.
/// Sentence lengths are uniform over `sentence_len`, the last sentence being
/// truncated so the corpus has exactly `tokens` tokens. Tags are named
/// `S0`, `S1`, ….
pub fn sample_hmm(spec: &HmmSpec, seed: u64) -> Result<TaggedCorpus> {
    if spec.states < 1 || spec.vocab < spec.states || spec.tokens < 1 {
        return Err(Error::InvalidHyper(format!(
            "need states >= 1, vocab >= states, tokens >= 1 (got {}, {}, {})",
            spec.states, spec.vocab, spec.tokens
        )));
    }
    if spec.sentence_len.is_empty() || *spec.sentence_len.start() == 0 {
        return Err(Error::InvalidHyper("sentence lengths must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = pseudo_words(spec.vocab, &mut rng);

    let mut sentences = Vec::new();
    let mut tags = Vec::new();
    let mut remaining = spec.tokens;
    while remaining > 0 {
        let len = rng.gen_range(spec.sentence_len.clone()).min(remaining);
        remaining -= len;
        let mut state = rng.gen_range(0..spec.states);
        let mut sent = Vec::with_capacity(len);
        let mut sent_tags = Vec::with_capacity(len);
        for t in 0..len {
            if t > 0 && spec.states > 1 && !rng.gen_bool(spec.self_transition) {
                let other = rng.gen_range(0..spec.states - 1);
                state = if other >= state { other + 1 } else { other };
            }
            let block = spec.block_range(state);
            let w = if spec.states == 1 || rng.gen_bool(spec.in_block) {
                rng.gen_range(block.clone())
            } else {
                let k = rng.gen_range(0..spec.vocab - block.len());
                if k >= block.start { k + block.len() } else { k }
            };
            sent.push(words[w].clone());
            sent_tags.push(state as u32);
        }
        sentences.push(sent);
        tags.push(sent_tags);
    }
    let tag_names = (0..spec.states).map(|s| format!("S{s}")).collect();
    Ok(TaggedCorpus { sentences, tags, tag_names })
}

/// Random sentences over `n_words` pseudo-words in which every word occurs
/// at least once.
pub fn random_corpus(n_words: usize, n_sentences: usize, lengths: RangeInclusive<usize>, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = pseudo_words(n_words, &mut rng);
    let mut lens: Vec<usize> = (0..n_sentences.max(1)).map(|_| rng.gen_range(lengths.clone())).collect();
    let total: usize = lens.iter().sum();
    if total < n_words {
        *lens.last_mut().expect("at least one sentence") += n_words - total;
    }
    let mut ids: Vec<usize> = (0..n_words).collect();
    ids.shuffle(&mut rng);
    let total: usize = lens.iter().sum();
    while ids.len() < total {
        ids.push(rng.gen_range(0..n_words));
    }
    let mut it = ids.into_iter();
    lens.iter()
        .map(|&l| it.by_ref().take(l).map(|i| words[i].clone()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_and_tag_counts() {
        let spec = HmmSpec { tokens: 1234, ..HmmSpec::default() };
        let c = sample_hmm(&spec, 3).unwrap();
        assert_eq!(c.num_tokens(), 1234);
        assert_eq!(c.num_tags(), 5);
        assert!(c.sentences.iter().all(|s| !s.is_empty() && s.len() <= 20));
        assert_eq!(c, sample_hmm(&spec, 3).unwrap());
        assert_ne!(c, sample_hmm(&spec, 4).unwrap());
    }

    #[test]
    fn blocks_partition_vocab() {
        let spec = HmmSpec { vocab: 17, states: 5, ..HmmSpec::default() };
        let mut covered = Vec::new();
        for s in 0..5 {
            for w in spec.block_range(s) {
                assert_eq!(spec.block_of(w), s);
                covered.push(w);
            }
        }
        assert_eq!(covered, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn emissions_mostly_in_block() {
        let spec = HmmSpec { tokens: 20_000, ..HmmSpec::default() };
        let c = sample_hmm(&spec, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let words = pseudo_words(spec.vocab, &mut rng);
        let index: alloc::collections::BTreeMap<&str, usize> =
            words.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
        let mut inside = 0usize;
        let mut stay = 0usize;
        let mut moves = 0usize;
        for (s, t) in c.sentences.iter().zip(&c.tags) {
            for (w, &tag) in s.iter().zip(t) {
                if spec.block_of(index[w.as_str()]) == tag as usize {
                    inside += 1;
                }
            }
            for pair in t.windows(2) {
                moves += 1;
                stay += usize::from(pair[0] == pair[1]);
            }
        }
        let frac = inside as f64 / c.num_tokens() as f64;
        assert!((frac - 0.95).abs() < 0.01, "{frac}");
        let st = stay as f64 / moves as f64;
        assert!((st - 0.6).abs() < 0.02, "{st}");
    }

    #[test]
    fn random_corpus_covers_words() {
        let c = random_corpus(17, 6, 3..=7, 0);
        assert_eq!(c.len(), 6);
        let distinct: BTreeSet<_> = c.iter().flatten().collect();
        assert_eq!(distinct.len(), 17);
    }
}
