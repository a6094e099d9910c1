//! Vocabulary, fixed-window context extraction and minibatching.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const NUM_RESERVED: usize = 3;

/// Character id used for characters outside the inventory.
pub const UNK_CHAR_ID: u32 = 0;

/// Word and character inventories.
///
/// Ids `0..3` are reserved for the sentence-boundary and unknown tokens; the
/// remaining ids are assigned by descending corpus frequency, ties broken by
/// first occurrence. The character inventory is derived from `id_to_word`
/// alone, so a vocabulary rebuilt from its word list is identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    word_to_id: BTreeMap<String, u32>,
    id_to_word: Vec<String>,
    word_counts: Vec<u64>,
    char_to_id: BTreeMap<char, u32>,
    word_chars: Vec<Vec<u32>>,
}

impl Vocab {
    pub fn build<S: AsRef<str>>(sentences: &[Vec<S>], min_count: u64) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::InvalidHyper("min_count must be at least 1".into()));
        }
        let mut counts: BTreeMap<&str, (u64, usize)> = BTreeMap::new();
        let mut order = 0usize;
        for tok in sentences.iter().flatten() {
            let tok = tok.as_ref();
            let e = counts.entry(tok).or_insert_with(|| {
                order += 1;
                (0, order)
            });
            e.0 += 1;
        }
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        let mut unk_count = 0u64;
        let mut kept: Vec<(&str, u64, usize)> = Vec::new();
        for (&w, &(c, first)) in &counts {
            if w == UNK || c < min_count {
                unk_count += c;
            } else if w == BOS || w == EOS {
                // boundary markers in the text are treated as unknown words
                unk_count += c;
            } else {
                kept.push((w, c, first));
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        let mut words: Vec<(String, u64)> = alloc::vec![
            (BOS.to_string(), 0),
            (EOS.to_string(), 0),
            (UNK.to_string(), unk_count),
        ];
        words.extend(kept.into_iter().map(|(w, c, _)| (w.to_string(), c)));
        Ok(Self::from_words(words))
    }

    /// Rebuilds a vocabulary from its id-ordered `(word, count)` list. The
    /// first three entries must be the reserved tokens.
    pub fn from_word_counts(words: Vec<(String, u64)>) -> Result<Self> {
        let reserved = [BOS, EOS, UNK];
        if words.len() < NUM_RESERVED
            || words.iter().zip(reserved).any(|((w, _), r)| w != r)
        {
            return Err(Error::InvalidHyper("vocabulary must start with <s>, </s>, <unk>".into()));
        }
        let mut seen = BTreeMap::new();
        for (i, (w, _)) in words.iter().enumerate() {
            if seen.insert(w.as_str(), i).is_some() {
                return Err(Error::InvalidHyper(alloc::format!("duplicate word {w:?}")));
            }
        }
        Ok(Self::from_words(words))
    }

    fn from_words(words: Vec<(String, u64)>) -> Self {
        let mut char_to_id = BTreeMap::new();
        let mut next_char = UNK_CHAR_ID + 1;
        for (w, _) in &words {
            for ch in w.chars() {
                char_to_id.entry(ch).or_insert_with(|| {
                    next_char += 1;
                    next_char - 1
                });
            }
        }
        let word_chars = words
            .iter()
            .map(|(w, _)| w.chars().map(|c| char_to_id[&c]).collect())
            .collect();
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let (id_to_word, word_counts) = words.into_iter().unzip();
        Self { word_to_id, id_to_word, word_counts, char_to_id, word_chars }
    }

    /// Id of `word`, or `UNK_ID` when it is not in the vocabulary.
    pub fn id(&self, word: &str) -> u32 {
        self.word_to_id.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.id_to_word[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }

    pub fn count(&self, id: u32) -> u64 {
        self.word_counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.word_counts
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    /// Number of character ids, including the unknown-character id.
    pub fn char_count(&self) -> usize {
        self.char_to_id.len() + 1
    }

    pub fn char_id(&self, ch: char) -> u32 {
        self.char_to_id.get(&ch).copied().unwrap_or(UNK_CHAR_ID)
    }

    /// Character ids spelling word `id`.
    pub fn chars_of(&self, id: u32) -> &[u32] {
        &self.word_chars[id as usize]
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<u32> {
        sentence.iter().map(|w| self.id(w.as_ref())).collect()
    }
}

/// One observation: the `2H` surrounding words and the target word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextWordPair {
    /// `H` left words then `H` right words, in surface order.
    pub context: Vec<u32>,
    pub word: u32,
    /// Gold tag for evaluation; never read by training.
    pub gold: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub index: usize,
    pub pairs: Vec<ContextWordPair>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Sentences with one gold tag per token; tag ids follow first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub sentences: Vec<Vec<String>>,
    pub tags: Vec<Vec<u32>>,
    pub tag_names: Vec<String>,
}

impl TaggedCorpus {
    pub fn from_string_tags(sentences: Vec<Vec<String>>, tags: Vec<Vec<String>>) -> Result<Self> {
        if sentences.len() != tags.len() {
            return Err(Error::LengthMismatch { left: sentences.len(), right: tags.len() });
        }
        let mut ids: BTreeMap<String, u32> = BTreeMap::new();
        let mut tag_names = Vec::new();
        let mut tag_ids = Vec::with_capacity(tags.len());
        for (s, t) in sentences.iter().zip(tags) {
            if s.len() != t.len() {
                return Err(Error::LengthMismatch { left: s.len(), right: t.len() });
            }
            tag_ids.push(
                t.into_iter()
                    .map(|name| {
                        *ids.entry(name.clone()).or_insert_with(|| {
                            tag_names.push(name);
                            tag_names.len() as u32 - 1
                        })
                    })
                    .collect(),
            );
        }
        Ok(Self { sentences, tags: tag_ids, tag_names })
    }

    pub fn num_tags(&self) -> usize {
        self.tag_names.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Context windows of width `h` for every token of one encoded sentence.
pub fn sentence_pairs(ids: &[u32], h: usize, gold: Option<&[u32]>) -> Vec<ContextWordPair> {
    let n = ids.len();
    (0..n)
        .map(|t| {
            let mut context = Vec::with_capacity(2 * h);
            for j in 0..h {
                // position t - h + j
                context.push(if t + j >= h { ids[t + j - h] } else { BOS_ID });
            }
            for j in 0..h {
                let pos = t + 1 + j;
                context.push(if pos < n { ids[pos] } else { EOS_ID });
            }
            ContextWordPair { context, word: ids[t], gold: gold.map(|g| g[t]) }
        })
        .collect()
}

/// One pair per token occurrence, sentence by sentence.
pub fn extract_pairs<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocab, h: usize) -> Result<Vec<ContextWordPair>> {
    if h < 1 {
        return Err(Error::InvalidHyper("context width H must be at least 1".into()));
    }
    Ok(sentences
        .iter()
        .flat_map(|s| sentence_pairs(&vocab.encode(s), h, None))
        .collect())
}

/// Like [`extract_pairs`] but attaches gold tag ids.
pub fn extract_tagged_pairs<S: AsRef<str>>(
    sentences: &[Vec<S>],
    tags: &[Vec<u32>],
    vocab: &Vocab,
    h: usize,
) -> Result<Vec<ContextWordPair>> {
    if h < 1 {
        return Err(Error::InvalidHyper("context width H must be at least 1".into()));
    }
    if sentences.len() != tags.len() {
        return Err(Error::LengthMismatch { left: sentences.len(), right: tags.len() });
    }
    let mut out = Vec::new();
    for (s, t) in sentences.iter().zip(tags) {
        if s.len() != t.len() {
            return Err(Error::LengthMismatch { left: s.len(), right: t.len() });
        }
        out.extend(sentence_pairs(&vocab.encode(s), h, Some(t)));
    }
    Ok(out)
}

/// Shuffles with a seeded permutation and chunks into batches of `batch_size`
/// (the last one may be shorter).
pub fn minibatches(pairs: &[ContextWordPair], batch_size: usize, seed: u64) -> Result<Vec<Batch>> {
    if batch_size < 1 {
        return Err(Error::InvalidHyper("batch size must be at least 1".into()));
    }
    if pairs.is_empty() {
        return Err(Error::Empty("pair list"));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order
        .chunks(batch_size)
        .enumerate()
        .map(|(index, idx)| Batch { index, pairs: idx.iter().map(|&i| pairs[i].clone()).collect() })
        .collect())
}

/// One batch per nonempty sentence.
pub fn sentence_batches<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocab, h: usize) -> Result<Vec<Batch>> {
    if h < 1 {
        return Err(Error::InvalidHyper("context width H must be at least 1".into()));
    }
    Ok(sentences
        .iter()
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(index, s)| Batch { index, pairs: sentence_pairs(&vocab.encode(s), h, None) })
        .collect())
}

/// Splits `pairs` (in order) into consecutive batches of exactly `batch_size`.
pub fn contiguous_partition(pairs: &[ContextWordPair], batch_size: usize) -> Vec<Batch> {
    pairs
        .chunks(batch_size.max(1))
        .enumerate()
        .map(|(index, c)| Batch { index, pairs: c.to_vec() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sents(v: &[&str]) -> Vec<Vec<String>> {
        v.iter().map(|s| s.split(' ').map(String::from).collect()).collect()
    }

    #[test]
    fn frequency_ordering() {
        let v = Vocab::build(&sents(&["a b a"]), 1).unwrap();
        assert_eq!(v.count(v.id("a")), 2);
        assert_eq!(v.count(v.id("b")), 1);
        assert!(v.id("a") < v.id("b"));
        assert_eq!(v.id("a"), NUM_RESERVED as u32);
    }

    #[test]
    fn ties_by_first_occurrence() {
        let v = Vocab::build(&sents(&["z y x y z x"]), 1).unwrap();
        assert_eq!(&v.words()[3..], &["z", "y", "x"]);
    }

    #[test]
    fn min_count_cutoff() {
        let v = Vocab::build(&sents(&["a b"]), 2).unwrap();
        assert_eq!(v.id("a"), UNK_ID);
        assert_eq!(v.id("b"), UNK_ID);
        assert_eq!(v.len(), NUM_RESERVED);
        assert_eq!(v.count(UNK_ID), 2);
    }

    #[test]
    fn vocab_size_counts_reserved() {
        let v = Vocab::build(&sents(&["a b c a"]), 1).unwrap();
        assert_eq!(v.len(), 3 + 3);
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(Vocab::build(&empty, 1), Err(Error::EmptyCorpus));
        assert!(Vocab::build(&sents(&["a"]), 0).is_err());
    }

    #[test]
    fn chars_cover_kept_words() {
        let v = Vocab::build(&sents(&["ab ba cé"]), 1).unwrap();
        for ch in "abcé".chars() {
            assert_ne!(v.char_id(ch), UNK_CHAR_ID);
        }
        assert_eq!(v.char_id('q'), UNK_CHAR_ID);
        let cs = v.chars_of(v.id("ab"));
        assert_eq!(cs, &[v.char_id('a'), v.char_id('b')]);
        let rebuilt = Vocab::from_word_counts(
            v.words().iter().cloned().zip(v.counts().iter().copied()).collect(),
        )
        .unwrap();
        assert_eq!(rebuilt, v);
    }

    #[test]
    fn worked_example_window() {
        let s = sents(&["had these keys in my"]);
        let v = Vocab::build(&s, 1).unwrap();
        let pairs = extract_pairs(&s, &v, 2).unwrap();
        let keys = &pairs[2];
        assert_eq!(keys.word, v.id("keys"));
        assert_eq!(keys.context, vec![v.id("had"), v.id("these"), v.id("in"), v.id("my")]);
    }

    #[test]
    fn single_token_window() {
        let s = sents(&["a"]);
        let v = Vocab::build(&s, 1).unwrap();
        let pairs = extract_pairs(&s, &v, 1).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].context, vec![BOS_ID, EOS_ID]);
        assert_eq!(pairs[0].word, v.id("a"));
    }

    #[test]
    fn one_pair_per_token() {
        let s = sents(&["a b c d e f g", "h i"]);
        let v = Vocab::build(&s, 1).unwrap();
        assert_eq!(extract_pairs(&s, &v, 3).unwrap().len(), 9);
        assert!(extract_pairs(&s, &v, 0).is_err());
    }

    #[test]
    fn window_correctness_exhaustive() {
        for len in 1..7usize {
            let toks: Vec<String> = (0..len).map(|i| alloc::format!("w{i}")).collect();
            let s = vec![toks];
            let v = Vocab::build(&s, 1).unwrap();
            let ids = v.encode(&s[0]);
            for h in 1..4usize {
                let pairs = extract_pairs(&s, &v, h).unwrap();
                for (t, p) in pairs.iter().enumerate() {
                    assert_eq!(p.context.len(), 2 * h);
                    for j in 0..2 * h {
                        let expected = if j < h {
                            let pos = t as isize - h as isize + j as isize;
                            if pos < 0 { BOS_ID } else { ids[pos as usize] }
                        } else {
                            let pos = t + 1 + (j - h);
                            if pos >= len { EOS_ID } else { ids[pos] }
                        };
                        assert_eq!(p.context[j], expected, "len {len} h {h} t {t} j {j}");
                    }
                }
            }
        }
    }

    fn dummy_pairs(n: usize) -> Vec<ContextWordPair> {
        (0..n).map(|i| ContextWordPair { context: vec![0, 1], word: i as u32, gold: None }).collect()
    }

    #[test]
    fn minibatch_sizes() {
        let b = minibatches(&dummy_pairs(6), 2, 7).unwrap();
        assert_eq!(b.iter().map(Batch::len).collect::<Vec<_>>(), vec![2, 2, 2]);
        let b = minibatches(&dummy_pairs(5), 2, 7).unwrap();
        assert_eq!(b.iter().map(Batch::len).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert!(minibatches(&[], 2, 0).is_err());
        assert!(minibatches(&dummy_pairs(3), 0, 0).is_err());
    }

    #[test]
    fn minibatches_are_deterministic_and_partition() {
        let pairs = dummy_pairs(50);
        let a = minibatches(&pairs, 8, 3).unwrap();
        assert_eq!(a, minibatches(&pairs, 8, 3).unwrap());
        assert_ne!(a, minibatches(&pairs, 8, 4).unwrap());
        let mut words: Vec<u32> = a.iter().flat_map(|b| b.pairs.iter().map(|p| p.word)).collect();
        words.sort();
        assert_eq!(words, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn sentence_batching() {
        let s = sents(&["a b c", "d e f g"]);
        let v = Vocab::build(&s, 1).unwrap();
        let b = sentence_batches(&s, &v, 2).unwrap();
        assert_eq!(b.iter().map(Batch::len).collect::<Vec<_>>(), vec![3, 4]);
        let single = sents(&["a b"]);
        assert_eq!(sentence_batches(&single, &v, 1).unwrap().len(), 1);

        let mut from_batches: Vec<_> = b.into_iter().flat_map(|b| b.pairs).collect();
        let mut direct = extract_pairs(&s, &v, 2).unwrap();
        from_batches.sort_by_key(|p| (p.word, p.context.clone()));
        direct.sort_by_key(|p| (p.word, p.context.clone()));
        assert_eq!(from_batches, direct);
    }

    proptest! {
        #[test]
        fn round_trip_and_conservation(
            raw in proptest::collection::vec(proptest::collection::vec("[a-e]{1,3}", 1..8), 1..6),
            m in 1usize..10,
            seed in 0u64..100,
        ) {
            let v = Vocab::build(&raw, 1).unwrap();
            for w in raw.iter().flatten() {
                prop_assert_eq!(v.word(v.id(w)), w.as_str());
            }
            let pairs = extract_pairs(&raw, &v, 2).unwrap();
            let total: usize = raw.iter().map(Vec::len).sum();
            prop_assert_eq!(pairs.len(), total);
            let mb: usize = minibatches(&pairs, m, seed).unwrap().iter().map(Batch::len).sum();
            prop_assert_eq!(mb, total);
            let sb: usize = sentence_batches(&raw, &v, 2).unwrap().iter().map(Batch::len).sum();
            prop_assert_eq!(sb, total);
        }
    }
}
