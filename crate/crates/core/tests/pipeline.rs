use mimax_core::bias_audit::{audit, direct_bias};
use mimax_core::brown::{bigram_counts, brown_cluster, brown_objective, Clustering};
use mimax_core::corpus::{extract_pairs, minibatches, Vocab};
use mimax_core::eval::evaluate_labels;
use mimax_core::model::{induce_all, Hyper, ModelParams};
use mimax_core::objectives::{corpus_objective, objective_gradient, ObjectiveKind};
use mimax_core::optim::{Adam, AdamConfig};
use mimax_core::synth::{sample_hmm, HmmSpec};

fn small_hmm() -> mimax_core::corpus::TaggedCorpus {
    let spec = HmmSpec { states: 3, vocab: 24, tokens: 1200, ..HmmSpec::default() };
    sample_hmm(&spec, 5).unwrap()
}

#[test]
fn adam_steps_raise_the_variational_objective() {
    let corpus = small_hmm();
    let vocab = Vocab::build(&corpus.sentences, 1).unwrap();
    let pairs = extract_pairs(&corpus.sentences, &vocab, 1).unwrap();
    let hyper = Hyper { dim: 10, width: 1, labels: 3, vocab_size: vocab.len(), char_count: vocab.char_count() };
    let mut params = ModelParams::init(hyper, 3).unwrap();
    let before = corpus_objective(&params, &vocab, &pairs, ObjectiveKind::Variational).unwrap();
    let mut adam = Adam::new(AdamConfig { learning_rate: 0.01, ..AdamConfig::default() }, &params);
    for epoch in 0..3 {
        for batch in minibatches(&pairs, 60, epoch).unwrap() {
            let (_, g) = objective_gradient(&params, &vocab, &batch.pairs, ObjectiveKind::Variational).unwrap();
            adam.ascend(&mut params, &g);
        }
    }
    let after = corpus_objective(&params, &vocab, &pairs, ObjectiveKind::Variational).unwrap();
    assert!(after > before + 0.05, "{before} -> {after}");
    assert_eq!(adam.steps() as usize, 3 * pairs.len() / 60);

    let labels = induce_all(&params, &vocab).unwrap();
    let report = evaluate_labels(&labels, 3, &corpus, &vocab).unwrap();
    assert_eq!(report.n_tokens, 1200);
    assert!((0.0..=1.0).contains(&report.m2o));
}

#[test]
fn bias_identity_on_a_sampled_corpus() {
    let corpus = small_hmm();
    let vocab = Vocab::build(&corpus.sentences, 1).unwrap();
    let mut pairs = extract_pairs(&corpus.sentences, &vocab, 2).unwrap();
    pairs.truncate(240);
    let hyper = Hyper { dim: 8, width: 2, labels: 3, vocab_size: vocab.len(), char_count: vocab.char_count() };
    let params = ModelParams::init(hyper, 9).unwrap();
    let partition = minibatches(&pairs, 30, 1).unwrap();
    for which in [ObjectiveKind::Variational, ObjectiveKind::GenBrown] {
        let r = audit(&params, &vocab, &pairs, &partition, which).unwrap();
        assert!(r.direct_residual <= 1e-9);
        let direct = direct_bias(&params, &vocab, &pairs, &partition, which).unwrap();
        assert!(r.epsilon.max_abs_diff(&direct) <= 1e-9);
    }
}

#[test]
fn brown_recovers_hmm_blocks_better_than_one_cluster() {
    let corpus = small_hmm();
    let vocab = Vocab::build(&corpus.sentences, 1).unwrap();
    let table = bigram_counts(&corpus.sentences, &vocab);
    let clustering = brown_cluster(&table, &vocab, 3).unwrap();
    let lumped = Clustering::new(vec![0; vocab.len()], 1).unwrap();
    let value = brown_objective(&clustering, &table).unwrap();
    assert!(value > brown_objective(&lumped, &table).unwrap());

    let words: Vec<usize> = (0..vocab.len()).map(|w| clustering.label(w as u32)).collect();
    let report = evaluate_labels(&words, 3, &corpus, &vocab).unwrap();
    assert!(report.m2o > 0.6, "{}", report.m2o);
}
