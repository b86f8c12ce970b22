mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use semantify_core::pairgen::build_training_set;
use semantify_core::scoring::{
    model_from_str, model_to_string, predict, rank_statements, FrequencyModel, GoldOracle,
    LexicalModel, LexicalParams, StoredModel,
};
use semantify_core::{Corpus, SamplingConfig, Scorer, SemanticStatement};

use common::{brute_frequencies, random_corpus};

fn candidates(corpus: &Corpus) -> Vec<&SemanticStatement> {
    corpus.vocabulary().iter().map(|(_, s)| s).collect()
}

fn small_lexical(corpus: &Corpus, seed: u64) -> LexicalModel {
    let params = LexicalParams {
        epochs: 40,
        ..Default::default()
    };
    LexicalModel::train(corpus, &SamplingConfig::new(4, seed), &params).unwrap()
}

/// F1 of "positive iff rank < k" recomputed from scratch for one cutoff.
fn cutoff_f1(corpus: &Corpus, model: &FrequencyModel, pairs: &[semantify_core::LabeledPair], k: usize) -> f64 {
    let mut c = semantify_core::evaluation::Confusion::default();
    for p in pairs {
        let s = corpus.vocabulary().statement(p.statement_id);
        let predicted = model.ranking().iter().take(k).any(|r| &r.statement == s);
        c.record(p.label, predicted);
    }
    common::f1_of(&c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frequency_scores_match_a_recount(seed in any::<u64>(), n in 1usize..30, v in 1usize..20) {
        let corpus = random_corpus(seed, n, v, 6);
        let model = FrequencyModel::train(&corpus).unwrap();
        let counts = brute_frequencies(&corpus);
        let max = *counts.values().max().unwrap() as f64;
        let assay = &corpus.assays()[0].assay;
        let scores = model.score_batch(assay, &candidates(&corpus)).unwrap();
        for (s, score) in candidates(&corpus).into_iter().zip(scores) {
            prop_assert_eq!(score.value, counts[s] as f64 / max);
        }
        // rank order: descending count, ties by text
        let mut expected: Vec<(&SemanticStatement, usize)> = counts.iter().map(|(s, c)| (s, *c)).collect();
        expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.text().cmp(&b.0.text())));
        let got: Vec<&SemanticStatement> = model.ranking().iter().map(|r| &r.statement).collect();
        let want: Vec<&SemanticStatement> = expected.into_iter().map(|(s, _)| s).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn fitted_cutoff_is_the_smallest_f1_maximizer(seed in any::<u64>(), n in 1usize..25, f in 0usize..8) {
        let corpus = random_corpus(seed, n, 14, 6);
        let sampling = SamplingConfig::new(f, seed);
        let model = FrequencyModel::train_fitted(&corpus, &sampling).unwrap();
        let pairs = build_training_set(&corpus, &sampling);
        let scores: Vec<f64> = (0..=model.ranking().len()).map(|k| cutoff_f1(&corpus, &model, &pairs, k)).collect();
        let best = scores.iter().cloned().fold(f64::MIN, f64::max);
        let k = scores.iter().position(|&s| s == best).unwrap();
        prop_assert_eq!(model.decision_rank(), k);
    }

    #[test]
    fn ranking_is_a_permutation_and_predict_is_monotone(seed in any::<u64>(), n in 2usize..12, t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let corpus = random_corpus(seed, n, 12, 5);
        let model = small_lexical(&corpus, seed);
        let cands = candidates(&corpus);
        for a in corpus.assays() {
            let ranked = rank_statements(&model, &a.assay, &cands).unwrap();
            prop_assert_eq!(ranked.len(), cands.len());
            let set: HashSet<_> = ranked.iter().map(|r| &r.statement).collect();
            prop_assert_eq!(set.len(), cands.len());
            for w in ranked.windows(2) {
                prop_assert!(w[0].score.value >= w[1].score.value);
            }
            for r in &ranked {
                prop_assert!((0.0..=1.0).contains(&r.score.value));
            }
            let (lo, hi) = if t <= u { (t, u) } else { (u, t) };
            let loose: HashSet<_> = predict(&model, &a.assay, &cands, Some(lo)).unwrap().into_iter().collect();
            let strict: HashSet<_> = predict(&model, &a.assay, &cands, Some(hi)).unwrap().into_iter().collect();
            prop_assert!(strict.is_subset(&loose));
        }
    }

    #[test]
    fn stored_models_score_identically(seed in any::<u64>(), n in 2usize..12) {
        let corpus = random_corpus(seed, n, 10, 4);
        let lexical = small_lexical(&corpus, seed);
        let frequency = FrequencyModel::train_fitted(&corpus, &SamplingConfig::new(3, seed)).unwrap();
        let cands = candidates(&corpus);
        let assay = &corpus.assays()[0].assay;
        for stored in [StoredModel::Lexical(lexical), StoredModel::Frequency(frequency)] {
            let text = model_to_string(&stored).unwrap();
            let back = model_from_str(&text).unwrap();
            prop_assert_eq!(model_to_string(&back).unwrap(), text);
            let a = stored.into_scorer();
            let b = back.into_scorer();
            prop_assert_eq!(a.score_batch(assay, &cands).unwrap(), b.score_batch(assay, &cands).unwrap());
            prop_assert_eq!(
                predict(&a, assay, &cands, None).unwrap(),
                predict(&b, assay, &cands, None).unwrap()
            );
        }
    }
}

#[test]
fn threshold_edges() {
    let corpus = random_corpus(5, 6, 10, 4);
    let model = small_lexical(&corpus, 5);
    let cands = candidates(&corpus);
    let assay = &corpus.assays()[0].assay;
    assert_eq!(predict(&model, assay, &cands, Some(0.0)).unwrap().len(), cands.len());
    assert!(predict(&model, assay, &cands, Some(1.5)).is_err());
    assert!(predict(&model, assay, &[], None).unwrap().is_empty());
}

#[test]
fn oracle_scores_gold_above_everything_else() {
    let corpus = random_corpus(8, 10, 15, 5);
    let oracle = GoldOracle::new(&corpus);
    let cands = candidates(&corpus);
    for a in corpus.assays() {
        let gold: HashSet<_> = corpus.statements_of(a).collect();
        let predicted: HashSet<_> = predict(&oracle, &a.assay, &cands, None).unwrap().into_iter().collect();
        assert_eq!(predicted.iter().collect::<HashSet<_>>(), gold);
    }
}

#[test]
fn lexical_learns_text_overlap_on_the_fixture() {
    let corpus = semantify_core::synth::corpus(&semantify_core::synth::SynthConfig {
        assays: 80,
        vocabulary: 60,
        min_statements: 3,
        max_statements: 8,
        mention_rate: 0.9,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let model = LexicalModel::train(&corpus, &SamplingConfig::new(10, 2), &LexicalParams::default()).unwrap();
    let (w, _) = model.weights();
    assert!(w[0] > 0.0 || w[1] > 0.0, "overlap weights {w:?}");
}
