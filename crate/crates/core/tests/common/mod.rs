//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semantify_core::corpus::{AssayRecord, StatementRecord};
use semantify_core::evaluation::{Confusion, EvaluationMode, Mark};
use semantify_core::pairgen::sample_assay_negatives;
use semantify_core::scoring::{score, Scorer};
use semantify_core::{Bioassay, Corpus, SamplingConfig, SemanticStatement};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn statement(p: &str, o: &str) -> SemanticStatement {
    SemanticStatement::new(p, o).unwrap()
}

/// Random small corpus: `assays` assays over a vocabulary of at most
/// `vocabulary` statements, 1..=max_len statements each.
pub fn random_records(seed: u64, assays: usize, vocabulary: usize, max_len: usize) -> Vec<AssayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<(String, String)> = (0..vocabulary)
        .map(|i| (format!("pred {}", i % 3), format!("object {i}")))
        .collect();
    let words = ["kinase", "object", "luminescence", "cell", "protein", "assay", "binding"];
    (0..assays)
        .map(|a| {
            let k = rng.gen_range(1..=max_len.min(vocabulary));
            let mut description: Vec<String> = (0..rng.gen_range(2..8))
                .map(|_| words.choose(&mut rng).unwrap().to_string())
                .collect();
            let chosen: Vec<&(String, String)> = pool.choose_multiple(&mut rng, k).collect();
            for (_, o) in &chosen {
                if rng.gen_bool(0.5) {
                    description.push(o.clone());
                }
            }
            AssayRecord {
                id: format!("A{a:03}"),
                description: description.join(" "),
                statements: chosen
                    .into_iter()
                    .map(|(p, o)| StatementRecord {
                        predicate: p.clone(),
                        object: o.clone(),
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn random_corpus(seed: u64, assays: usize, vocabulary: usize, max_len: usize) -> Corpus {
    Corpus::from_records(random_records(seed, assays, vocabulary, max_len))
        .unwrap()
        .0
}

/// Statement-level confusion counts recomputed pair by pair with one score
/// request per pair.
pub fn brute_confusion(
    model: &dyn Scorer,
    test: &Corpus,
    mode: EvaluationMode,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
) -> Confusion {
    let mut c = Confusion::default();
    for assay in test.assays() {
        let gold: HashSet<_> = assay.annotation.ids().iter().copied().collect();
        let universe: Vec<_> = match mode {
            EvaluationMode::FullVocabulary => test.vocabulary().ids().collect(),
            EvaluationMode::SampledPair => {
                let mut u: Vec<_> = assay.annotation.ids().to_vec();
                u.extend(sample_assay_negatives(test, assay, sampling));
                u
            }
        };
        for id in universe {
            let s = test.vocabulary().statement(id);
            let sc = score(model, &assay.assay, s).unwrap();
            let predicted = match threshold {
                Some(t) => sc.value >= t,
                None => model.accepts(s, &sc),
            };
            let is_gold = gold.contains(&id);
            if is_gold && predicted {
                c.true_positives += 1;
            } else if is_gold {
                c.false_negatives += 1;
            } else if predicted {
                c.false_positives += 1;
            } else {
                c.true_negatives += 1;
            }
        }
    }
    c
}

/// Hit-and-miss replay that re-scores the remaining candidates after every
/// step and takes the best one, the literal reading of the protocol.
pub fn brute_hit_and_miss(
    model: &dyn Scorer,
    assay: &Bioassay,
    gold: &[&SemanticStatement],
    candidates: &[&SemanticStatement],
) -> Vec<Mark> {
    let mut remaining: Vec<&SemanticStatement> = Vec::new();
    for c in candidates {
        if !remaining.contains(c) {
            remaining.push(c);
        }
    }
    let mut gold_left: BTreeSet<&SemanticStatement> = gold.iter().copied().collect();
    let mut marks = Vec::new();
    while !gold_left.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in remaining.iter().enumerate() {
            let v = score(model, assay, s).unwrap().value;
            best = match best {
                None => Some((i, v)),
                Some((j, w)) => {
                    let better = v > w
                        || (v == w && (s.text(), *s) < (remaining[j].text(), remaining[j]));
                    if better {
                        Some((i, v))
                    } else {
                        Some((j, w))
                    }
                }
            };
        }
        let (i, _) = best.expect("gold statements are among the candidates");
        let top = remaining.remove(i);
        marks.push(if gold_left.remove(top) { Mark::Hit } else { Mark::Miss });
    }
    marks
}

/// Training-frequency table counted assay by assay.
pub fn brute_frequencies(train: &Corpus) -> BTreeMap<SemanticStatement, usize> {
    let mut counts = BTreeMap::new();
    for a in train.assays() {
        let distinct: BTreeSet<_> = train.statements_of(a).collect();
        for s in distinct {
            *counts.entry(s.clone()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn f1_of(c: &Confusion) -> f64 {
    let tp = c.true_positives as f64;
    let p = if c.true_positives + c.false_positives == 0 { 0.0 } else { tp / (c.true_positives + c.false_positives) as f64 };
    let r = if c.true_positives + c.false_negatives == 0 { 0.0 } else { tp / (c.true_positives + c.false_negatives) as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Mean fold F1 of the frequency baseline under the cross-validation
/// protocol, recomputed without the scoring or evaluation modules: counts,
/// ranking, cutoff fit and confusion counts are all redone here.
pub fn brute_frequency_cv(
    corpus: &Corpus,
    folds: usize,
    sampling: &SamplingConfig,
    mode: EvaluationMode,
) -> (Vec<Confusion>, f64) {
    use semantify_core::evaluation::{fold_sampling, protocol_folds};
    use semantify_core::pairgen::build_training_set;

    let split = protocol_folds(corpus, folds, sampling).unwrap();
    let mut confusions = Vec::new();
    for (i, fold) in split.iter().enumerate() {
        let (train_sampling, eval_sampling) = fold_sampling(sampling, i);
        let counts = brute_frequencies(&fold.train);
        let mut order: Vec<(&SemanticStatement, usize)> = corpus
            .vocabulary()
            .iter()
            .map(|(_, s)| (s, counts.get(s).copied().unwrap_or(0)))
            .collect();
        order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.text().cmp(&b.0.text())));
        let rank_of = |s: &SemanticStatement| order.iter().position(|(t, _)| *t == s).unwrap();

        let pairs = build_training_set(&fold.train, &train_sampling);
        // F1 = 2tp / (2tp + fp + fn), compared as exact fractions
        let mut best: Option<(usize, u128, u128)> = None;
        for k in 0..=order.len() {
            let mut c = Confusion::default();
            for p in &pairs {
                let s = fold.train.vocabulary().statement(p.statement_id);
                c.record(p.label, rank_of(s) < k);
            }
            let num = 2 * c.true_positives as u128;
            let den = (2 * c.true_positives + c.false_positives + c.false_negatives).max(1) as u128;
            let better = match best {
                None => true,
                Some((_, n, d)) => num * d > n * den,
            };
            if better {
                best = Some((k, num, den));
            }
        }
        let best = best.unwrap();
        let k = best.0;

        let mut c = Confusion::default();
        for assay in fold.test.assays() {
            let gold: HashSet<_> = assay.annotation.ids().iter().copied().collect();
            let universe: Vec<_> = match mode {
                EvaluationMode::FullVocabulary => fold.test.vocabulary().ids().collect(),
                EvaluationMode::SampledPair => {
                    let mut u: Vec<_> = assay.annotation.ids().to_vec();
                    u.extend(sample_assay_negatives(&fold.test, assay, &eval_sampling));
                    u
                }
            };
            for id in universe {
                let s = fold.test.vocabulary().statement(id);
                c.record(gold.contains(&id), rank_of(s) < k);
            }
        }
        confusions.push(c);
    }
    let mean = confusions.iter().map(f1_of).sum::<f64>() / confusions.len() as f64;
    (confusions, mean)
}
