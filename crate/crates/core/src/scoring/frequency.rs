use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ranking_order, Score, Scorer, ScorerFactory};
use crate::corpus::{Bioassay, Corpus, SemanticStatement};
use crate::error::{Error, Result};
use crate::pairgen::{build_training_set, LabeledPair, SamplingConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedFrequency {
    pub statement: SemanticStatement,
    /// Training assays annotated with the statement.
    pub frequency: usize,
}

/// Assay-independent baseline: a statement scores its training frequency
/// divided by the largest training frequency. A pair is classified positive
/// when the statement ranks among the top `decision_rank` statements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyModel {
    training_assays: usize,
    max_frequency: usize,
    /// Every training-vocabulary statement in rank order: descending
    /// frequency, ties by ascending statement text.
    ranking: Vec<RankedFrequency>,
    decision_rank: usize,
    decision_rank_fitted: bool,
    #[serde(skip)]
    rank_of: HashMap<SemanticStatement, usize>,
}

impl FrequencyModel {
    /// Counts frequencies over `train`. The decision rank falls back to the
    /// rounded mean annotation length.
    pub fn train(train: &Corpus) -> Result<FrequencyModel> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let vocabulary = train.vocabulary();
        let mut ranking: Vec<RankedFrequency> = vocabulary
            .iter()
            .map(|(id, s)| RankedFrequency {
                statement: s.clone(),
                frequency: vocabulary.frequency(id),
            })
            .collect();
        ranking.sort_by(|a, b| {
            ranking_order(
                (&a.statement, a.frequency as f64),
                (&b.statement, b.frequency as f64),
            )
        });
        let total: usize = train.assays().iter().map(|a| a.annotation.len()).sum();
        let mean = total as f64 / train.len() as f64;
        let model = FrequencyModel {
            training_assays: train.len(),
            max_frequency: ranking.first().map_or(0, |r| r.frequency),
            ranking,
            decision_rank: mean.round() as usize,
            decision_rank_fitted: false,
            rank_of: HashMap::new(),
        };
        Ok(model.reindexed())
    }

    /// Trains and fits the decision rank to maximize pair-level F1 on the
    /// training set built with `sampling`.
    pub fn train_fitted(train: &Corpus, sampling: &SamplingConfig) -> Result<FrequencyModel> {
        let mut model = FrequencyModel::train(train)?;
        let pairs = build_training_set(train, sampling);
        model.fit_decision_rank(train, &pairs);
        Ok(model)
    }

    /// Picks the rank cutoff `K` maximizing F1 of "positive iff rank < K"
    /// over `pairs`; the smallest such `K` wins ties.
    pub fn fit_decision_rank(&mut self, corpus: &Corpus, pairs: &[LabeledPair]) {
        let n = self.ranking.len();
        let mut positives_at = vec![0usize; n + 1];
        let mut negatives_at = vec![0usize; n + 1];
        for pair in pairs {
            let rank = corpus
                .vocabulary()
                .get(pair.statement_id)
                .and_then(|s| self.rank(s))
                .unwrap_or(n);
            if pair.label {
                positives_at[rank] += 1;
            } else {
                negatives_at[rank] += 1;
            }
        }
        let total_positives: usize = positives_at.iter().sum();
        let (mut tp, mut fp) = (0usize, 0usize);
        let (mut best_k, mut best_f1) = (0, f1(0, 0, total_positives));
        for k in 1..=n {
            tp += positives_at[k - 1];
            fp += negatives_at[k - 1];
            let f = f1(tp, fp, total_positives - tp);
            if f > best_f1 {
                best_f1 = f;
                best_k = k;
            }
        }
        self.decision_rank = best_k;
        self.decision_rank_fitted = true;
    }

    pub(crate) fn reindexed(mut self) -> Self {
        self.rank_of = self
            .ranking
            .iter()
            .enumerate()
            .map(|(i, r)| (r.statement.clone(), i))
            .collect();
        self
    }

    /// Zero-based rank, `None` for statements outside the training vocabulary.
    pub fn rank(&self, statement: &SemanticStatement) -> Option<usize> {
        self.rank_of.get(statement).copied()
    }

    pub fn ranking(&self) -> &[RankedFrequency] {
        &self.ranking
    }

    pub fn decision_rank(&self) -> usize {
        self.decision_rank
    }

    pub fn decision_rank_fitted(&self) -> bool {
        self.decision_rank_fitted
    }

    pub fn set_decision_rank(&mut self, k: usize) {
        self.decision_rank = k;
    }

    pub fn training_assays(&self) -> usize {
        self.training_assays
    }

    pub fn score_statement(&self, statement: &SemanticStatement) -> Score {
        match self.rank(statement) {
            Some(r) if self.max_frequency > 0 => {
                Score::known(self.ranking[r].frequency as f64 / self.max_frequency as f64)
            }
            Some(_) => Score::known(0.0),
            None => Score::unknown(),
        }
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denominator = 2 * tp + fp + fn_;
    if denominator == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denominator as f64
    }
}

impl Scorer for FrequencyModel {
    fn name(&self) -> &str {
        "frequency"
    }

    fn score_batch(&self, _assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        Ok(statements.iter().map(|s| self.score_statement(s)).collect())
    }

    fn accepts(&self, statement: &SemanticStatement, _score: &Score) -> bool {
        self.rank(statement).is_some_and(|r| r < self.decision_rank)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FrequencyFactory {
    /// Fit the decision rank per fold instead of using the mean-length fallback.
    pub fit_decision_rank: bool,
}

impl Default for FrequencyFactory {
    fn default() -> Self {
        FrequencyFactory {
            fit_decision_rank: true,
        }
    }
}

impl ScorerFactory for FrequencyFactory {
    fn train(&self, train: &Corpus, sampling: &SamplingConfig) -> Result<Box<dyn Scorer>> {
        let model = if self.fit_decision_rank {
            FrequencyModel::train_fitted(train, sampling)?
        } else {
            FrequencyModel::train(train)?
        };
        Ok(Box::new(model))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AssayRecord, StatementRecord};
    use crate::scoring::{predict, rank_statements};

    fn corpus(rows: &[(&str, &[&str])]) -> Corpus {
        let records = rows
            .iter()
            .map(|(id, objects)| AssayRecord {
                id: id.to_string(),
                description: format!("assay {id}"),
                statements: objects
                    .iter()
                    .map(|o| StatementRecord {
                        predicate: "p".into(),
                        object: o.to_string(),
                    })
                    .collect(),
            })
            .collect();
        Corpus::from_records(records).unwrap().0
    }

    fn st(o: &str) -> SemanticStatement {
        SemanticStatement::new("p", o).unwrap()
    }

    #[test]
    fn scores_are_normalized_hand_counts() {
        let c = corpus(&[("1", &["A", "B"]), ("2", &["A"]), ("3", &["A"])]);
        let m = FrequencyModel::train(&c).unwrap();
        assert_eq!(m.score_statement(&st("A")).value, 1.0);
        assert!((m.score_statement(&st("B")).value - 1.0 / 3.0).abs() < 1e-15);
        let missing = m.score_statement(&st("Z"));
        assert_eq!(missing.value, 0.0);
        assert!(missing.unknown_statement);
    }

    #[test]
    fn single_assay_scores_everything_one() {
        let c = corpus(&[("1", &["A", "B", "C"])]);
        let m = FrequencyModel::train(&c).unwrap();
        for o in ["A", "B", "C"] {
            assert_eq!(m.score_statement(&st(o)).value, 1.0);
        }
    }

    #[test]
    fn empty_training_corpus_errors() {
        let c = corpus(&[("1", &["A"])]);
        let empty = c.subset(&[]).unwrap();
        assert!(matches!(FrequencyModel::train(&empty), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn fallback_rank_is_rounded_mean_length() {
        let c = corpus(&[("1", &["A", "B"]), ("2", &["A", "C", "D"])]);
        // mean 2.5 rounds away from zero
        assert_eq!(FrequencyModel::train(&c).unwrap().decision_rank(), 3);
    }

    #[test]
    fn ranking_is_frequency_then_text() {
        let c = corpus(&[("1", &["b", "a", "c"]), ("2", &["c"])]);
        let m = FrequencyModel::train(&c).unwrap();
        let order: Vec<&str> = m.ranking().iter().map(|r| r.statement.object()).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
        let assay = Bioassay::new("x", "anything");
        let (a, b, cc) = (st("a"), st("b"), st("c"));
        let ranked = rank_statements(&m, &assay, &[&a, &b, &cc]).unwrap();
        let order: Vec<&str> = ranked.iter().map(|r| r.statement.object()).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
    }

    #[test]
    fn fitted_rank_predicts_top_k() {
        // A in 4/4, B in 3/4, C..F once each
        let c = corpus(&[
            ("1", &["A", "B", "C"]),
            ("2", &["A", "B", "D"]),
            ("3", &["A", "B", "E"]),
            ("4", &["A", "F"]),
        ]);
        let m = FrequencyModel::train_fitted(&c, &SamplingConfig::new(3, 4)).unwrap();
        assert!(m.decision_rank_fitted());
        let k = m.decision_rank();
        let statements: Vec<SemanticStatement> = ["A", "B", "C", "D", "E", "F"].iter().map(|o| st(o)).collect();
        let refs: Vec<&SemanticStatement> = statements.iter().collect();
        let predicted = predict(&m, &Bioassay::new("q", "t"), &refs, None).unwrap();
        // brute force: the k statements with highest (frequency, then smallest text)
        let mut by_rank = statements.clone();
        by_rank.sort_by_key(|s| (std::cmp::Reverse(c.vocabulary().frequency(c.vocabulary().id_of(s).unwrap())), s.text()));
        let mut expected: Vec<SemanticStatement> = by_rank.into_iter().take(k).collect();
        expected.sort();
        let mut got = predicted.clone();
        got.sort();
        assert_eq!(got, expected);
        assert!(k >= 1);
    }

    #[test]
    fn fit_matches_brute_force_over_all_cutoffs() {
        let c = corpus(&[
            ("1", &["A", "B", "C"]),
            ("2", &["A", "D"]),
            ("3", &["B", "E", "A"]),
            ("4", &["F", "A"]),
        ]);
        let sampling = SamplingConfig::new(2, 17);
        let pairs = build_training_set(&c, &sampling);
        let m = FrequencyModel::train_fitted(&c, &sampling).unwrap();
        let mut best = (0usize, -1.0f64);
        for k in 0..=m.ranking().len() {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for p in &pairs {
                let positive = m.rank(c.vocabulary().statement(p.statement_id)).unwrap() < k;
                match (positive, p.label) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    _ => {}
                }
            }
            let f = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
            if f > best.1 {
                best = (k, f);
            }
        }
        assert_eq!(m.decision_rank(), best.0);
    }
}
