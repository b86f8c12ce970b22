use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::text::{overlap, tokens};
use super::{sigmoid, Score, Scorer, ScorerFactory};
use crate::corpus::{Bioassay, Corpus, SemanticStatement};
use crate::error::{Error, Result};
use crate::pairgen::{build_training_set, statement_text, LabeledPair, SamplingConfig};
use crate::seed;

/// When negatives are drawn during lexical training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeRefresh {
    /// One draw for the whole run.
    #[default]
    PerRun,
    /// A fresh draw every epoch.
    PerEpoch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexicalParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub refresh: NegativeRefresh,
}

impl Default for LexicalParams {
    fn default() -> Self {
        LexicalParams {
            epochs: 300,
            learning_rate: 0.5,
            l2: 1e-4,
            refresh: NegativeRefresh::PerRun,
        }
    }
}

const FEATURES: usize = 3;

/// Logistic model over three pair features: log token overlap, the share of
/// statement tokens found in the assay text, and the statement's training
/// frequency prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexicalModel {
    weights: [f64; FEATURES],
    bias: f64,
    params: LexicalParams,
    sampling: SamplingConfig,
    training_assays: usize,
    /// Statement -> fraction of training assays annotated with it.
    priors: Vec<(SemanticStatement, f64)>,
    #[serde(skip)]
    prior_of: HashMap<SemanticStatement, f64>,
}

fn features(assay_tokens: &BTreeSet<String>, statement_tokens: &BTreeSet<String>, prior: f64) -> [f64; FEATURES] {
    let shared = overlap(assay_tokens, statement_tokens);
    let ratio = if statement_tokens.is_empty() {
        0.0
    } else {
        shared as f64 / statement_tokens.len() as f64
    };
    [(shared as f64).ln_1p(), ratio, prior]
}

struct Example {
    x: [f64; FEATURES],
    y: f64,
}

impl LexicalModel {
    /// Builds the training set from `train` with `sampling` (re-drawn every
    /// epoch under [`NegativeRefresh::PerEpoch`]) and fits the weights.
    pub fn train(train: &Corpus, sampling: &SamplingConfig, params: &LexicalParams) -> Result<LexicalModel> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut model = LexicalModel::untrained(train, sampling, params);
        let cache = TokenCache::new(train);
        match params.refresh {
            NegativeRefresh::PerRun => {
                let pairs = build_training_set(train, sampling);
                let examples = model.examples(train, &cache, &pairs);
                for _ in 0..params.epochs {
                    model.step(&examples);
                }
            }
            NegativeRefresh::PerEpoch => {
                for epoch in 0..params.epochs {
                    let epoch_sampling = SamplingConfig {
                        seed: seed::derive(sampling.seed, &format!("epoch/{epoch}")),
                        ..*sampling
                    };
                    let pairs = build_training_set(train, &epoch_sampling);
                    let examples = model.examples(train, &cache, &pairs);
                    model.step(&examples);
                }
            }
        }
        Ok(model)
    }

    /// Fits on an explicit pair list; `corpus` resolves assay and statement texts.
    pub fn fit(pairs: &[LabeledPair], corpus: &Corpus, params: &LexicalParams) -> Result<LexicalModel> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no training pairs".into()));
        }
        let mut model = LexicalModel::untrained(corpus, &SamplingConfig::new(0, 0), params);
        let cache = TokenCache::new(corpus);
        let examples = model.examples(corpus, &cache, pairs);
        for _ in 0..params.epochs {
            model.step(&examples);
        }
        Ok(model)
    }

    fn untrained(corpus: &Corpus, sampling: &SamplingConfig, params: &LexicalParams) -> LexicalModel {
        let n = corpus.len().max(1) as f64;
        let priors = corpus
            .vocabulary()
            .iter()
            .map(|(id, s)| (s.clone(), corpus.vocabulary().frequency(id) as f64 / n))
            .collect();
        LexicalModel {
            weights: [0.0; FEATURES],
            bias: 0.0,
            params: *params,
            sampling: *sampling,
            training_assays: corpus.len(),
            priors,
            prior_of: HashMap::new(),
        }
        .reindexed()
    }

    pub(crate) fn reindexed(mut self) -> Self {
        self.prior_of = self.priors.iter().cloned().collect();
        self
    }

    fn examples(&self, corpus: &Corpus, cache: &TokenCache, pairs: &[LabeledPair]) -> Vec<Example> {
        pairs
            .iter()
            .filter_map(|p| {
                let assay_tokens = cache.assays.get(p.assay_id.as_str())?;
                let statement_tokens = cache.statements.get(p.statement_id.index())?;
                let prior = self
                    .prior_of
                    .get(corpus.vocabulary().statement(p.statement_id))
                    .copied()
                    .unwrap_or(0.0);
                Some(Example {
                    x: features(assay_tokens, statement_tokens, prior),
                    y: if p.label { 1.0 } else { 0.0 },
                })
            })
            .collect()
    }

    /// One full-batch gradient step on the mean logistic loss plus L2.
    fn step(&mut self, examples: &[Example]) {
        if examples.is_empty() {
            return;
        }
        let mut grad = [0.0; FEATURES];
        let mut grad_bias = 0.0;
        for e in examples {
            let err = sigmoid(self.linear(&e.x)) - e.y;
            for (g, x) in grad.iter_mut().zip(e.x) {
                *g += err * x;
            }
            grad_bias += err;
        }
        let n = examples.len() as f64;
        for (w, g) in self.weights.iter_mut().zip(grad) {
            *w -= self.params.learning_rate * (g / n + self.params.l2 * *w);
        }
        self.bias -= self.params.learning_rate * grad_bias / n;
    }

    fn linear(&self, x: &[f64; FEATURES]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn weights(&self) -> ([f64; FEATURES], f64) {
        (self.weights, self.bias)
    }

    pub fn params(&self) -> &LexicalParams {
        &self.params
    }

    /// Statements the model can score, in training-vocabulary order.
    pub fn statements(&self) -> impl Iterator<Item = &SemanticStatement> {
        self.priors.iter().map(|(s, _)| s)
    }

    pub fn score_text(&self, assay_text: &str, statement: &SemanticStatement) -> Score {
        let Some(&prior) = self.prior_of.get(statement) else {
            return Score::unknown();
        };
        let x = features(&tokens(assay_text), &tokens(&statement_text(statement)), prior);
        Score::known(sigmoid(self.linear(&x)))
    }
}

struct TokenCache<'c> {
    assays: HashMap<&'c str, BTreeSet<String>>,
    statements: Vec<BTreeSet<String>>,
}

impl<'c> TokenCache<'c> {
    fn new(corpus: &'c Corpus) -> Self {
        TokenCache {
            assays: corpus
                .assays()
                .iter()
                .map(|a| (a.assay.id.as_str(), tokens(&a.assay.description)))
                .collect(),
            statements: corpus
                .vocabulary()
                .iter()
                .map(|(_, s)| tokens(&statement_text(s)))
                .collect(),
        }
    }
}

impl Scorer for LexicalModel {
    fn name(&self) -> &str {
        "lexical"
    }

    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        let assay_tokens = tokens(&assay.description);
        Ok(statements
            .iter()
            .map(|s| match self.prior_of.get(*s) {
                Some(&prior) => {
                    let x = features(&assay_tokens, &tokens(&statement_text(s)), prior);
                    Score::known(sigmoid(self.linear(&x)))
                }
                None => Score::unknown(),
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LexicalFactory {
    pub params: LexicalParams,
}

impl ScorerFactory for LexicalFactory {
    fn train(&self, train: &Corpus, sampling: &SamplingConfig) -> Result<Box<dyn Scorer>> {
        Ok(Box::new(LexicalModel::train(train, sampling, &self.params)?))
    }
}
