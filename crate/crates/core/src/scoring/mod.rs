//! The scorer contract and the decision/ranking layer built on it.
//!
//! Every scorer maps `(assay, statement)` to a value in `[0, 1]`. On top of
//! that, [`predict`] applies either an explicit threshold or the scorer's own
//! decision rule, and [`rank_statements`] yields the deterministic ranking
//! that drives the hit-and-miss simulation and curation.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Bioassay, Corpus, SemanticStatement};
use crate::error::{Error, Result};
use crate::pairgen::SamplingConfig;

mod frequency;
mod lexical;
mod oracle;
pub mod text;

pub use frequency::{FrequencyFactory, FrequencyModel, RankedFrequency};
pub use lexical::{LexicalFactory, LexicalModel, LexicalParams, NegativeRefresh};
pub use oracle::GoldOracle;

/// Decision point for probabilistic scorers when no threshold is given.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    /// Set when the statement is outside the model's vocabulary; the value is
    /// then 0.0.
    pub unknown_statement: bool,
}

impl Score {
    pub fn known(value: f64) -> Self {
        Score {
            value,
            unknown_statement: false,
        }
    }

    pub fn unknown() -> Self {
        Score {
            value: 0.0,
            unknown_statement: true,
        }
    }
}

pub trait Scorer: Send + Sync {
    /// Short identifier used in reports.
    fn name(&self) -> &str;

    /// One score per statement, in input order, each in `[0, 1]`.
    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>>;

    /// The scorer's own decision rule, used when the caller gives no threshold.
    fn accepts(&self, _statement: &SemanticStatement, score: &Score) -> bool {
        score.value >= DEFAULT_THRESHOLD
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        (**self).score_batch(assay, statements)
    }

    fn accepts(&self, statement: &SemanticStatement, score: &Score) -> bool {
        (**self).accepts(statement, score)
    }
}

impl<S: Scorer + ?Sized> Scorer for std::sync::Arc<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        (**self).score_batch(assay, statements)
    }

    fn accepts(&self, statement: &SemanticStatement, score: &Score) -> bool {
        (**self).accepts(statement, score)
    }
}

/// Produces a trained scorer from a training corpus. Cross-validation and
/// sweeps call this once per fold and sweep point.
pub trait ScorerFactory: Sync {
    fn train(&self, train: &Corpus, sampling: &SamplingConfig) -> Result<Box<dyn Scorer>>;
}

impl<F> ScorerFactory for F
where
    F: Fn(&Corpus, &SamplingConfig) -> Result<Box<dyn Scorer>> + Sync,
{
    fn train(&self, train: &Corpus, sampling: &SamplingConfig) -> Result<Box<dyn Scorer>> {
        self(train, sampling)
    }
}

pub fn score(model: &dyn Scorer, assay: &Bioassay, statement: &SemanticStatement) -> Result<Score> {
    let scores = model.score_batch(assay, &[statement])?;
    scores
        .into_iter()
        .next()
        .ok_or_else(|| Error::Model(format!("{} returned no score", model.name())))
}

fn check_threshold(threshold: Option<f64>) -> Result<()> {
    match threshold {
        Some(t) if !(0.0..=1.0).contains(&t) => Err(Error::InvalidArgument(format!(
            "threshold {t} outside [0, 1]"
        ))),
        _ => Ok(()),
    }
}

/// Binary decision for an already computed score.
pub fn decide(model: &dyn Scorer, statement: &SemanticStatement, score: &Score, threshold: Option<f64>) -> bool {
    match threshold {
        Some(t) => score.value >= t,
        None => model.accepts(statement, score),
    }
}

/// Candidates classified positive, in candidate order. With `threshold`
/// the rule is `score >= threshold`; without it the model's own rule applies.
pub fn predict(
    model: &dyn Scorer,
    assay: &Bioassay,
    candidates: &[&SemanticStatement],
    threshold: Option<f64>,
) -> Result<Vec<SemanticStatement>> {
    check_threshold(threshold)?;
    let scores = model.score_batch(assay, candidates)?;
    Ok(candidates
        .iter()
        .zip(&scores)
        .filter(|(s, score)| decide(model, s, score, threshold))
        .map(|(s, _)| (*s).clone())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedStatement {
    pub statement: SemanticStatement,
    pub score: Score,
}

/// Descending score; ties broken by ascending statement text, then by
/// predicate/object for full determinism.
pub fn ranking_order(a: (&SemanticStatement, f64), b: (&SemanticStatement, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then_with(|| a.0.text().cmp(&b.0.text()))
        .then_with(|| a.0.cmp(b.0))
}

pub fn rank_statements(
    model: &dyn Scorer,
    assay: &Bioassay,
    candidates: &[&SemanticStatement],
) -> Result<Vec<RankedStatement>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let scores = model.score_batch(assay, candidates)?;
    if scores.len() != candidates.len() {
        return Err(Error::Model(format!(
            "{} returned {} scores for {} statements",
            model.name(),
            scores.len(),
            candidates.len()
        )));
    }
    let mut ranked: Vec<RankedStatement> = candidates
        .iter()
        .zip(scores)
        .map(|(s, score)| RankedStatement {
            statement: (*s).clone(),
            score,
        })
        .collect();
    ranked.sort_by(|a, b| ranking_order((&a.statement, a.score.value), (&b.statement, b.score.value)));
    Ok(ranked)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A persisted native model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoredModel {
    Frequency(FrequencyModel),
    Lexical(LexicalModel),
}

impl StoredModel {
    /// The statements the model knows, usable as a candidate set.
    pub fn statements(&self) -> Vec<SemanticStatement> {
        match self {
            StoredModel::Frequency(m) => m.ranking().iter().map(|r| r.statement.clone()).collect(),
            StoredModel::Lexical(m) => m.statements().cloned().collect(),
        }
    }

    pub fn into_scorer(self) -> Box<dyn Scorer> {
        match self {
            StoredModel::Frequency(m) => Box::new(m),
            StoredModel::Lexical(m) => Box::new(m),
        }
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: u32,
    #[serde(flatten)]
    model: &'a StoredModel,
}

#[derive(Deserialize)]
struct ModelFileIn {
    format_version: u32,
    #[serde(flatten)]
    model: serde_json::Value,
}

pub fn model_to_string(model: &StoredModel) -> Result<String> {
    serde_json::to_string_pretty(&ModelFileOut {
        format_version: MODEL_FORMAT_VERSION,
        model,
    })
    .map_err(|e| Error::Model(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<StoredModel> {
    let file: ModelFileIn = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedModelVersion {
            found: file.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let model: StoredModel =
        serde_json::from_value(file.model).map_err(|e| Error::Model(e.to_string()))?;
    Ok(match model {
        StoredModel::Frequency(m) => StoredModel::Frequency(m.reindexed()),
        StoredModel::Lexical(m) => StoredModel::Lexical(m.reindexed()),
    })
}

pub fn save_model(path: &Path, model: &StoredModel) -> Result<()> {
    std::fs::write(path, model_to_string(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<StoredModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
