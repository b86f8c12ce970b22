//! Binary reformulation of multi-label annotation: every gold statement of an
//! assay yields a positive pair and a seeded, uniform, without-replacement
//! sample of the remaining vocabulary yields the negatives.

use std::io::{BufWriter, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedAssay, Corpus, SemanticStatement, StatementId};
use crate::seed;

/// One `(assay, statement, label)` classification instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub assay_id: String,
    pub statement_id: StatementId,
    pub label: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Negatives drawn per assay, clamped to the size of the complement.
    pub false_per_assay: usize,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(false_per_assay: usize, seed: u64) -> Self {
        SamplingConfig {
            false_per_assay,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatementRendering {
    /// `predicate object`
    #[default]
    Space,
    /// `predicate -> object`
    Arrow,
}

pub fn render_statement(statement: &SemanticStatement, rendering: StatementRendering) -> String {
    match rendering {
        StatementRendering::Space => statement.text(),
        StatementRendering::Arrow => format!("{} -> {}", statement.predicate(), statement.object()),
    }
}

/// Text form of a statement used as the second sentence of a pair.
pub fn statement_text(statement: &SemanticStatement) -> String {
    render_statement(statement, StatementRendering::Space)
}

/// The texts a pair classifier sees: the assay description and the
/// rendered statement.
pub fn pair_texts<'c>(corpus: &'c Corpus, pair: &LabeledPair) -> Option<(&'c str, String)> {
    let assay = corpus.get(&pair.assay_id)?;
    let statement = corpus.vocabulary().get(pair.statement_id)?;
    Some((assay.assay.description.as_str(), statement_text(statement)))
}

pub fn positive_pairs(corpus: &Corpus) -> Vec<LabeledPair> {
    corpus
        .assays()
        .iter()
        .flat_map(|a| {
            a.annotation.ids().iter().map(move |&statement_id| LabeledPair {
                assay_id: a.assay.id.clone(),
                statement_id,
                label: true,
            })
        })
        .collect()
}

/// Statements of the vocabulary absent from the assay's gold set, in id order.
pub fn complement(corpus: &Corpus, assay: &AnnotatedAssay) -> Vec<StatementId> {
    let gold = assay.annotation.to_set();
    corpus
        .vocabulary()
        .ids()
        .filter(|id| !gold.contains(id))
        .collect()
}

/// Negatives for one assay. The draw depends only on the config seed and the
/// assay id, so it is independent of corpus order and of other assays.
pub fn sample_assay_negatives(
    corpus: &Corpus,
    assay: &AnnotatedAssay,
    config: &SamplingConfig,
) -> Vec<StatementId> {
    let pool = complement(corpus, assay);
    let n = config.false_per_assay.min(pool.len());
    let mut rng = seed::rng(seed::derive(config.seed, &format!("negatives/{}", assay.assay.id)));
    pool.choose_multiple(&mut rng, n).copied().collect()
}

pub fn sample_negatives(corpus: &Corpus, config: &SamplingConfig) -> Vec<LabeledPair> {
    corpus
        .assays()
        .par_iter()
        .map(|a| {
            sample_assay_negatives(corpus, a, config)
                .into_iter()
                .map(|statement_id| LabeledPair {
                    assay_id: a.assay.id.clone(),
                    statement_id,
                    label: false,
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Positives plus sampled negatives, shuffled by the config seed.
pub fn build_training_set(corpus: &Corpus, config: &SamplingConfig) -> Vec<LabeledPair> {
    let mut pairs = positive_pairs(corpus);
    pairs.extend(sample_negatives(corpus, config));
    pairs.shuffle(&mut seed::rng(seed::derive(config.seed, seed::label::SHUFFLE)));
    pairs
}

/// Writes pairs as one `{"assay_id", "statement_id", "label"}` object per line.
pub fn write_pairs_jsonl(pairs: &[LabeledPair], writer: impl Write) -> std::io::Result<()> {
    let mut writer = BufWriter::new(writer);
    for pair in pairs {
        serde_json::to_writer(&mut writer, pair)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
