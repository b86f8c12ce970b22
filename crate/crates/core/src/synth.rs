//! Seeded synthetic corpora shaped like annotated assay collections.
//!
//! Statement popularity follows a Zipf-like curve and every description
//! mentions the object words of part of its gold statements, so both the
//! frequency baseline and text-aware scorers have something to find.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AssayRecord, Corpus, StatementRecord};
use crate::error::{Error, Result};
use crate::seed;

const PREDICATES: &[&str] = &[
    "has assay format",
    "assay measurement type",
    "has detection method",
    "has bioassay type",
    "has assay control",
    "has organism",
    "has participant",
    "has perturbagen",
    "has readout",
    "uses detection instrument",
];

const SYLLABLES: &[&str] = &[
    "lu", "ci", "fer", "ase", "ki", "na", "flu", "or", "es", "cent", "pro", "tein", "cel", "lu",
    "lar", "bind", "ing", "en", "zy", "me", "ab", "sor", "ban", "ce", "ra", "dio", "li", "gand",
    "tox", "vi", "tal", "nu", "cle", "ar", "re", "cep", "tor", "an", "ta", "go",
];

const FILLER: &[&str] = &[
    "compounds", "were", "screened", "plates", "incubated", "measured", "after", "minutes",
    "buffer", "concentration", "signal", "control", "wells", "inhibition", "activity", "library",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub assays: usize,
    pub vocabulary: usize,
    pub min_statements: usize,
    pub max_statements: usize,
    /// Zipf exponent of statement popularity.
    pub skew: f64,
    /// Share of gold statements whose object words appear in the description.
    pub mention_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            assays: 983,
            vocabulary: 1756,
            min_statements: 5,
            max_statements: 92,
            skew: 1.0,
            mention_rate: 0.5,
            seed: 0,
        }
    }
}

fn word(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(2..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect()
}

pub fn records(config: &SynthConfig) -> Result<Vec<AssayRecord>> {
    if config.assays == 0
        || config.min_statements == 0
        || config.min_statements > config.max_statements
        || config.max_statements > config.vocabulary
    {
        return Err(Error::InvalidArgument(format!(
            "inconsistent synthetic corpus config {config:?}"
        )));
    }
    let mut rng = seed::rng(seed::derive(config.seed, "synth"));

    let mut statements = Vec::with_capacity(config.vocabulary);
    let mut seen = std::collections::HashSet::new();
    while statements.len() < config.vocabulary {
        let predicate = PREDICATES[statements.len() % PREDICATES.len()];
        let object = format!("{} {}", word(&mut rng), word(&mut rng));
        if seen.insert((predicate, object.clone())) {
            statements.push((predicate, object));
        }
    }
    let weights: Vec<f64> = (0..config.vocabulary)
        .map(|i| 1.0 / ((i + 1) as f64).powf(config.skew))
        .collect();
    let indices: Vec<usize> = (0..config.vocabulary).collect();

    let mut records = Vec::with_capacity(config.assays);
    for a in 0..config.assays {
        let k = rng.gen_range(config.min_statements..=config.max_statements);
        let chosen: Vec<usize> = indices
            .choose_multiple_weighted(&mut rng, k, |&i| weights[i])
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .copied()
            .collect();
        let mut words: Vec<String> = Vec::new();
        for &i in &chosen {
            if rng.gen_bool(config.mention_rate) {
                words.push(statements[i].1.clone());
            }
            words.push(FILLER.choose(&mut rng).expect("non-empty").to_string());
        }
        words.shuffle(&mut rng);
        records.push(AssayRecord {
            id: format!("{}", 100_000 + a),
            description: format!("Assay {a}: {}.", words.join(" ")),
            statements: chosen
                .iter()
                .map(|&i| StatementRecord {
                    predicate: statements[i].0.to_string(),
                    object: statements[i].1.clone(),
                })
                .collect(),
        });
    }
    Ok(records)
}

pub fn corpus(config: &SynthConfig) -> Result<Corpus> {
    Ok(Corpus::from_records(records(config)?)?.0)
}
