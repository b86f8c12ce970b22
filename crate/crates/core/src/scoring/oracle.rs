use std::collections::{HashMap, HashSet};

use super::{Score, Scorer};
use crate::corpus::{Bioassay, Corpus, SemanticStatement};
use crate::error::Result;

/// Reference scorer that knows the gold annotations: 1.0 for a gold
/// statement of the assay, 0.0 otherwise. Useful as an upper bound and in
/// protocol checks.
#[derive(Clone, Debug, Default)]
pub struct GoldOracle {
    gold: HashMap<String, HashSet<SemanticStatement>>,
}

impl GoldOracle {
    pub fn new(corpus: &Corpus) -> Self {
        GoldOracle {
            gold: corpus
                .assays()
                .iter()
                .map(|a| (a.assay.id.clone(), corpus.statements_of(a).cloned().collect()))
                .collect(),
        }
    }
}

impl Scorer for GoldOracle {
    fn name(&self) -> &str {
        "gold-oracle"
    }

    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        let gold = self.gold.get(&assay.id);
        Ok(statements
            .iter()
            .map(|s| Score::known(if gold.is_some_and(|g| g.contains(*s)) { 1.0 } else { 0.0 }))
            .collect())
    }
}
