//! Bioassay semantification: turn free-text assay descriptions into
//! `(predicate, object)` statements with the implicit subject `bioassay`.
//!
//! Multi-label annotation is recast as binary classification over
//! `(assay, statement)` pairs. The crate covers corpus handling, pair
//! generation with negative sampling, native and remote scorers, the
//! evaluation protocol (cross-validation, negative-count sweeps, hit-and-miss
//! simulation), triple export, and the curation session logic served by the
//! CLI.

pub mod corpus;
pub mod curation;
pub mod error;
pub mod evaluation;
pub mod kgexport;
pub mod neural;
pub mod pairgen;
pub mod scoring;
pub mod seed;
pub mod synth;

pub use corpus::{
    AnnotatedAssay, AnnotationSequence, Bioassay, Corpus, CorpusFormat, CorpusStats, FilterPolicy,
    Fold, LoadReport, SemanticStatement, StatementId, StatementVocabulary,
};
pub use error::{Error, Result};
pub use pairgen::{LabeledPair, SamplingConfig};
pub use scoring::{Score, Scorer};
