//! The annotated bioassay corpus: loading, validation, filtering, summary
//! statistics and deterministic fold splits.
//!
//! A corpus owns its [`StatementVocabulary`]; statement indices are dense and
//! assigned in first-seen order while loading, so a load/serialize/load cycle
//! reproduces identical ids.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Collapses runs of whitespace to single spaces and trims the ends.
/// Case is preserved.
pub fn canonicalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A `predicate -> object` pair; the subject is always the assay itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticStatement {
    predicate: String,
    object: String,
}

impl SemanticStatement {
    pub fn new(predicate: &str, object: &str) -> Result<Self> {
        let predicate = canonicalize(predicate);
        let object = canonicalize(object);
        if predicate.is_empty() || object.is_empty() {
            return Err(Error::Validation(
                "statement predicate and object must be non-empty".into(),
            ));
        }
        Ok(SemanticStatement { predicate, object })
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn object(&self) -> &str {
        &self.object
    }

    /// `"<predicate> <object>"`, the text used for ranking tie-breaks and as
    /// the second sentence of a classification pair.
    pub fn text(&self) -> String {
        format!("{} {}", self.predicate, self.object)
    }
}

impl fmt::Display for SemanticStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.predicate, self.object)
    }
}

/// Dense index of a statement within a [`StatementVocabulary`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub u32);

impl StatementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bioassay {
    pub id: String,
    pub description: String,
}

impl Bioassay {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Bioassay {
            id: id.into(),
            description: description.into(),
        }
    }

    /// First line of the description, cut to `max_chars`.
    pub fn title(&self, max_chars: usize) -> String {
        let first = self.description.trim().lines().next().unwrap_or("");
        let mut title: String = first.chars().take(max_chars).collect();
        if first.chars().count() > max_chars {
            title.push_str("...");
        }
        title
    }
}

/// The gold statements of one assay. Order is kept for display; semantics
/// are those of a set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSequence {
    ids: Vec<StatementId>,
}

impl AnnotationSequence {
    /// Builds a sequence, dropping repeated ids. Returns the sequence and the
    /// number of duplicates removed.
    pub fn from_ids(ids: impl IntoIterator<Item = StatementId>) -> (Self, usize) {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut duplicates = 0;
        for id in ids {
            if seen.insert(id) {
                kept.push(id);
            } else {
                duplicates += 1;
            }
        }
        (AnnotationSequence { ids: kept }, duplicates)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[StatementId] {
        &self.ids
    }

    pub fn contains(&self, id: StatementId) -> bool {
        self.ids.contains(&id)
    }

    pub fn to_set(&self) -> HashSet<StatementId> {
        self.ids.iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedAssay {
    pub assay: Bioassay,
    pub annotation: AnnotationSequence,
}

/// Indexed set of all statements with per-statement assay frequency.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatementVocabulary {
    statements: Vec<SemanticStatement>,
    index: HashMap<SemanticStatement, StatementId>,
    frequency: Vec<usize>,
}

impl StatementVocabulary {
    fn intern(&mut self, statement: SemanticStatement) -> StatementId {
        if let Some(&id) = self.index.get(&statement) {
            return id;
        }
        let id = StatementId(self.statements.len() as u32);
        self.index.insert(statement.clone(), id);
        self.statements.push(statement);
        self.frequency.push(0);
        id
    }

    fn recount<'a>(&mut self, annotations: impl Iterator<Item = &'a AnnotationSequence>) {
        self.frequency.iter_mut().for_each(|f| *f = 0);
        for annotation in annotations {
            for id in annotation.ids() {
                self.frequency[id.index()] += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn get(&self, id: StatementId) -> Option<&SemanticStatement> {
        self.statements.get(id.index())
    }

    /// Panics on an id from another vocabulary.
    pub fn statement(&self, id: StatementId) -> &SemanticStatement {
        &self.statements[id.index()]
    }

    pub fn id_of(&self, statement: &SemanticStatement) -> Option<StatementId> {
        self.index.get(statement).copied()
    }

    /// Number of assays annotated with `id`.
    pub fn frequency(&self, id: StatementId) -> usize {
        self.frequency[id.index()]
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = StatementId> + '_ {
        (0..self.statements.len() as u32).map(StatementId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (StatementId, &SemanticStatement)> + '_ {
        self.statements
            .iter()
            .enumerate()
            .map(|(i, s)| (StatementId(i as u32), s))
    }
}

/// On-disk shape of one statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRecord {
    pub predicate: String,
    pub object: String,
}

/// On-disk shape of one assay in the line-delimited dialect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssayRecord {
    pub id: String,
    pub description: String,
    pub statements: Vec<StatementRecord>,
}

/// Corpus file dialects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `{"id", "description", "statements": [{"predicate", "object"}]}`.
    JsonLines,
    /// The primary path is a tab-separated descriptions file
    /// (`assay_id`, `description`); this names the tab-separated annotations
    /// file (`assay_id`, `predicate`, `object`). Both carry a header row.
    TwoFile { annotations: PathBuf },
}

/// Non-fatal findings while loading.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub duplicates_collapsed: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    assays: Vec<AnnotatedAssay>,
    vocabulary: StatementVocabulary,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Validates and interns records. Statement ids follow first-seen order.
    pub fn from_records(records: Vec<AssayRecord>) -> Result<(Corpus, LoadReport)> {
        let mut vocabulary = StatementVocabulary::default();
        let mut assays = Vec::with_capacity(records.len());
        let mut by_id = HashMap::with_capacity(records.len());
        let mut report = LoadReport::default();

        for (position, record) in records.into_iter().enumerate() {
            let id = record.id.trim().to_string();
            if id.is_empty() {
                return Err(Error::Validation(format!(
                    "record {}: empty assay id",
                    position + 1
                )));
            }
            if record.description.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "assay `{id}`: empty description"
                )));
            }
            if record.statements.is_empty() {
                return Err(Error::Validation(format!("assay `{id}`: no statements")));
            }
            if by_id.insert(id.clone(), position).is_some() {
                return Err(Error::Validation(format!("duplicate assay id `{id}`")));
            }
            let mut ids = Vec::with_capacity(record.statements.len());
            for s in &record.statements {
                let statement = SemanticStatement::new(&s.predicate, &s.object)
                    .map_err(|e| Error::Validation(format!("assay `{id}`: {e}")))?;
                ids.push(vocabulary.intern(statement));
            }
            let (annotation, duplicates) = AnnotationSequence::from_ids(ids);
            if duplicates > 0 {
                log::warn!("assay `{id}`: collapsed {duplicates} duplicate statement(s)");
                report.duplicates_collapsed += duplicates;
            }
            assays.push(AnnotatedAssay {
                assay: Bioassay {
                    id,
                    description: record.description,
                },
                annotation,
            });
        }

        vocabulary.recount(assays.iter().map(|a| &a.annotation));
        Ok((
            Corpus {
                assays,
                vocabulary,
                by_id,
            },
            report,
        ))
    }

    pub fn assays(&self) -> &[AnnotatedAssay] {
        &self.assays
    }

    pub fn vocabulary(&self) -> &StatementVocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.assays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assays.is_empty()
    }

    pub fn get(&self, assay_id: &str) -> Option<&AnnotatedAssay> {
        self.by_id.get(assay_id).map(|&i| &self.assays[i])
    }

    pub fn assay_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.assays.iter().map(|a| a.assay.id.as_str())
    }

    /// Statements of one assay, resolved.
    pub fn statements_of<'a>(
        &'a self,
        assay: &'a AnnotatedAssay,
    ) -> impl Iterator<Item = &'a SemanticStatement> + 'a {
        assay
            .annotation
            .ids()
            .iter()
            .map(|&id| self.vocabulary.statement(id))
    }

    /// A corpus restricted to the listed assays (in the given order). The
    /// vocabulary keeps every statement and id of the parent; frequencies
    /// are recounted over the subset.
    pub fn subset(&self, assay_ids: &[&str]) -> Result<Corpus> {
        let mut assays = Vec::with_capacity(assay_ids.len());
        let mut by_id = HashMap::with_capacity(assay_ids.len());
        for &id in assay_ids {
            let assay = self
                .get(id)
                .ok_or_else(|| Error::UnknownAssay(id.to_string()))?;
            if by_id.insert(id.to_string(), assays.len()).is_some() {
                return Err(Error::Validation(format!("duplicate assay id `{id}`")));
            }
            assays.push(assay.clone());
        }
        let mut vocabulary = self.vocabulary.clone();
        vocabulary.recount(assays.iter().map(|a| &a.annotation));
        Ok(Corpus {
            assays,
            vocabulary,
            by_id,
        })
    }

    pub fn to_records(&self) -> Vec<AssayRecord> {
        self.assays
            .iter()
            .map(|a| AssayRecord {
                id: a.assay.id.clone(),
                description: a.assay.description.clone(),
                statements: self
                    .statements_of(a)
                    .map(|s| StatementRecord {
                        predicate: s.predicate().to_string(),
                        object: s.object().to_string(),
                    })
                    .collect(),
            })
            .collect()
    }

    /// Writes the line-delimited dialect.
    pub fn write_jsonl(&self, writer: impl Write) -> std::io::Result<()> {
        let mut writer = BufWriter::new(writer);
        for record in self.to_records() {
            serde_json::to_writer(&mut writer, &record)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(file).map_err(|e| Error::io(path, e))
    }
}

/// Loads and validates a corpus file.
pub fn load_corpus(path: &Path, format: &CorpusFormat) -> Result<(Corpus, LoadReport)> {
    let records = match format {
        CorpusFormat::JsonLines => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            parse_jsonl(BufReader::new(file), &path.display().to_string())?
        }
        CorpusFormat::TwoFile { annotations } => read_two_file(path, annotations)?,
    };
    Corpus::from_records(records)
}

/// Parses the line-delimited dialect. Blank lines are skipped; a source
/// without any record is a parse error.
pub fn parse_jsonl(reader: impl BufRead, source: &str) -> Result<Vec<AssayRecord>> {
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let locator = format!("{source}:{}", n + 1);
        let line = line.map_err(|e| Error::parse(&locator, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AssayRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&locator, e))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::parse(source, "no assay records"));
    }
    Ok(records)
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .quoting(false)
        .from_reader(file))
}

#[derive(Deserialize)]
struct DescriptionRow {
    assay_id: String,
    description: String,
}

#[derive(Deserialize)]
struct AnnotationRow {
    assay_id: String,
    predicate: String,
    object: String,
}

fn row_locator(path: &Path, position: Option<&csv::Position>) -> String {
    match position {
        Some(p) => format!("{}:{}", path.display(), p.line()),
        None => path.display().to_string(),
    }
}

fn read_two_file(descriptions: &Path, annotations: &Path) -> Result<Vec<AssayRecord>> {
    let mut records = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut reader = tsv_reader(descriptions)?;
    for row in reader.deserialize::<DescriptionRow>() {
        let row = row.map_err(|e| Error::parse(row_locator(descriptions, e.position()), &e))?;
        let id = row.assay_id.trim().to_string();
        if index.insert(id.clone(), records.len()).is_some() {
            return Err(Error::Validation(format!("duplicate assay id `{id}`")));
        }
        records.push(AssayRecord {
            id,
            description: row.description,
            statements: Vec::new(),
        });
    }
    if records.is_empty() {
        return Err(Error::parse(
            descriptions.display().to_string(),
            "no assay records",
        ));
    }

    let mut reader = tsv_reader(annotations)?;
    let mut rows = reader.deserialize::<AnnotationRow>();
    loop {
        let position = rows.reader().position().clone();
        let Some(row) = rows.next() else { break };
        let row = row.map_err(|e| Error::parse(row_locator(annotations, e.position()), &e))?;
        let slot = index.get(row.assay_id.trim()).ok_or_else(|| {
            Error::parse(
                row_locator(annotations, Some(&position)),
                format!("annotation for unknown assay `{}`", row.assay_id.trim()),
            )
        })?;
        records[*slot].statements.push(StatementRecord {
            predicate: row.predicate,
            object: row.object,
        });
    }
    Ok(records)
}

/// Rules for dropping statements that carry no information.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterPolicy {
    /// Drop every statement with one of these predicates.
    #[serde(default)]
    pub stop_predicates: Vec<String>,
    /// Drop every statement with one of these objects.
    #[serde(default)]
    pub stop_objects: Vec<String>,
    /// Drop these exact statements.
    #[serde(default)]
    pub stop_statements: Vec<StatementRecord>,
    /// Drop statements annotated on more than this fraction of assays.
    #[serde(default)]
    pub max_assay_fraction: Option<f64>,
}

impl FilterPolicy {
    pub fn is_empty(&self) -> bool {
        self.stop_predicates.is_empty()
            && self.stop_objects.is_empty()
            && self.stop_statements.is_empty()
            && self.max_assay_fraction.is_none()
    }

    pub fn load(path: &Path) -> Result<FilterPolicy> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub statements_removed: usize,
    pub assays_dropped: Vec<String>,
}

/// Removes statements matching `policy`, prunes annotations and drops assays
/// left without statements. Ubiquity is re-evaluated after assays are
/// dropped until nothing changes, so the operation is idempotent.
pub fn filter_noninformative(
    corpus: &Corpus,
    policy: &FilterPolicy,
) -> Result<(Corpus, FilterReport)> {
    let predicates: HashSet<String> = policy.stop_predicates.iter().map(|p| canonicalize(p)).collect();
    let objects: HashSet<String> = policy.stop_objects.iter().map(|o| canonicalize(o)).collect();
    let exact: HashSet<(String, String)> = policy
        .stop_statements
        .iter()
        .map(|s| (canonicalize(&s.predicate), canonicalize(&s.object)))
        .collect();

    if policy.is_empty() {
        return Ok((corpus.clone(), FilterReport::default()));
    }
    let vocabulary = corpus.vocabulary();
    let mut removed: HashSet<StatementId> = vocabulary
        .iter()
        .filter(|(_, s)| {
            predicates.contains(s.predicate())
                || objects.contains(s.object())
                || exact.contains(&(s.predicate().to_string(), s.object().to_string()))
        })
        .map(|(id, _)| id)
        .collect();

    let mut report = FilterReport::default();
    let mut current = corpus.clone();
    loop {
        if let Some(fraction) = policy.max_assay_fraction {
            let n = current.len() as f64;
            for id in current.vocabulary().ids() {
                if n > 0.0 && current.vocabulary().frequency(id) as f64 / n > fraction {
                    removed.insert(id);
                }
            }
        }
        let (next, dropped) = prune(&current, &removed)?;
        let changed = next.vocabulary().len() != current.vocabulary().len()
            || next.len() != current.len();
        report.assays_dropped.extend(dropped);
        current = next;
        // Ids are re-densified by `prune`; only the ubiquity rule needs another pass.
        removed.clear();
        if !changed || policy.max_assay_fraction.is_none() {
            break;
        }
    }
    for id in &report.assays_dropped {
        log::warn!("assay `{id}` dropped: no statements left after filtering");
    }
    report.statements_removed = corpus.vocabulary().len() - current.vocabulary().len();
    Ok((current, report))
}

/// Rebuilds a corpus without `removed` statements. Zero-frequency statements
/// are dropped from the vocabulary; surviving ids keep their relative order.
fn prune(corpus: &Corpus, removed: &HashSet<StatementId>) -> Result<(Corpus, Vec<String>)> {
    let mut dropped = Vec::new();
    let mut records = Vec::with_capacity(corpus.len());
    for a in corpus.assays() {
        let statements: Vec<StatementRecord> = a
            .annotation
            .ids()
            .iter()
            .filter(|id| !removed.contains(id))
            .map(|&id| {
                let s = corpus.vocabulary().statement(id);
                StatementRecord {
                    predicate: s.predicate().to_string(),
                    object: s.object().to_string(),
                }
            })
            .collect();
        if statements.is_empty() {
            dropped.push(a.assay.id.clone());
            continue;
        }
        records.push(AssayRecord {
            id: a.assay.id.clone(),
            description: a.assay.description.clone(),
            statements,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // Interning in assay order would follow first-seen order; keep the
    // parent's order instead so ids stay monotone with the original.
    let (rebuilt, _) = Corpus::from_records(records)?;
    let order: Vec<&SemanticStatement> = corpus
        .vocabulary()
        .iter()
        .filter(|(id, s)| !removed.contains(id) && rebuilt.vocabulary().id_of(s).is_some())
        .map(|(_, s)| s)
        .collect();
    Ok((reorder_vocabulary(rebuilt, &order), dropped))
}

fn reorder_vocabulary(corpus: Corpus, order: &[&SemanticStatement]) -> Corpus {
    let old = &corpus.vocabulary;
    let mut vocabulary = StatementVocabulary::default();
    for s in order {
        vocabulary.intern((*s).clone());
    }
    let assays: Vec<AnnotatedAssay> = corpus
        .assays
        .iter()
        .map(|a| AnnotatedAssay {
            assay: a.assay.clone(),
            annotation: AnnotationSequence {
                ids: a
                    .annotation
                    .ids()
                    .iter()
                    .map(|&id| vocabulary.id_of(old.statement(id)).expect("statement kept"))
                    .collect(),
            },
        })
        .collect();
    vocabulary.recount(assays.iter().map(|a| &a.annotation));
    Corpus {
        assays,
        vocabulary,
        by_id: corpus.by_id,
    }
}

/// Corpus summary, including the annotation-length histogram.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusStats {
    pub assays: usize,
    pub vocabulary_size: usize,
    pub min_statements: usize,
    pub max_statements: usize,
    pub mean_statements: f64,
    pub total_statements: usize,
    /// annotation length -> number of assays
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let lengths: Vec<usize> = corpus.assays().iter().map(|a| a.annotation.len()).collect();
    let mut length_histogram = BTreeMap::new();
    for &len in &lengths {
        *length_histogram.entry(len).or_insert(0) += 1;
    }
    let total: usize = lengths.iter().sum();
    Ok(CorpusStats {
        assays: corpus.len(),
        vocabulary_size: corpus.vocabulary().len(),
        min_statements: *lengths.iter().min().expect("non-empty"),
        max_statements: *lengths.iter().max().expect("non-empty"),
        mean_statements: total as f64 / lengths.len() as f64,
        total_statements: total,
        length_histogram,
    })
}

/// One cross-validation fold. Both sides share the parent vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Corpus,
    pub test: Corpus,
}

/// Test-set assay ids per fold: sorted ids are shuffled with `seed`, then
/// dealt round-robin.
pub fn fold_assignment(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if corpus.len() < folds {
        return Err(Error::TooFewAssays {
            assays: corpus.len(),
            folds,
        });
    }
    let mut ids: Vec<&str> = corpus.assay_ids().collect();
    ids.sort_unstable();
    ids.shuffle(&mut seed::rng(seed));
    let mut tests = vec![Vec::new(); folds];
    for (i, id) in ids.into_iter().enumerate() {
        tests[i % folds].push(id.to_string());
    }
    Ok(tests)
}

pub fn split_folds(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    let tests = fold_assignment(corpus, folds, seed)?;
    tests
        .iter()
        .map(|test_ids| {
            let held_out: HashSet<&str> = test_ids.iter().map(String::as_str).collect();
            let train_ids: Vec<&str> = corpus.assay_ids().filter(|id| !held_out.contains(id)).collect();
            let test_ids: Vec<&str> = corpus.assay_ids().filter(|id| held_out.contains(id)).collect();
            Ok(Fold {
                train: corpus.subset(&train_ids)?,
                test: corpus.subset(&test_ids)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(id: &str, statements: &[(&str, &str)]) -> AssayRecord {
        AssayRecord {
            id: id.into(),
            description: format!("description of assay {id}"),
            statements: statements
                .iter()
                .map(|(p, o)| StatementRecord {
                    predicate: p.to_string(),
                    object: o.to_string(),
                })
                .collect(),
        }
    }

    fn three_assay_fixture() -> Corpus {
        Corpus::from_records(vec![
            record("1", &[("p", "a"), ("p", "b")]),
            record("2", &[("p", "a"), ("q", "c"), ("q", "d")]),
            record("3", &[("p", "a"), ("p", "b"), ("q", "c"), ("r", "e")]),
        ])
        .unwrap()
        .0
    }

    #[test]
    fn canonicalization_collapses_whitespace_and_keeps_case() {
        let s = SemanticStatement::new("  has assay\tformat ", "Protein   Format").unwrap();
        assert_eq!(s.predicate(), "has assay format");
        assert_eq!(s.object(), "Protein Format");
        assert!(SemanticStatement::new("  ", "x").is_err());
    }

    #[test]
    fn fixture_vocabulary_and_frequencies_match_hand_count() {
        let corpus = three_assay_fixture();
        let v = corpus.vocabulary();
        assert_eq!(v.len(), 5);
        let freq = |p: &str, o: &str| v.frequency(v.id_of(&SemanticStatement::new(p, o).unwrap()).unwrap());
        assert_eq!(freq("p", "a"), 3);
        assert_eq!(freq("p", "b"), 2);
        assert_eq!(freq("q", "c"), 2);
        assert_eq!(freq("q", "d"), 1);
        assert_eq!(freq("r", "e"), 1);
    }

    #[test]
    fn duplicates_within_an_assay_are_collapsed_and_counted() {
        let (corpus, report) =
            Corpus::from_records(vec![record("1", &[("p", "a"), ("p ", " a"), ("p", "b")])]).unwrap();
        assert_eq!(report.duplicates_collapsed, 1);
        assert_eq!(corpus.assays()[0].annotation.len(), 2);
    }

    #[test]
    fn validation_rejects_empty_description_and_unannotated_assays() {
        let mut empty_desc = record("1", &[("p", "a")]);
        empty_desc.description = "  \n".into();
        assert!(matches!(Corpus::from_records(vec![empty_desc]), Err(Error::Validation(_))));
        assert!(matches!(Corpus::from_records(vec![record("1", &[])]), Err(Error::Validation(_))));
        let dup = vec![record("1", &[("p", "a")]), record("1", &[("p", "b")])];
        assert!(matches!(Corpus::from_records(dup), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_source_is_a_parse_error() {
        let err = parse_jsonl(std::io::Cursor::new(""), "empty.jsonl").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn malformed_line_reports_its_line_number() {
        let text = "{\"id\":\"1\",\"description\":\"d\",\"statements\":[{\"predicate\":\"p\",\"object\":\"o\"}]}\n{oops\n";
        match parse_jsonl(std::io::Cursor::new(text), "c.jsonl").unwrap_err() {
            Error::Parse { locator, .. } => assert_eq!(locator, "c.jsonl:2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stats_on_fixture() {
        let stats = corpus_stats(&three_assay_fixture()).unwrap();
        assert_eq!(stats.assays, 3);
        assert_eq!((stats.min_statements, stats.max_statements), (2, 4));
        assert_eq!(stats.mean_statements, 3.0);
        assert_eq!(stats.length_histogram, BTreeMap::from([(2, 1), (3, 1), (4, 1)]));
    }

    #[test]
    fn stats_single_statement() {
        let (corpus, _) = Corpus::from_records(vec![record("1", &[("p", "a")])]).unwrap();
        let stats = corpus_stats(&corpus).unwrap();
        assert_eq!((stats.min_statements, stats.max_statements, stats.mean_statements), (1, 1, 1.0));
    }

    #[test]
    fn empty_policy_is_identity() {
        let corpus = three_assay_fixture();
        let (filtered, report) = filter_noninformative(&corpus, &FilterPolicy::default()).unwrap();
        assert_eq!(filtered, corpus);
        assert_eq!(report.statements_removed, 0);
    }

    #[test]
    fn ubiquitous_statement_is_dropped() {
        let corpus = three_assay_fixture();
        let policy = FilterPolicy {
            max_assay_fraction: Some(0.99),
            ..Default::default()
        };
        let (filtered, _) = filter_noninformative(&corpus, &policy).unwrap();
        let pa = SemanticStatement::new("p", "a").unwrap();
        assert!(filtered.vocabulary().id_of(&pa).is_none());
        assert_eq!(filtered.vocabulary().len(), 4);
        assert_eq!(filtered.len(), 3);
    }

    #[test]
    fn stoplist_can_empty_an_assay_which_is_then_dropped() {
        let corpus = three_assay_fixture();
        let policy = FilterPolicy {
            stop_predicates: vec!["p".into()],
            ..Default::default()
        };
        let (filtered, report) = filter_noninformative(&corpus, &policy).unwrap();
        assert_eq!(report.assays_dropped, vec!["1".to_string()]);
        assert_eq!(filtered.len(), 2);
        assert_eq!(filtered.vocabulary().len(), 3);
    }

    #[test]
    fn three_assays_three_folds() {
        let corpus = three_assay_fixture();
        let folds = split_folds(&corpus, 3, 11).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 1 && f.train.len() == 2));
        assert!(matches!(split_folds(&corpus, 4, 11), Err(Error::TooFewAssays { .. })));
        assert!(matches!(split_folds(&corpus, 1, 11), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn subset_keeps_ids_and_recounts() {
        let corpus = three_assay_fixture();
        let sub = corpus.subset(&["1"]).unwrap();
        assert_eq!(sub.vocabulary().len(), 5);
        let pa = sub.vocabulary().id_of(&SemanticStatement::new("p", "a").unwrap()).unwrap();
        assert_eq!(pa, corpus.vocabulary().id_of(&SemanticStatement::new("p", "a").unwrap()).unwrap());
        assert_eq!(sub.vocabulary().frequency(pa), 1);
    }
}
