//! Experimental protocol: pair-level precision/recall/F1, k-fold
//! cross-validation, the negatives-per-assay sweep and the hit-and-miss
//! expert simulation with its plot-grid output.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufWriter, Write};
use std::ops::AddAssign;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_folds, AnnotatedAssay, Corpus, Fold, SemanticStatement, StatementId};
use crate::error::{Error, Result};
use crate::pairgen::{sample_assay_negatives, SamplingConfig};
use crate::scoring::{decide, rank_statements, Scorer, ScorerFactory};
use crate::seed;

/// Which `(assay, statement)` pairs a test assay contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationMode {
    /// Gold positives plus sampled negatives, built like the training set.
    SampledPair,
    /// Every vocabulary statement.
    FullVocabulary,
}

impl fmt::Display for EvaluationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluationMode::SampledPair => "sampled-pair",
            EvaluationMode::FullVocabulary => "full-vocabulary",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl Confusion {
    pub fn record(&mut self, gold: bool, predicted: bool) {
        match (gold, predicted) {
            (true, true) => self.true_positives += 1,
            (false, true) => self.false_positives += 1,
            (true, false) => self.false_negatives += 1,
            (false, false) => self.true_negatives += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, rhs: Confusion) {
        self.true_positives += rhs.true_positives;
        self.false_positives += rhs.false_positives;
        self.false_negatives += rhs.false_negatives;
        self.true_negatives += rhs.true_negatives;
    }
}

/// Micro-averaged metrics. A ratio with a zero denominator is reported as
/// 0 and flagged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: EvaluationMode,
    #[serde(flatten)]
    pub counts: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

impl MetricsReport {
    pub fn from_counts(counts: Confusion, mode: EvaluationMode) -> Self {
        let mut undefined = Vec::new();
        let tp = counts.true_positives as f64;
        let precision_den = counts.true_positives + counts.false_positives;
        let recall_den = counts.true_positives + counts.false_negatives;
        let precision = if precision_den == 0 {
            undefined.push("precision".to_string());
            0.0
        } else {
            tp / precision_den as f64
        };
        let recall = if recall_den == 0 {
            undefined.push("recall".to_string());
            0.0
        } else {
            tp / recall_den as f64
        };
        let f1 = if precision + recall == 0.0 {
            undefined.push("f1".to_string());
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricsReport {
            mode,
            counts,
            precision,
            recall,
            f1,
            undefined,
        }
    }
}

/// The labeled statements a test assay contributes under `mode`.
fn universe(
    test: &Corpus,
    assay: &AnnotatedAssay,
    mode: EvaluationMode,
    sampling: &SamplingConfig,
) -> Vec<(StatementId, bool)> {
    match mode {
        EvaluationMode::SampledPair => assay
            .annotation
            .ids()
            .iter()
            .map(|&id| (id, true))
            .chain(
                sample_assay_negatives(test, assay, sampling)
                    .into_iter()
                    .map(|id| (id, false)),
            )
            .collect(),
        EvaluationMode::FullVocabulary => {
            let gold = assay.annotation.to_set();
            test.vocabulary().ids().map(|id| (id, gold.contains(&id))).collect()
        }
    }
}

/// Confusion counts for one assay.
pub fn evaluate_assay(
    model: &dyn Scorer,
    test: &Corpus,
    assay: &AnnotatedAssay,
    mode: EvaluationMode,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
) -> Result<Confusion> {
    let pairs = universe(test, assay, mode, sampling);
    let statements: Vec<&SemanticStatement> = pairs
        .iter()
        .map(|(id, _)| test.vocabulary().statement(*id))
        .collect();
    let scores = model.score_batch(&assay.assay, &statements)?;
    if scores.len() != statements.len() {
        return Err(Error::Model(format!(
            "{} returned {} scores for {} statements",
            model.name(),
            scores.len(),
            statements.len()
        )));
    }
    let mut counts = Confusion::default();
    for ((_, gold), (statement, score)) in pairs.iter().zip(statements.iter().zip(&scores)) {
        counts.record(*gold, decide(model, statement, score, threshold));
    }
    Ok(counts)
}

/// Pair-level metrics of `model` over `test`. `trained_on` lists the assay
/// ids the model saw; any overlap with the test assays is an error.
pub fn evaluate_pairs<'a>(
    model: &dyn Scorer,
    trained_on: impl IntoIterator<Item = &'a str>,
    test: &Corpus,
    mode: EvaluationMode,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
) -> Result<MetricsReport> {
    if let Some(t) = threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("threshold {t} outside [0, 1]")));
        }
    }
    let trained: HashSet<&str> = trained_on.into_iter().collect();
    let overlap: Vec<&str> = test.assay_ids().filter(|id| trained.contains(id)).collect();
    if let Some(first) = overlap.first() {
        return Err(Error::TrainTestOverlap {
            count: overlap.len(),
            first: first.to_string(),
        });
    }
    let per_assay = test
        .assays()
        .par_iter()
        .map(|a| evaluate_assay(model, test, a, mode, sampling, threshold))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Confusion::default();
    for counts in per_assay {
        total += counts;
    }
    Ok(MetricsReport::from_counts(total, mode))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanMetrics {
    /// Unweighted mean over folds.
    pub fn of(reports: &[MetricsReport]) -> Self {
        if reports.is_empty() {
            return MeanMetrics::default();
        }
        let n = reports.len() as f64;
        MeanMetrics {
            precision: reports.iter().map(|r| r.precision).sum::<f64>() / n,
            recall: reports.iter().map(|r| r.recall).sum::<f64>() / n,
            f1: reports.iter().map(|r| r.f1).sum::<f64>() / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_assays: usize,
    pub test_assays: usize,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mode: EvaluationMode,
    pub false_per_assay: usize,
    pub folds: Vec<FoldReport>,
    pub mean: MeanMetrics,
}

/// Seeds used inside one fold: training negatives and evaluation negatives.
pub fn fold_sampling(sampling: &SamplingConfig, fold: usize) -> (SamplingConfig, SamplingConfig) {
    let train = SamplingConfig {
        seed: seed::derive(sampling.seed, &format!("{}/fold{fold}/F{}", seed::label::TRAINING, sampling.false_per_assay)),
        ..*sampling
    };
    let eval = SamplingConfig {
        seed: seed::derive(sampling.seed, &format!("{}/fold{fold}/F{}", seed::label::EVAL_SAMPLING, sampling.false_per_assay)),
        ..*sampling
    };
    (train, eval)
}

/// Splits `corpus` with the sampling seed's fold sub-seed.
pub fn protocol_folds(corpus: &Corpus, folds: usize, sampling: &SamplingConfig) -> Result<Vec<Fold>> {
    split_folds(corpus, folds, seed::derive(sampling.seed, seed::label::FOLDS))
}

fn run_fold(
    index: usize,
    fold: &Fold,
    factory: &dyn ScorerFactory,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
    modes: &[EvaluationMode],
) -> Result<Vec<FoldReport>> {
    let (train_sampling, eval_sampling) = fold_sampling(sampling, index);
    let model = factory.train(&fold.train, &train_sampling)?;
    modes
        .iter()
        .map(|&mode| {
            let metrics = evaluate_pairs(
                model.as_ref(),
                fold.train.assay_ids(),
                &fold.test,
                mode,
                &eval_sampling,
                threshold,
            )?;
            Ok(FoldReport {
                fold: index,
                train_assays: fold.train.len(),
                test_assays: fold.test.len(),
                metrics,
            })
        })
        .collect()
}

/// Cross-validation reporting several evaluation modes from one trained
/// model per fold.
pub fn cross_validate_modes(
    corpus: &Corpus,
    factory: &dyn ScorerFactory,
    folds: usize,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
    modes: &[EvaluationMode],
) -> Result<Vec<CvReport>> {
    let split = protocol_folds(corpus, folds, sampling)?;
    let per_fold = split
        .par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(i, fold, factory, sampling, threshold, modes))
        .collect::<Result<Vec<_>>>()?;
    Ok(modes
        .iter()
        .enumerate()
        .map(|(m, &mode)| {
            let folds: Vec<FoldReport> = per_fold.iter().map(|f| f[m].clone()).collect();
            let metrics: Vec<MetricsReport> = folds.iter().map(|f| f.metrics.clone()).collect();
            CvReport {
                mode,
                false_per_assay: sampling.false_per_assay,
                folds,
                mean: MeanMetrics::of(&metrics),
            }
        })
        .collect())
}

pub fn cross_validate(
    corpus: &Corpus,
    factory: &dyn ScorerFactory,
    folds: usize,
    sampling: &SamplingConfig,
    threshold: Option<f64>,
    mode: EvaluationMode,
) -> Result<CvReport> {
    Ok(cross_validate_modes(corpus, factory, folds, sampling, threshold, &[mode])?
        .pop()
        .expect("one mode requested"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl SweepRange {
    pub fn new(start: usize, stop: usize, step: usize) -> Result<Self> {
        if step == 0 || start > stop {
            return Err(Error::InvalidArgument(format!(
                "invalid sweep range {start}..={stop} step {step}"
            )));
        }
        Ok(SweepRange { start, stop, step })
    }

    /// Inclusive of `stop` when it lies on the grid.
    pub fn points(&self) -> Vec<usize> {
        (self.start..=self.stop).step_by(self.step).collect()
    }
}

/// Whether each sweep point runs every fold or only the first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFolds {
    #[default]
    First,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub false_per_assay: usize,
    pub folds: Vec<FoldReport>,
    pub mean: MeanMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: EvaluationMode,
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the highest mean F1 (earliest on ties).
    pub best: usize,
}

impl SweepResult {
    pub fn best_point(&self) -> &SweepPoint {
        &self.points[self.best]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub range: SweepRange,
    pub folds: usize,
    pub which: SweepFolds,
    pub seed: u64,
    pub threshold: Option<f64>,
    pub mode: EvaluationMode,
}

/// Evaluates one model per negatives-per-assay value. The fold split is
/// computed once and shared by every point.
pub fn sweep_false_labels(
    corpus: &Corpus,
    factory: &dyn ScorerFactory,
    config: &SweepConfig,
) -> Result<SweepResult> {
    let split = protocol_folds(corpus, config.folds, &SamplingConfig::new(0, config.seed))?;
    let used: &[Fold] = match config.which {
        SweepFolds::First => &split[..1],
        SweepFolds::All => &split,
    };
    let points = config
        .range
        .points()
        .into_iter()
        .map(|false_per_assay| {
            let sampling = SamplingConfig::new(false_per_assay, config.seed);
            let folds = used
                .par_iter()
                .enumerate()
                .map(|(i, fold)| run_fold(i, fold, factory, &sampling, config.threshold, &[config.mode]))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect::<Vec<_>>();
            let metrics: Vec<MetricsReport> = folds.iter().map(|f| f.metrics.clone()).collect();
            Ok(SweepPoint {
                false_per_assay,
                mean: MeanMetrics::of(&metrics),
                folds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.mean.f1 > points[best].mean.f1 {
            best = i;
        }
    }
    Ok(SweepResult {
        mode: config.mode,
        points,
        best,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Hit,
    Miss,
}

/// Decisions of a simulated curator who always inspects the current
/// top-ranked candidate, until every gold statement has been found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitMissTrace {
    pub assay_id: String,
    pub marks: Vec<Mark>,
}

impl HitMissTrace {
    pub fn hits(&self) -> usize {
        self.marks.iter().filter(|m| **m == Mark::Hit).count()
    }

    pub fn misses(&self) -> usize {
        self.marks.len() - self.hits()
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Runs the simulation for one assay. Scores do not depend on which
/// candidates remain, so a single ranking is walked front to back.
pub fn hit_and_miss(
    model: &dyn Scorer,
    assay: &crate::corpus::Bioassay,
    gold: &[&SemanticStatement],
    candidates: &[&SemanticStatement],
) -> Result<HitMissTrace> {
    let mut seen = HashSet::new();
    let candidates: Vec<&SemanticStatement> =
        candidates.iter().copied().filter(|s| seen.insert(*s)).collect();
    let mut remaining: HashSet<&SemanticStatement> = gold.iter().copied().collect();
    if let Some(missing) = remaining.iter().find(|g| !seen.contains(*g)) {
        return Err(Error::GoldNotInCandidates(missing.to_string()));
    }
    let ranked = rank_statements(model, assay, &candidates)?;
    let mut marks = Vec::new();
    for r in &ranked {
        if remaining.is_empty() {
            break;
        }
        if remaining.remove(&r.statement) {
            marks.push(Mark::Hit);
        } else {
            marks.push(Mark::Miss);
        }
    }
    Ok(HitMissTrace {
        assay_id: assay.id.clone(),
        marks,
    })
}

/// Simulation over every assay of `test` with the full vocabulary as
/// candidates.
pub fn hit_and_miss_corpus(model: &dyn Scorer, test: &Corpus) -> Result<Vec<HitMissTrace>> {
    let candidates: Vec<&SemanticStatement> = test.vocabulary().iter().map(|(_, s)| s).collect();
    test.assays()
        .par_iter()
        .map(|a| {
            let gold: Vec<&SemanticStatement> = test.statements_of(a).collect();
            hit_and_miss(model, &a.assay, &gold, &candidates)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitMissSummary {
    pub assays: usize,
    pub mean_trace_length: f64,
    pub mean_misses: f64,
    pub max_trace_length: usize,
    /// Assays whose trace contains no miss.
    pub perfect_assays: usize,
}

pub fn summarize_traces(traces: &[HitMissTrace]) -> HitMissSummary {
    let n = traces.len().max(1) as f64;
    HitMissSummary {
        assays: traces.len(),
        mean_trace_length: traces.iter().map(|t| t.len()).sum::<usize>() as f64 / n,
        mean_misses: traces.iter().map(|t| t.misses()).sum::<usize>() as f64 / n,
        max_trace_length: traces.iter().map(|t| t.len()).max().unwrap_or(0),
        perfect_assays: traces.iter().filter(|t| t.misses() == 0).count(),
    }
}

/// Cell symbols of the plot grid: `B` hit, `P` miss, `W` blank padding.
pub fn mark_symbol(mark: Mark) -> char {
    match mark {
        Mark::Hit => 'B',
        Mark::Miss => 'P',
    }
}

pub const BLANK_SYMBOL: char = 'W';

/// Rows sorted by ascending trace length, then assay id; every row padded
/// with blanks to the longest trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotGrid {
    pub columns: usize,
    pub rows: Vec<(String, String)>,
}

pub fn plot_grid(traces: &[HitMissTrace]) -> Result<PlotGrid> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("no traces to plot".into()));
    }
    let columns = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut sorted: Vec<&HitMissTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.assay_id.cmp(&b.assay_id)));
    let rows = sorted
        .into_iter()
        .map(|t| {
            let mut cells: String = t.marks.iter().map(|&m| mark_symbol(m)).collect();
            cells.extend(std::iter::repeat_n(BLANK_SYMBOL, columns - t.len()));
            (t.assay_id.clone(), cells)
        })
        .collect();
    Ok(PlotGrid { columns, rows })
}

/// Grid file: a `columns=<n>` header line, then `<assay_id>\t<cells>` per row.
pub fn write_plot_grid(grid: &PlotGrid, writer: impl Write) -> std::io::Result<()> {
    let mut writer = BufWriter::new(writer);
    writeln!(writer, "columns={}", grid.columns)?;
    for (id, cells) in &grid.rows {
        writeln!(writer, "{id}\t{cells}")?;
    }
    writer.flush()
}

pub fn emit_plot_data(traces: &[HitMissTrace], path: &Path) -> Result<PlotGrid> {
    let grid = plot_grid(traces)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_plot_grid(&grid, file).map_err(|e| Error::io(path, e))?;
    Ok(grid)
}
