use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use semantify_core::corpus::{corpus_stats, CorpusStats};
use semantify_core::evaluation::{
    cross_validate_modes, emit_plot_data, fold_sampling, hit_and_miss_corpus, protocol_folds,
    summarize_traces, sweep_false_labels, CvReport, EvaluationMode, HitMissSummary, SweepConfig,
    SweepFolds, SweepRange, SweepResult,
};
use semantify_core::kgexport::{
    compare_assays, export_triples, load_triples, render_table, save_triples, triples_to_string,
    Provenance,
};
use semantify_core::neural::{NeuralClient, ServiceStatus};
use semantify_core::pairgen::{build_training_set, write_pairs_jsonl};
use semantify_core::scoring::{decide, rank_statements, save_model};
use semantify_core::seed::{self, label};
use semantify_core::synth::{self, SynthConfig};
use semantify_core::{Bioassay, SamplingConfig, SemanticStatement};

use crate::args::{endpoint, CorpusArgs, LoadedCorpus, ModelArgs, ScorerArgs, ScorerKind};
use crate::output::{write_json, write_metadata, write_sidecar};
use crate::UsageError;

/// Per-assay time reported alongside prediction output, in seconds.
const REFERENCE_SECONDS_PER_ASSAY: f64 = 4.0;

fn sampling(false_per_assay: usize, run_seed: u64) -> SamplingConfig {
    SamplingConfig::new(false_per_assay, seed::derive(run_seed, label::SAMPLING))
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Also write the statistics as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct StatsReport<'a> {
    stats: &'a CorpusStats,
    #[serde(flatten)]
    loaded: &'a LoadedCorpus,
    seed: u64,
}

pub fn stats(args: StatsArgs, run_seed: u64) -> Result<()> {
    let loaded = args.corpus.load()?;
    let stats = corpus_stats(&loaded.corpus)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "assays\t{}", stats.assays)?;
    writeln!(out, "statements\t{}", stats.vocabulary_size)?;
    writeln!(out, "annotations\t{}", stats.total_statements)?;
    writeln!(out, "per assay\tmin {} / mean {:.2} / max {}", stats.min_statements, stats.mean_statements, stats.max_statements)?;
    if let Some(f) = &loaded.filter {
        writeln!(out, "filtered\t{} statements, {} assays dropped", f.statements_removed, f.assays_dropped.len())?;
    }
    writeln!(out, "length\tassays")?;
    for (len, count) in &stats.length_histogram {
        writeln!(out, "{len}\t{count}")?;
    }
    if let Some(path) = args.out {
        write_json(&path, &StatsReport { stats: &stats, loaded: &loaded, seed: run_seed })?;
        write_sidecar(&path, "stats", run_seed)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PairsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 170)]
    false_per_assay: usize,
    /// Output file, one JSON pair per line.
    #[arg(long)]
    out: PathBuf,
}

pub fn pairs(args: PairsArgs, run_seed: u64) -> Result<()> {
    let corpus = args.corpus.load()?.corpus;
    let pairs = build_training_set(&corpus, &sampling(args.false_per_assay, run_seed));
    let file = std::fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_pairs_jsonl(&pairs, file)?;
    write_sidecar(&args.out, "pairs", run_seed)?;
    let positives = pairs.iter().filter(|p| p.label).count();
    println!("{} pairs ({} positive, {} negative)", pairs.len(), positives, pairs.len() - positives);
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 170)]
    false_per_assay: usize,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

pub fn train(args: TrainArgs, run_seed: u64) -> Result<()> {
    let corpus = args.corpus.load()?.corpus;
    let model = args.scorer.train_native(&corpus, &sampling(args.false_per_assay, run_seed))?;
    save_model(&args.out, &model)?;
    write_sidecar(&args.out, "train", run_seed)?;
    println!("trained {} model on {} assays -> {}", args.scorer.scorer_name(), corpus.len(), args.out.display());
    Ok(())
}

impl ScorerArgs {
    fn scorer_name(&self) -> &'static str {
        match self.scorer {
            ScorerKind::Frequency => "frequency",
            ScorerKind::Lexical => "lexical",
            ScorerKind::Remote => "remote",
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    #[arg(long, default_value_t = 170)]
    false_per_assay: usize,
    /// Fixed decision threshold in [0, 1]; default is the scorer's own rule.
    #[arg(long)]
    threshold: Option<f64>,
    /// Directory for report.json, metadata.json and optional plot data.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also run the hit-and-miss simulation on the first fold and write hitmiss.grid.
    #[arg(long)]
    hit_and_miss: bool,
}

#[derive(Serialize)]
struct EvaluationReport {
    scorer: ScorerKind,
    folds: usize,
    false_per_assay: usize,
    seed: u64,
    threshold: Option<f64>,
    reports: Vec<CvReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hit_and_miss: Option<HitMissSummary>,
}

pub fn evaluate(args: EvaluateArgs, run_seed: u64) -> Result<()> {
    let corpus = args.corpus.load()?.corpus;
    let factory = args.scorer.factory(run_seed)?;
    let sampling = SamplingConfig::new(args.false_per_assay, run_seed);
    let modes = [EvaluationMode::SampledPair, EvaluationMode::FullVocabulary];
    let reports = cross_validate_modes(&corpus, factory.as_ref(), args.folds, &sampling, args.threshold, &modes)?;

    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let hit_and_miss = if args.hit_and_miss {
        let split = protocol_folds(&corpus, args.folds, &sampling)?;
        let (train_sampling, _) = fold_sampling(&sampling, 0);
        let model = factory.train(&split[0].train, &train_sampling)?;
        let traces = hit_and_miss_corpus(model.as_ref(), &split[0].test)?;
        emit_plot_data(&traces, &args.out_dir.join("hitmiss.grid"))?;
        Some(summarize_traces(&traces))
    } else {
        None
    };

    let mut out = std::io::stdout().lock();
    writeln!(out, "mode\tfold\tP\tR\tF1")?;
    for r in &reports {
        for f in &r.folds {
            writeln!(out, "{}\t{}\t{:.3}\t{:.3}\t{:.3}", r.mode, f.fold + 1, f.metrics.precision, f.metrics.recall, f.metrics.f1)?;
        }
        writeln!(out, "{}\tavg\t{:.3}\t{:.3}\t{:.3}", r.mode, r.mean.precision, r.mean.recall, r.mean.f1)?;
    }
    let report = EvaluationReport {
        scorer: args.scorer.scorer,
        folds: args.folds,
        false_per_assay: args.false_per_assay,
        seed: run_seed,
        threshold: args.threshold,
        reports,
        hit_and_miss,
    };
    write_json(&args.out_dir.join("report.json"), &report)?;
    write_metadata(&args.out_dir.join("metadata.json"), "evaluate", run_seed)?;
    Ok(())
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    SampledPair,
    FullVocabulary,
}

impl From<ModeArg> for EvaluationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SampledPair => EvaluationMode::SampledPair,
            ModeArg::FullVocabulary => EvaluationMode::FullVocabulary,
        }
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long, default_value_t = 100)]
    start: usize,
    #[arg(long, default_value_t = 300)]
    stop: usize,
    #[arg(long, default_value_t = 10)]
    step: usize,
    #[arg(long, default_value_t = 3)]
    folds: usize,
    /// Evaluate every fold per point instead of only the first.
    #[arg(long)]
    all_folds: bool,
    #[arg(long, value_enum, default_value = "sampled-pair")]
    mode: ModeArg,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SweepReport {
    scorer: ScorerKind,
    folds: usize,
    which: SweepFolds,
    seed: u64,
    threshold: Option<f64>,
    #[serde(flatten)]
    result: SweepResult,
}

pub fn sweep(args: SweepArgs, run_seed: u64) -> Result<()> {
    let corpus = args.corpus.load()?.corpus;
    let range = SweepRange::new(args.start, args.stop, args.step).map_err(|e| UsageError(e.to_string()))?;
    let factory = args.scorer.factory(run_seed)?;
    let which = if args.all_folds { SweepFolds::All } else { SweepFolds::First };
    let config = SweepConfig {
        range,
        folds: args.folds,
        which,
        seed: run_seed,
        threshold: args.threshold,
        mode: args.mode.into(),
    };
    let result = sweep_false_labels(&corpus, factory.as_ref(), &config)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "false\tP\tR\tF1")?;
    for (i, p) in result.points.iter().enumerate() {
        let mark = if i == result.best { "\t*" } else { "" };
        writeln!(out, "{}\t{:.3}\t{:.3}\t{:.3}{mark}", p.false_per_assay, p.mean.precision, p.mean.recall, p.mean.f1)?;
    }
    write_json(
        &args.out,
        &SweepReport {
            scorer: args.scorer.scorer,
            folds: args.folds,
            which,
            seed: run_seed,
            threshold: args.threshold,
            result,
        },
    )?;
    write_sidecar(&args.out, "sweep", run_seed)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Corpus supplying candidates, training data and --assay lookups.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    annotations: Option<PathBuf>,
    /// Assay from the corpus to semantify.
    #[arg(long, conflicts_with_all = ["text", "text_file"])]
    assay: Option<String>,
    /// Assay description given inline.
    #[arg(long, conflicts_with = "text_file")]
    text: Option<String>,
    /// Assay description read from a file.
    #[arg(long)]
    text_file: Option<PathBuf>,
    /// Assay id used for free-text input.
    #[arg(long, default_value = "query")]
    id: String,
    /// Print the k best statements instead of the accepted ones.
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 170)]
    false_per_assay: usize,
    /// Write the printed statements as a triple file.
    #[arg(long)]
    export: Option<PathBuf>,
}

pub fn predict(args: PredictArgs, run_seed: u64) -> Result<()> {
    if let Some(t) = args.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(UsageError(format!("threshold {t} outside [0, 1]")).into());
        }
    }
    let corpus = match &args.corpus {
        Some(path) => Some(
            CorpusArgs {
                corpus: path.clone(),
                annotations: args.annotations.clone(),
                filter: None,
            }
            .load()?
            .corpus,
        ),
        None => None,
    };
    let assay = match (&args.assay, &args.text, &args.text_file) {
        (Some(id), _, _) => {
            let corpus = corpus.as_ref().ok_or_else(|| UsageError("--assay needs --corpus".into()))?;
            corpus
                .get(id)
                .ok_or_else(|| semantify_core::Error::UnknownAssay(id.clone()))?
                .assay
                .clone()
        }
        (None, Some(text), _) => Bioassay::new(args.id.clone(), text.clone()),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Bioassay::new(args.id.clone(), text.trim().to_string())
        }
        _ => return Err(UsageError("one of --assay, --text or --text-file is required".into()).into()),
    };
    let loaded = args.model.resolve(corpus.as_ref(), &sampling(args.false_per_assay, run_seed), run_seed)?;
    let candidates: Vec<&SemanticStatement> = match &corpus {
        Some(c) => c.vocabulary().iter().map(|(_, s)| s).collect(),
        None => loaded.statements.iter().collect(),
    };

    let started = Instant::now();
    let ranked = rank_statements(loaded.scorer.as_ref(), &assay, &candidates)?;
    let elapsed = started.elapsed().as_secs_f64();
    let shown: Vec<(usize, &_)> = match args.top_k {
        Some(k) => ranked.iter().take(k).enumerate().collect(),
        None => ranked
            .iter()
            .enumerate()
            .filter(|(_, r)| decide(loaded.scorer.as_ref(), &r.statement, &r.score, args.threshold))
            .collect(),
    };
    let mut out = std::io::stdout().lock();
    for (rank, r) in &shown {
        writeln!(out, "{}\t{:.4}\t{}\t{}", rank + 1, r.score.value, r.statement.predicate(), r.statement.object())?;
    }
    eprintln!(
        "semantified `{}` over {} candidates in {:.3}s (reference: {:.0}s per assay)",
        assay.id,
        candidates.len(),
        elapsed,
        REFERENCE_SECONDS_PER_ASSAY
    );
    if let Some(path) = args.export {
        let set = export_triples(&assay.id, shown.iter().map(|(_, r)| &r.statement), Provenance::Predicted);
        save_triples(&set, &path)?;
        write_sidecar(&path, "predict", run_seed)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Assays to export (repeatable); all assays when omitted.
    #[arg(long)]
    assay: Vec<String>,
    /// Directory receiving one `<id>.triples` file per assay. Without it a
    /// single assay is written to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn export(args: ExportArgs, run_seed: u64) -> Result<()> {
    let corpus = args.corpus.load()?.corpus;
    let ids: Vec<String> = if args.assay.is_empty() {
        corpus.assay_ids().map(str::to_string).collect()
    } else {
        args.assay.clone()
    };
    let mut sets = Vec::with_capacity(ids.len());
    for id in &ids {
        let assay = corpus.get(id).ok_or_else(|| semantify_core::Error::UnknownAssay(id.clone()))?;
        sets.push(export_triples(id, corpus.statements_of(assay), Provenance::Gold));
    }
    match args.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for set in &sets {
                save_triples(set, &dir.join(format!("{}.triples", file_stem(&set.assay_id))))?;
            }
            write_metadata(&dir.join("export.meta.json"), "export", run_seed)?;
            println!("{} triple files -> {}", sets.len(), dir.display());
        }
        None if sets.len() == 1 => print!("{}", triples_to_string(&sets[0])),
        None => return Err(UsageError("several assays selected; give --out-dir".into()).into()),
    }
    Ok(())
}

/// Assay ids as file names: path separators and other awkward bytes replaced.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Triple files, one per assay (at least two).
    #[arg(required = true, num_args = 2..)]
    files: Vec<PathBuf>,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn compare(args: CompareArgs, run_seed: u64) -> Result<()> {
    let sets = args.files.iter().map(|p| load_triples(p)).collect::<semantify_core::Result<Vec<_>>>()?;
    let table = compare_assays(&sets)?;
    print!("{}", render_table(&table));
    if let Some(path) = args.json {
        write_json(&path, &table)?;
        write_sidecar(&path, "compare", run_seed)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 983)]
    assays: usize,
    #[arg(long, default_value_t = 1756)]
    vocabulary: usize,
    #[arg(long, default_value_t = 5)]
    min_statements: usize,
    #[arg(long, default_value_t = 92)]
    max_statements: usize,
    /// Share of gold statements mentioned in the description.
    #[arg(long, default_value_t = 0.5)]
    mention_rate: f64,
    /// Zipf exponent of statement popularity.
    #[arg(long, default_value_t = 1.0)]
    skew: f64,
}

pub fn synth(args: SynthArgs, run_seed: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&args.mention_rate) || args.skew < 0.0 {
        return Err(UsageError("--mention-rate must lie in [0, 1] and --skew be non-negative".into()).into());
    }
    let corpus = synth::corpus(&SynthConfig {
        assays: args.assays,
        vocabulary: args.vocabulary,
        min_statements: args.min_statements,
        max_statements: args.max_statements,
        skew: args.skew,
        mention_rate: args.mention_rate,
        seed: run_seed,
    })
    .map_err(|e| UsageError(e.to_string()))?;
    corpus.save_jsonl(&args.out)?;
    write_sidecar(&args.out, "synth", run_seed)?;
    println!("{} assays, {} statements -> {}", corpus.len(), corpus.vocabulary().len(), args.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct HealthArgs {
    #[arg(long)]
    endpoint: String,
    #[arg(long, default_value_t = 5.0)]
    timeout: f64,
}

/// Prints the status record; an unreachable service exits with the remote code.
pub fn health(args: HealthArgs) -> Result<()> {
    let e = endpoint(&args.endpoint, args.timeout, 1, |e| {
        e.retry.retries = 0;
        Ok(())
    })?;
    let client = NeuralClient::new(e)?;
    match client.check() {
        Ok(status) => {
            println!("{}", serde_json::to_string(&status)?);
            Ok(())
        }
        Err(e) => {
            let status = ServiceStatus::Unreachable { reason: e.to_string() };
            println!("{}", serde_json::to_string(&status)?);
            Err(e.into())
        }
    }
}
