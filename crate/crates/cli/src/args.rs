use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use semantify_core::corpus::{filter_noninformative, load_corpus, FilterPolicy, FilterReport, LoadReport};
use semantify_core::neural::{
    Hyperparams, NeuralClient, RemoteFactory, RemoteModelHandle, RemoteScorer, ServiceEndpoint,
    ServiceStatus,
};
use semantify_core::scoring::{
    load_model, FrequencyFactory, FrequencyModel, LexicalFactory, LexicalModel, LexicalParams,
    NegativeRefresh, ScorerFactory, StoredModel,
};
use semantify_core::seed;
use semantify_core::{Corpus, CorpusFormat, SamplingConfig, Scorer, SemanticStatement};

use crate::UsageError;

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Corpus file: JSON lines, or the descriptions TSV when --annotations is given.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Annotations TSV (assay_id, predicate, object) for the two-file layout.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// JSON filter policy for non-informative statements.
    #[arg(long)]
    pub filter: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct LoadedCorpus {
    #[serde(skip)]
    pub corpus: Corpus,
    pub load: LoadReport,
    pub filter: Option<FilterReport>,
}

impl CorpusArgs {
    pub fn load(&self) -> Result<LoadedCorpus> {
        let format = match &self.annotations {
            Some(a) => CorpusFormat::TwoFile { annotations: a.clone() },
            None => CorpusFormat::JsonLines,
        };
        let (corpus, load) = load_corpus(&self.corpus, &format)?;
        if load.duplicates_collapsed > 0 {
            log::warn!("{} duplicate statements collapsed", load.duplicates_collapsed);
        }
        let Some(path) = &self.filter else {
            return Ok(LoadedCorpus { corpus, load, filter: None });
        };
        let policy = FilterPolicy::load(path)?;
        let (corpus, report) = filter_noninformative(&corpus, &policy)?;
        Ok(LoadedCorpus {
            corpus,
            load,
            filter: Some(report),
        })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Frequency,
    Lexical,
    Remote,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Refresh {
    PerRun,
    PerEpoch,
}

#[derive(Args, Debug, Clone)]
pub struct ScorerArgs {
    #[arg(long, value_enum, default_value = "frequency")]
    pub scorer: ScorerKind,
    /// Frequency scorer: keep the mean-length cutoff instead of fitting it.
    #[arg(long)]
    pub no_fit_cutoff: bool,
    /// Training epochs (lexical default 300, remote default 2).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate (lexical default 0.5, remote default 2e-5).
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Lexical scorer: when training negatives are drawn.
    #[arg(long, value_enum, default_value = "per-run")]
    pub refresh: Refresh,
    /// Base address of the inference service, e.g. http://127.0.0.1:8000
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// Training request timeout in seconds.
    #[arg(long, default_value_t = 21600.0)]
    pub train_timeout: f64,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Pairs per score request.
    #[arg(long, default_value_t = 64)]
    pub chunk_size: usize,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    #[arg(long, default_value_t = 512)]
    pub max_sequence_length: u32,
    /// Reuse a model already trained by the service instead of training one.
    #[arg(long)]
    pub model_id: Option<String>,
}

impl ScorerArgs {
    fn lexical_params(&self) -> LexicalParams {
        let d = LexicalParams::default();
        LexicalParams {
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            refresh: match self.refresh {
                Refresh::PerRun => NegativeRefresh::PerRun,
                Refresh::PerEpoch => NegativeRefresh::PerEpoch,
            },
            ..d
        }
    }

    fn hyperparams(&self, run_seed: u64) -> Hyperparams {
        let d = Hyperparams::default();
        Hyperparams {
            epochs: self.epochs.map_or(d.epochs, |e| e as u32),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            seed: seed::derive(run_seed, "remote-training"),
            max_sequence_length: self.max_sequence_length,
        }
    }

    pub fn endpoint(&self) -> Result<ServiceEndpoint> {
        let url = self
            .endpoint
            .clone()
            .ok_or_else(|| UsageError("--scorer remote requires --endpoint".into()))?;
        endpoint(&url, self.timeout, self.max_in_flight, |e| {
            e.train_timeout = secs(self.train_timeout)?;
            e.chunk_size = self.chunk_size;
            e.retry.retries = self.retries;
            Ok(())
        })
    }

    /// Client for the remote scorer; an unreachable service is an error
    /// naming the endpoint.
    pub fn client(&self) -> Result<Arc<NeuralClient>> {
        let client = NeuralClient::new(self.endpoint()?)?;
        match client.check()? {
            ServiceStatus::ReachableWithWarning { warning, .. } => log::warn!("{warning}"),
            ServiceStatus::Reachable { version } => log::info!("inference service {version}"),
            ServiceStatus::Unreachable { .. } => unreachable!("check reports unreachable as an error"),
        }
        Ok(Arc::new(client))
    }

    pub fn factory(&self, run_seed: u64) -> Result<Box<dyn ScorerFactory>> {
        Ok(match self.scorer {
            ScorerKind::Frequency => Box::new(FrequencyFactory {
                fit_decision_rank: !self.no_fit_cutoff,
            }),
            ScorerKind::Lexical => Box::new(LexicalFactory {
                params: self.lexical_params(),
            }),
            ScorerKind::Remote => Box::new(RemoteFactory {
                client: self.client()?,
                hyperparams: self.hyperparams(run_seed),
            }),
        })
    }

    /// A native model trained on `corpus`, for persisting.
    pub fn train_native(&self, corpus: &Corpus, sampling: &SamplingConfig) -> Result<StoredModel> {
        Ok(match self.scorer {
            ScorerKind::Frequency if self.no_fit_cutoff => StoredModel::Frequency(FrequencyModel::train(corpus)?),
            ScorerKind::Frequency => StoredModel::Frequency(FrequencyModel::train_fitted(corpus, sampling)?),
            ScorerKind::Lexical => StoredModel::Lexical(LexicalModel::train(corpus, sampling, &self.lexical_params())?),
            ScorerKind::Remote => {
                return Err(UsageError("remote models live in the service; use --model-id with predict or serve".into()).into())
            }
        })
    }

    /// A scorer trained on `corpus` (or attached to `--model-id`).
    pub fn scorer(&self, corpus: &Corpus, sampling: &SamplingConfig, run_seed: u64) -> Result<Arc<dyn Scorer>> {
        if self.scorer == ScorerKind::Remote {
            let client = self.client()?;
            if let Some(id) = &self.model_id {
                return Ok(Arc::new(RemoteScorer::new(
                    client,
                    RemoteModelHandle {
                        model_id: id.clone(),
                        false_per_assay: sampling.false_per_assay,
                        hyperparams: self.hyperparams(run_seed),
                    },
                )));
            }
            let factory = RemoteFactory {
                client,
                hyperparams: self.hyperparams(run_seed),
            };
            return Ok(Arc::from(factory.train(corpus, sampling)?));
        }
        Ok(Arc::from(self.train_native(corpus, sampling)?.into_scorer()))
    }
}

pub fn secs(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| UsageError(format!("timeout must be a positive number of seconds, got {s}")).into())
}

pub fn endpoint(
    url: &str,
    timeout: f64,
    max_in_flight: usize,
    extra: impl FnOnce(&mut ServiceEndpoint) -> Result<()>,
) -> Result<ServiceEndpoint> {
    let mut e = ServiceEndpoint::new(url);
    e.timeout = secs(timeout)?;
    e.max_in_flight = max_in_flight;
    extra(&mut e)?;
    e.validate().map_err(|err| UsageError(err.to_string()))?;
    Ok(e)
}

/// Either a persisted native model or a scorer trained on the corpus.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model file written by `semantify train`.
    #[arg(long, conflicts_with = "scorer")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

pub struct LoadedModel {
    pub scorer: Arc<dyn Scorer>,
    /// Candidate statements known to a model file.
    pub statements: Vec<SemanticStatement>,
}

impl ModelArgs {
    pub fn resolve(&self, corpus: Option<&Corpus>, sampling: &SamplingConfig, run_seed: u64) -> Result<LoadedModel> {
        if let Some(path) = &self.model {
            let stored = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
            let statements = stored.statements();
            return Ok(LoadedModel {
                scorer: Arc::from(stored.into_scorer()),
                statements,
            });
        }
        let corpus = corpus.ok_or_else(|| UsageError("either --model or --corpus is required".into()))?;
        Ok(LoadedModel {
            scorer: self.scorer.scorer(corpus, sampling, run_seed)?,
            statements: Vec::new(),
        })
    }
}
