//! Client for the remote sentence-pair inference service.
//!
//! Wire protocol (JSON bodies over plain HTTP):
//!
//! | endpoint          | request                                                          | response          |
//! |-------------------|------------------------------------------------------------------|-------------------|
//! | `GET /healthz`    |                                                                  | `{status, version}` |
//! | `POST /v1/train`  | `{pairs: [{assay_text, statement_text, label}], hyperparams: {epochs, learning_rate, seed, max_sequence_length}}` | `{model_id}` |
//! | `POST /v1/score`  | `{model_id, pairs: [{assay_text, statement_text}]}`              | `{scores: [f64]}` |
//!
//! Score requests are chunked and dispatched with a bounded number of
//! requests in flight, admitted in arrival order. Only health and score
//! requests are retried.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{Bioassay, Corpus, SemanticStatement};
use crate::error::{Error, Result};
use crate::pairgen::{build_training_set, pair_texts, statement_text, LabeledPair, SamplingConfig};
use crate::scoring::{Score, Scorer, ScorerFactory};

/// Major protocol version this client speaks.
pub const SUPPORTED_SERVICE_MAJOR: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub retries: u32,
    /// Delay before retry `n` is `n * backoff`.
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 2,
            backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEndpoint {
    pub base_url: String,
    pub timeout: Duration,
    /// Timeout for the synchronous training call.
    pub train_timeout: Duration,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    /// Pairs per score request.
    pub chunk_size: usize,
}

impl ServiceEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        ServiceEndpoint {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(30),
            train_timeout: Duration::from_secs(6 * 3600),
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            chunk_size: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() || self.train_timeout.is_zero() {
            return Err(Error::InvalidArgument("endpoint timeout must be positive".into()));
        }
        if self.max_in_flight == 0 || self.chunk_size == 0 {
            return Err(Error::InvalidArgument(
                "max in-flight requests and chunk size must be at least 1".into(),
            ));
        }
        if !self.base_url.starts_with("http://") && !self.base_url.starts_with("https://") {
            return Err(Error::InvalidArgument(format!(
                "endpoint `{}` must be an http:// address",
                self.base_url
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: u32,
    pub learning_rate: f64,
    pub seed: u64,
    pub max_sequence_length: u32,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 2,
            learning_rate: 2e-5,
            seed: 0,
            max_sequence_length: 512,
        }
    }
}

/// A model trained by the service, plus the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteModelHandle {
    pub model_id: String,
    pub false_per_assay: usize,
    pub hyperparams: Hyperparams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum ServiceStatus {
    Reachable { version: String },
    ReachableWithWarning { version: String, warning: String },
    Unreachable { reason: String },
}

impl ServiceStatus {
    pub fn is_reachable(&self) -> bool {
        !matches!(self, ServiceStatus::Unreachable { .. })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub version: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainPair {
    pub assay_text: String,
    pub statement_text: String,
    pub label: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainRequest {
    pub pairs: Vec<TrainPair>,
    pub hyperparams: Hyperparams,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainResponse {
    pub model_id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScorePair {
    pub assay_text: String,
    pub statement_text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_id: String,
    pub pairs: Vec<ScorePair>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

/// Admits at most `limit` holders at once, strictly in arrival order.
struct FairGate {
    limit: usize,
    state: Mutex<GateState>,
    wake: Condvar,
}

#[derive(Default)]
struct GateState {
    next_ticket: u64,
    serving: u64,
    in_flight: usize,
}

struct Permit<'g>(&'g FairGate);

impl FairGate {
    fn new(limit: usize) -> Self {
        FairGate {
            limit,
            state: Mutex::new(GateState::default()),
            wake: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut state = self.state.lock().expect("gate lock");
        let ticket = state.next_ticket;
        state.next_ticket += 1;
        while !(state.serving == ticket && state.in_flight < self.limit) {
            state = self.wake.wait(state).expect("gate lock");
        }
        state.serving += 1;
        state.in_flight += 1;
        self.wake.notify_all();
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut state = self.0.state.lock().expect("gate lock");
        state.in_flight -= 1;
        self.0.wake.notify_all();
    }
}

enum Attempt<T> {
    Done(T),
    Retryable(Error),
    Fatal(Error),
}

pub struct NeuralClient {
    endpoint: ServiceEndpoint,
    agent: ureq::Agent,
    train_agent: ureq::Agent,
    gate: FairGate,
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

impl NeuralClient {
    pub fn new(endpoint: ServiceEndpoint) -> Result<Self> {
        endpoint.validate()?;
        Ok(NeuralClient {
            agent: agent(endpoint.timeout),
            train_agent: agent(endpoint.train_timeout),
            gate: FairGate::new(endpoint.max_in_flight),
            endpoint,
        })
    }

    pub fn endpoint(&self) -> &ServiceEndpoint {
        &self.endpoint
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.endpoint.base_url, path)
    }

    fn transport_error(&self, e: ureq::Error) -> Error {
        let endpoint = self.endpoint.base_url.clone();
        match e {
            ureq::Error::Timeout(_) => Error::Timeout { endpoint },
            ureq::Error::Json(e) => Error::Protocol {
                endpoint,
                message: format!("malformed response body: {e}"),
            },
            other => Error::Connection {
                endpoint,
                message: other.to_string(),
            },
        }
    }

    /// Sends one request and decodes a 2xx JSON body. Connection failures,
    /// timeouts and 5xx answers are retryable; everything else is not.
    fn exchange<Resp: for<'de> Deserialize<'de>>(
        &self,
        result: std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Attempt<Resp> {
        let mut response = match result {
            Ok(r) => r,
            Err(e) => {
                let err = self.transport_error(e);
                return match err {
                    Error::Protocol { .. } => Attempt::Fatal(err),
                    _ => Attempt::Retryable(err),
                };
            }
        };
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            let message = serde_json::from_str::<serde_json::Value>(&body)
                .ok()
                .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
                .unwrap_or(body);
            let err = Error::Service {
                endpoint: self.endpoint.base_url.clone(),
                message: format!("HTTP {status}: {message}"),
            };
            return if status >= 500 {
                Attempt::Retryable(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        match response.body_mut().read_json::<Resp>() {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fatal(Error::Protocol {
                endpoint: self.endpoint.base_url.clone(),
                message: format!("malformed response body: {e}"),
            }),
        }
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Attempt<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match call() {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retryable(e) if attempt >= self.endpoint.retry.retries => return Err(e),
                Attempt::Retryable(e) => {
                    attempt += 1;
                    log::warn!("retrying ({attempt}/{}): {e}", self.endpoint.retry.retries);
                    std::thread::sleep(self.endpoint.retry.backoff * attempt);
                }
            }
        }
    }

    /// Like [`health_check`](Self::health_check) but an unreachable service
    /// is returned as the underlying error.
    pub fn check(&self) -> Result<ServiceStatus> {
        let health: HealthResponse = self.with_retries(|| {
            let _permit = self.gate.acquire();
            self.exchange(self.agent.get(&self.url("/healthz")).call())
        })?;
        let major = health.version.split('.').next().and_then(|m| m.parse::<u64>().ok());
        if major == Some(SUPPORTED_SERVICE_MAJOR) && health.status == "ok" {
            return Ok(ServiceStatus::Reachable {
                version: health.version,
            });
        }
        let warning = if major != Some(SUPPORTED_SERVICE_MAJOR) {
            format!(
                "service version {} outside supported {}.x",
                health.version, SUPPORTED_SERVICE_MAJOR
            )
        } else {
            format!("service reports status `{}`", health.status)
        };
        Ok(ServiceStatus::ReachableWithWarning {
            version: health.version,
            warning,
        })
    }

    /// Never fails: an unreachable service is a status.
    pub fn health_check(&self) -> ServiceStatus {
        self.check().unwrap_or_else(|e| ServiceStatus::Unreachable {
            reason: e.to_string(),
        })
    }

    /// Trains a pair classifier on the service. Not retried.
    pub fn train<F>(
        &self,
        pairs: &[LabeledPair],
        texts: F,
        hyperparams: &Hyperparams,
        false_per_assay: usize,
    ) -> Result<RemoteModelHandle>
    where
        F: Fn(&LabeledPair) -> Option<(String, String)>,
    {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no training pairs".into()));
        }
        let pairs = pairs
            .iter()
            .map(|p| {
                let (assay_text, statement_text) = texts(p).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "no text for pair ({}, {})",
                        p.assay_id, p.statement_id
                    ))
                })?;
                Ok(TrainPair {
                    assay_text,
                    statement_text,
                    label: p.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let request = TrainRequest {
            pairs,
            hyperparams: *hyperparams,
        };
        let response: TrainResponse = {
            let _permit = self.gate.acquire();
            match self.exchange(self.train_agent.post(&self.url("/v1/train")).send_json(&request)) {
                Attempt::Done(r) => r,
                Attempt::Retryable(e) | Attempt::Fatal(e) => return Err(e),
            }
        };
        if response.model_id.trim().is_empty() {
            return Err(Error::Protocol {
                endpoint: self.endpoint.base_url.clone(),
                message: "empty model_id".into(),
            });
        }
        Ok(RemoteModelHandle {
            model_id: response.model_id,
            false_per_assay,
            hyperparams: *hyperparams,
        })
    }

    fn score_chunk(&self, handle: &RemoteModelHandle, chunk: &[ScorePair]) -> Result<Vec<f64>> {
        let request = ScoreRequest {
            model_id: handle.model_id.clone(),
            pairs: chunk.to_vec(),
        };
        let response: ScoreResponse = self.with_retries(|| {
            let _permit = self.gate.acquire();
            self.exchange(self.agent.post(&self.url("/v1/score")).send_json(&request))
        })?;
        let endpoint = || self.endpoint.base_url.clone();
        if response.scores.len() != chunk.len() {
            return Err(Error::Protocol {
                endpoint: endpoint(),
                message: format!(
                    "{} scores returned for {} pairs",
                    response.scores.len(),
                    chunk.len()
                ),
            });
        }
        if let Some(bad) = response.scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Protocol {
                endpoint: endpoint(),
                message: format!("score {bad} outside [0, 1]"),
            });
        }
        Ok(response.scores)
    }

    /// One score per pair, in input order.
    pub fn score(&self, handle: &RemoteModelHandle, batch: &[ScorePair]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        if handle.model_id.is_empty() {
            return Err(Error::Untrained);
        }
        let chunks: Vec<&[ScorePair]> = batch.chunks(self.endpoint.chunk_size).collect();
        let results: Vec<Mutex<Option<Result<Vec<f64>>>>> = chunks.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.endpoint.max_in_flight.min(chunks.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= chunks.len() {
                        break;
                    }
                    let result = self.score_chunk(handle, chunks[i]);
                    let failed = result.is_err();
                    *results[i].lock().expect("result slot") = Some(result);
                    if failed {
                        // stop handing out further chunks
                        next.store(chunks.len(), Ordering::SeqCst);
                    }
                });
            }
        });
        let mut scores = Vec::with_capacity(batch.len());
        for slot in results {
            match slot.into_inner().expect("result slot") {
                Some(Ok(chunk)) => scores.extend(chunk),
                Some(Err(e)) => return Err(e),
                None => {}
            }
        }
        if scores.len() != batch.len() {
            return Err(Error::Protocol {
                endpoint: self.endpoint.base_url.clone(),
                message: "scoring aborted before all chunks completed".into(),
            });
        }
        Ok(scores)
    }
}

/// [`Scorer`] backed by a model living in the remote service.
#[derive(Clone)]
pub struct RemoteScorer {
    client: Arc<NeuralClient>,
    handle: RemoteModelHandle,
}

impl RemoteScorer {
    pub fn new(client: Arc<NeuralClient>, handle: RemoteModelHandle) -> Self {
        RemoteScorer { client, handle }
    }

    pub fn handle(&self) -> &RemoteModelHandle {
        &self.handle
    }
}

impl Scorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn score_batch(&self, assay: &Bioassay, statements: &[&SemanticStatement]) -> Result<Vec<Score>> {
        let batch: Vec<ScorePair> = statements
            .iter()
            .map(|s| ScorePair {
                assay_text: assay.description.clone(),
                statement_text: statement_text(s),
            })
            .collect();
        Ok(self
            .client
            .score(&self.handle, &batch)?
            .into_iter()
            .map(Score::known)
            .collect())
    }
}

/// Trains one remote model per fold from the fold's sampled training set.
#[derive(Clone)]
pub struct RemoteFactory {
    pub client: Arc<NeuralClient>,
    pub hyperparams: Hyperparams,
}

impl ScorerFactory for RemoteFactory {
    fn train(&self, train: &Corpus, sampling: &SamplingConfig) -> Result<Box<dyn Scorer>> {
        let pairs = build_training_set(train, sampling);
        let handle = self.client.train(
            &pairs,
            |p| pair_texts(train, p).map(|(a, s)| (a.to_string(), s)),
            &self.hyperparams,
            sampling.false_per_assay,
        )?;
        Ok(Box::new(RemoteScorer::new(self.client.clone(), handle)))
    }
}
