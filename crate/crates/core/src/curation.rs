//! Server-side state for interactive curation.
//!
//! A curator works through one assay at a time and is always shown the single
//! highest-ranked statement not yet decided, mirroring the hit-and-miss
//! simulation: approving is a hit, rejecting a miss. Sessions are keyed by
//! `(session token, assay id)` and are independent of each other.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SemanticStatement, StatementId};
use crate::error::{Error, Result};
use crate::evaluation::Mark;
use crate::kgexport::{export_triples, Provenance, TripleSet};
use crate::scoring::{ranking_order, Scorer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Approve,
    Reject,
}

impl Verdict {
    pub fn mark(self) -> Mark {
        match self {
            Verdict::Approve => Mark::Hit,
            Verdict::Reject => Mark::Miss,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub statement_id: StatementId,
    pub predicate: String,
    pub object: String,
    pub score: f64,
    /// Position in the assay's full ranking, zero-based.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub statement_id: StatementId,
    pub decision: Verdict,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionAck {
    pub recorded: DecisionRecord,
    pub approvals: usize,
    pub decisions: usize,
    pub next: Option<Suggestion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssaySummary {
    pub id: String,
    pub title: String,
}

#[derive(Clone, Debug, Default)]
struct Session {
    approved: BTreeSet<StatementId>,
    rejected: BTreeSet<StatementId>,
    log: Vec<DecisionRecord>,
}

impl Session {
    fn decided(&self, id: StatementId) -> bool {
        self.approved.contains(&id) || self.rejected.contains(&id)
    }
}

type Ranking = Arc<Vec<(StatementId, f64)>>;

pub struct CurationStore {
    corpus: Arc<Corpus>,
    scorer: Arc<dyn Scorer>,
    rankings: Mutex<HashMap<String, Ranking>>,
    sessions: Mutex<HashMap<(String, String), Session>>,
}

impl CurationStore {
    /// Candidates for every assay are the corpus vocabulary.
    pub fn new(corpus: Arc<Corpus>, scorer: Arc<dyn Scorer>) -> Self {
        CurationStore {
            corpus,
            scorer,
            rankings: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn assays(&self) -> Vec<AssaySummary> {
        self.corpus
            .assays()
            .iter()
            .map(|a| AssaySummary {
                id: a.assay.id.clone(),
                title: a.assay.title(80),
            })
            .collect()
    }

    fn ranking(&self, assay_id: &str) -> Result<Ranking> {
        if let Some(r) = self.rankings.lock().expect("rankings lock").get(assay_id) {
            return Ok(r.clone());
        }
        let assay = self
            .corpus
            .get(assay_id)
            .ok_or_else(|| Error::UnknownAssay(assay_id.to_string()))?;
        let vocabulary = self.corpus.vocabulary();
        let statements: Vec<&SemanticStatement> = vocabulary.iter().map(|(_, s)| s).collect();
        let scores = self.scorer.score_batch(&assay.assay, &statements)?;
        let mut ranking: Vec<(StatementId, f64)> =
            vocabulary.ids().zip(scores.iter().map(|s| s.value)).collect();
        ranking.sort_by(|a, b| {
            ranking_order(
                (vocabulary.statement(a.0), a.1),
                (vocabulary.statement(b.0), b.1),
            )
        });
        let ranking = Arc::new(ranking);
        self.rankings
            .lock()
            .expect("rankings lock")
            .insert(assay_id.to_string(), ranking.clone());
        Ok(ranking)
    }

    fn suggestion(&self, ranking: &[(StatementId, f64)], session: &Session) -> Option<Suggestion> {
        ranking
            .iter()
            .enumerate()
            .find(|(_, (id, _))| !session.decided(*id))
            .map(|(rank, &(id, score))| {
                let s = self.corpus.vocabulary().statement(id);
                Suggestion {
                    statement_id: id,
                    predicate: s.predicate().to_string(),
                    object: s.object().to_string(),
                    score,
                    rank,
                }
            })
    }

    /// Highest-ranked undecided statement, `None` once everything is decided.
    pub fn next(&self, assay_id: &str, session: &str) -> Result<Option<Suggestion>> {
        let ranking = self.ranking(assay_id)?;
        let sessions = self.sessions.lock().expect("sessions lock");
        let state = sessions
            .get(&(session.to_string(), assay_id.to_string()))
            .cloned()
            .unwrap_or_default();
        Ok(self.suggestion(&ranking, &state))
    }

    pub fn decide(
        &self,
        assay_id: &str,
        session: &str,
        statement_id: StatementId,
        decision: Verdict,
    ) -> Result<DecisionAck> {
        let ranking = self.ranking(assay_id)?;
        if self.corpus.vocabulary().get(statement_id).is_none() {
            return Err(Error::UnknownStatement(statement_id.0));
        }
        let score = ranking
            .iter()
            .find(|(id, _)| *id == statement_id)
            .map_or(0.0, |(_, s)| *s);
        let mut sessions = self.sessions.lock().expect("sessions lock");
        let state = sessions
            .entry((session.to_string(), assay_id.to_string()))
            .or_default();
        if state.decided(statement_id) {
            return Err(Error::AlreadyDecided(statement_id.0));
        }
        match decision {
            Verdict::Approve => state.approved.insert(statement_id),
            Verdict::Reject => state.rejected.insert(statement_id),
        };
        let recorded = DecisionRecord {
            statement_id,
            decision,
            score,
        };
        state.log.push(recorded.clone());
        Ok(DecisionAck {
            recorded,
            approvals: state.approved.len(),
            decisions: state.log.len(),
            next: self.suggestion(&ranking, state),
        })
    }

    pub fn log(&self, assay_id: &str, session: &str) -> Result<Vec<DecisionRecord>> {
        if self.corpus.get(assay_id).is_none() {
            return Err(Error::UnknownAssay(assay_id.to_string()));
        }
        Ok(self
            .sessions
            .lock()
            .expect("sessions lock")
            .get(&(session.to_string(), assay_id.to_string()))
            .map(|s| s.log.clone())
            .unwrap_or_default())
    }

    /// Approved statements of the session as curated triples.
    pub fn triples(&self, assay_id: &str, session: &str) -> Result<TripleSet> {
        if self.corpus.get(assay_id).is_none() {
            return Err(Error::UnknownAssay(assay_id.to_string()));
        }
        let sessions = self.sessions.lock().expect("sessions lock");
        let approved = sessions
            .get(&(session.to_string(), assay_id.to_string()))
            .map(|s| s.approved.clone())
            .unwrap_or_default();
        let vocabulary = self.corpus.vocabulary();
        Ok(export_triples(
            assay_id,
            approved.iter().map(|&id| vocabulary.statement(id)),
            Provenance::Curated,
        ))
    }
}
