//! Connective distributions from language-model scores.
//!
//! A backend assigns each candidate a log-score; [`normalize`] turns the
//! scores into `P(connective | arg1, arg2)`. No length correction is
//! applied unless a backend is explicitly asked for one.

mod distribution;
mod ngram;

pub use distribution::{
    argmax, normalize, top_connective, ConnectiveDistribution, LogScoreVector, DISTRIBUTION_TOLERANCE,
};
pub use ngram::{tokenize, NGramModel, UNK};

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::candidates::{CandidateSet, Candidates, ScoringMode};
use crate::sidecar::{SidecarClient, SidecarError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("backend `{backend}` does not support {mode} scoring")]
    ModeUnsupported { backend: String, mode: ScoringMode },
    #[error("expected {expected} scores, found {found}")]
    Length { expected: usize, found: usize },
    #[error("non-finite score {value} for connective `{connective}`")]
    NonFinite { connective: String, value: f64 },
    #[error("invalid connective distribution: {0}")]
    InvalidDistribution(String),
    #[error("n-gram model: {0}")]
    NGram(String),
    #[error("score table: {0}")]
    Table(String),
    #[error(transparent)]
    Sidecar(#[from] SidecarError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Something that can put a log-score on every candidate of a set.
pub trait ScoringBackend: Send + Sync {
    /// Identifier recorded in report metadata.
    fn id(&self) -> String;

    fn supports(&self, mode: ScoringMode) -> bool;

    /// One log-score per connective, in candidate order. Validation is done
    /// by [`score`].
    fn raw_scores(&self, cands: &CandidateSet) -> Result<Vec<f64>, ScoringError>;
}

/// Scores a candidate set, checking mode support, length and finiteness.
pub fn score(backend: &dyn ScoringBackend, cands: &CandidateSet) -> Result<LogScoreVector, ScoringError> {
    let mode = cands.mode();
    if !backend.supports(mode) {
        return Err(ScoringError::ModeUnsupported {
            backend: backend.id(),
            mode,
        });
    }
    let raw = backend.raw_scores(cands)?;
    LogScoreVector::new(mode, raw, &cands.connectives)
}

/// Gives every connective the same score.
#[derive(Clone, Debug, Default)]
pub struct UniformBackend;

impl ScoringBackend for UniformBackend {
    fn id(&self) -> String {
        "uniform".into()
    }

    fn supports(&self, _mode: ScoringMode) -> bool {
        true
    }

    fn raw_scores(&self, cands: &CandidateSet) -> Result<Vec<f64>, ScoringError> {
        Ok(vec![0.0; cands.len()])
    }
}

/// Joint log-likelihood of each causal candidate under an n-gram model.
#[derive(Clone, Debug)]
pub struct NGramBackend {
    model: Arc<NGramModel>,
    /// Divide each score by its token count. Off by default.
    pub length_normalize: bool,
}

impl NGramBackend {
    pub fn new(model: NGramModel) -> Self {
        NGramBackend {
            model: Arc::new(model),
            length_normalize: false,
        }
    }

    pub fn model(&self) -> &NGramModel {
        &self.model
    }
}

impl ScoringBackend for NGramBackend {
    fn id(&self) -> String {
        format!("ngram(order={},k={})", self.model.order(), self.model.k())
    }

    fn supports(&self, mode: ScoringMode) -> bool {
        mode == ScoringMode::Causal
    }

    fn raw_scores(&self, cands: &CandidateSet) -> Result<Vec<f64>, ScoringError> {
        let Candidates::Causal(texts) = &cands.candidates else {
            return Err(ScoringError::ModeUnsupported {
                backend: self.id(),
                mode: cands.mode(),
            });
        };
        Ok(texts
            .iter()
            .map(|text| {
                let tokens = tokenize(text);
                let lp = self.model.log_prob(&tokens);
                if self.length_normalize && !tokens.is_empty() {
                    lp / tokens.len() as f64
                } else {
                    lp
                }
            })
            .collect())
    }
}

#[derive(Deserialize)]
struct TableRow {
    id: String,
    mode: ScoringMode,
    scores: BTreeMap<String, f64>,
}

/// Precomputed scores keyed by relation id and mode, read from JSON Lines
/// rows `{"id": .., "mode": "causal"|"masked", "scores": {connective: score}}`.
#[derive(Clone, Debug, Default)]
pub struct TableBackend {
    name: String,
    rows: HashMap<(String, ScoringMode), HashMap<String, f64>>,
}

impl TableBackend {
    pub fn new(name: impl Into<String>) -> Self {
        TableBackend {
            name: name.into(),
            rows: HashMap::new(),
        }
    }

    pub fn insert(&mut self, relation_id: &str, mode: ScoringMode, scores: impl IntoIterator<Item = (String, f64)>) {
        let row = scores
            .into_iter()
            .map(|(c, s)| (c.to_lowercase(), s))
            .collect();
        self.rows.insert((relation_id.to_string(), mode), row);
    }

    pub fn from_jsonl<R: BufRead>(name: impl Into<String>, input: R) -> Result<Self, ScoringError> {
        let mut table = TableBackend::new(name);
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(&line)
                .map_err(|e| ScoringError::Table(format!("line {}: {e}", idx + 1)))?;
            table.insert(&row.id, row.mode, row.scores);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl ScoringBackend for TableBackend {
    fn id(&self) -> String {
        format!("table({})", self.name)
    }

    fn supports(&self, _mode: ScoringMode) -> bool {
        true
    }

    fn raw_scores(&self, cands: &CandidateSet) -> Result<Vec<f64>, ScoringError> {
        let row = self
            .rows
            .get(&(cands.relation_id.clone(), cands.mode()))
            .ok_or_else(|| {
                ScoringError::Table(format!("no {} row for relation `{}`", cands.mode(), cands.relation_id))
            })?;
        cands
            .connectives
            .iter()
            .map(|c| {
                row.get(&c.to_lowercase()).copied().ok_or_else(|| {
                    ScoringError::Table(format!("relation `{}` has no score for `{c}`", cands.relation_id))
                })
            })
            .collect()
    }
}

/// Delegates scoring to the external model service.
#[derive(Clone, Debug)]
pub struct SidecarBackend {
    client: Arc<SidecarClient>,
}

impl SidecarBackend {
    pub fn new(client: Arc<SidecarClient>) -> Self {
        SidecarBackend { client }
    }
}

impl ScoringBackend for SidecarBackend {
    fn id(&self) -> String {
        format!("sidecar({})", self.client.endpoint())
    }

    fn supports(&self, _mode: ScoringMode) -> bool {
        true
    }

    fn raw_scores(&self, cands: &CandidateSet) -> Result<Vec<f64>, ScoringError> {
        let (_, scores) = self
            .client
            .score(cands.mode(), [&cands.left, &cands.right], &cands.connectives)?;
        Ok(scores.into_iter().map(|s| s.unwrap_or(f64::NAN)).collect())
    }
}
