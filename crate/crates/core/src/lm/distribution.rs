use serde::{Deserialize, Serialize};

use super::ScoringError;
use crate::candidates::ScoringMode;

/// Unnormalized natural-log scores, one per inventory connective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScoreVector {
    mode: ScoringMode,
    scores: Vec<f64>,
}

impl LogScoreVector {
    /// `connectives` names the entries for error messages.
    pub fn new(mode: ScoringMode, scores: Vec<f64>, connectives: &[String]) -> Result<Self, ScoringError> {
        if scores.len() != connectives.len() {
            return Err(ScoringError::Length {
                expected: connectives.len(),
                found: scores.len(),
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(ScoringError::NonFinite {
                connective: connectives[i].clone(),
                value: scores[i],
            });
        }
        Ok(LogScoreVector { mode, scores })
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Adds `c` to every entry (a rescaling in probability space).
    pub fn shifted(&self, c: f64) -> Self {
        LogScoreVector {
            mode: self.mode,
            scores: self.scores.iter().map(|s| s + c).collect(),
        }
    }
}

/// Probability over inventory connectives for one relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConnectiveDistribution {
    probs: Vec<f64>,
}

pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

impl ConnectiveDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, ScoringError> {
        if probs.is_empty() {
            return Err(ScoringError::InvalidDistribution("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ScoringError::InvalidDistribution(
                "negative or non-finite probability".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(ScoringError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(ConnectiveDistribution { probs })
    }

    /// All mass on connective `index`.
    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        ConnectiveDistribution { probs }
    }

    pub fn uniform(len: usize) -> Self {
        ConnectiveDistribution {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Softmax of the log-scores, computed with max subtraction.
pub fn normalize(scores: &LogScoreVector) -> ConnectiveDistribution {
    let max = scores
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    ConnectiveDistribution {
        probs: exps.into_iter().map(|e| e / total).collect(),
    }
}

/// Index of the largest entry; the earliest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Inventory index of the most probable connective.
pub fn top_connective(dist: &ConnectiveDistribution) -> usize {
    argmax(&dist.probs)
}
