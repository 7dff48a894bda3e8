//! Explicit relation classifiers: `P(sense | connective, arg1, arg2)`.

mod external;
mod frequency;

pub use external::{external_predict, SidecarClassifier, WIRE_TOLERANCE};
pub(crate) use frequency::connective_key;
pub use frequency::{train_frequency, FrequencyCounts, FrequencyModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabelSet;
use crate::lm::argmax;
use crate::sidecar::SidecarError;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no training relations carry a sense at level {level} ({dropped} dropped)")]
    EmptyTraining { level: u8, dropped: usize },
    #[error("smoothing k must be non-negative and finite, got {0}")]
    Smoothing(f64),
    #[error("invalid sense distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error(transparent)]
    Sidecar(#[from] SidecarError),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Probabilities aligned with a label set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SenseDistribution {
    probs: Vec<f64>,
}

impl SenseDistribution {
    /// Validates length, non-negativity and that the entries sum to one
    /// within `tolerance`. Never renormalizes.
    pub fn new(probs: Vec<f64>, labels: usize, tolerance: f64) -> Result<Self, ClassifierError> {
        if probs.len() != labels {
            return Err(ClassifierError::InvalidDistribution(format!(
                "expected {labels} entries, found {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ClassifierError::InvalidDistribution(
                "negative or non-finite probability".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(ClassifierError::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(SenseDistribution { probs })
    }

    /// For values produced in-crate that are stochastic by construction.
    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        SenseDistribution { probs }
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

    /// Index of the most probable label; earlier labels win ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierOutput {
    pub distribution: SenseDistribution,
    /// Set when the connective was unknown and a fallback prior was used.
    pub fallback: bool,
}

pub trait SenseClassifier: Send + Sync {
    fn id(&self) -> String;

    fn labels(&self) -> &LabelSet;

    fn classify(&self, connective: &str, arg1: &str, arg2: &str) -> Result<ClassifierOutput, ClassifierError>;

    /// Most probable label for `connective`.
    fn most_frequent_sense(&self, connective: &str, arg1: &str, arg2: &str) -> Result<usize, ClassifierError> {
        Ok(self.classify(connective, arg1, arg2)?.distribution.argmax())
    }
}
