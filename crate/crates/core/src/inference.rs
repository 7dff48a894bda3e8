//! Combining the connective distribution with the explicit classifier.
//!
//! * Pipeline: classify with the single most probable connective.
//! * Marginal: `P(l | a1, a2) = sum_C P_exp(l | C, a1, a2) * P_conn(C | a1, a2)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::ConnectiveInventory;
use crate::classifier::{ClassifierError, SenseClassifier, SenseDistribution};
use crate::corpus::LabelSet;
use crate::lm::{top_connective, ConnectiveDistribution};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("connective distribution has {found} entries, inventory has {expected}")]
    Inventory { expected: usize, found: usize },
    #[error("prediction lists differ in length ({pipeline} vs {marginal})")]
    Length { pipeline: usize, marginal: usize },
    #[error("prediction {index}: relation `{pipeline}` paired with `{marginal}`")]
    Misaligned {
        index: usize,
        pipeline: String,
        marginal: String,
    },
    #[error("label `{0}` is not in the label set")]
    Label(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pipeline,
    Marginal,
}

impl Method {
    pub const BOTH: [Method; 2] = [Method::Pipeline, Method::Marginal];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Pipeline => f.write_str("pipeline"),
            Method::Marginal => f.write_str("marginal"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub relation_id: String,
    pub method: Method,
    /// Always the argmax of `senses`, earliest label on ties.
    pub label: String,
    pub senses: SenseDistribution,
    pub top_connective: String,
    pub connectives: ConnectiveDistribution,
    /// The classifier fell back to its prior for at least one connective used.
    pub fallback: bool,
}

impl Prediction {
    fn build(
        relation_id: &str,
        method: Method,
        senses: SenseDistribution,
        labels: &LabelSet,
        dist: &ConnectiveDistribution,
        inv: &ConnectiveInventory,
        fallback: bool,
    ) -> Self {
        let label = labels.get(senses.argmax()).expect("distribution matches labels").to_string();
        Prediction {
            relation_id: relation_id.to_string(),
            method,
            label,
            senses,
            top_connective: inv.get(top_connective(dist)).expect("aligned").to_string(),
            connectives: dist.clone(),
            fallback,
        }
    }

    pub fn record(&self, with_connectives: bool) -> PredictionRecord {
        PredictionRecord {
            relation_id: self.relation_id.clone(),
            method: self.method,
            label: self.label.clone(),
            top_connective: self.top_connective.clone(),
            probs: self.senses.probs().to_vec(),
            conn_probs: with_connectives.then(|| self.connectives.probs().to_vec()),
        }
    }
}

/// Serialized form of a prediction, one per JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub relation_id: String,
    pub method: Method,
    pub label: String,
    pub top_connective: String,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conn_probs: Option<Vec<f64>>,
}

fn check_inventory(dist: &ConnectiveDistribution, inv: &ConnectiveInventory) -> Result<(), InferenceError> {
    if dist.len() != inv.len() {
        return Err(InferenceError::Inventory {
            expected: inv.len(),
            found: dist.len(),
        });
    }
    Ok(())
}

pub fn pipeline_predict(
    relation_id: &str,
    dist: &ConnectiveDistribution,
    inv: &ConnectiveInventory,
    clf: &dyn SenseClassifier,
    arg1: &str,
    arg2: &str,
) -> Result<Prediction, InferenceError> {
    check_inventory(dist, inv)?;
    let top = inv.get(top_connective(dist)).expect("aligned");
    let out = clf.classify(top, arg1, arg2)?;
    Ok(Prediction::build(
        relation_id,
        Method::Pipeline,
        out.distribution,
        clf.labels(),
        dist,
        inv,
        out.fallback,
    ))
}

/// Weighted sum of the classifier's distributions for every connective.
pub fn marginalize(dist: &ConnectiveDistribution, rows: &[SenseDistribution]) -> SenseDistribution {
    let width = rows.first().map_or(0, SenseDistribution::len);
    let mut acc = vec![0.0; width];
    for (p, row) in dist.probs().iter().zip(rows) {
        for (a, r) in acc.iter_mut().zip(row.probs()) {
            *a += p * r;
        }
    }
    SenseDistribution::from_vec_unchecked(acc)
}

pub fn marginal_predict(
    relation_id: &str,
    dist: &ConnectiveDistribution,
    inv: &ConnectiveInventory,
    clf: &dyn SenseClassifier,
    arg1: &str,
    arg2: &str,
) -> Result<Prediction, InferenceError> {
    let (_, marginal) = predict_both(relation_id, dist, inv, clf, arg1, arg2)?;
    Ok(marginal)
}

/// Pipeline and marginal predictions from one pass over the inventory.
pub fn predict_both(
    relation_id: &str,
    dist: &ConnectiveDistribution,
    inv: &ConnectiveInventory,
    clf: &dyn SenseClassifier,
    arg1: &str,
    arg2: &str,
) -> Result<(Prediction, Prediction), InferenceError> {
    check_inventory(dist, inv)?;
    let mut rows = Vec::with_capacity(inv.len());
    let mut fallbacks = Vec::with_capacity(inv.len());
    for conn in inv.as_slice() {
        let out = clf.classify(conn, arg1, arg2)?;
        rows.push(out.distribution);
        fallbacks.push(out.fallback);
    }
    let top = top_connective(dist);
    let labels = clf.labels();
    let pipeline = Prediction::build(
        relation_id,
        Method::Pipeline,
        rows[top].clone(),
        labels,
        dist,
        inv,
        fallbacks[top],
    );
    let any_fallback = dist
        .probs()
        .iter()
        .zip(&fallbacks)
        .any(|(p, f)| *f && *p > 0.0);
    let marginal = Prediction::build(
        relation_id,
        Method::Marginal,
        marginalize(dist, &rows),
        labels,
        dist,
        inv,
        any_fallback,
    );
    Ok((pipeline, marginal))
}

/// Transitions between pipeline and marginal labels over a test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftReport {
    pub labels: Vec<String>,
    /// `matrix[from][to]`: pipeline label `from`, marginal label `to`.
    pub matrix: Vec<Vec<usize>>,
    pub total: usize,
    pub changed: usize,
    pub changed_fraction: f64,
    /// Most frequent off-diagonal transition and its share of all changes.
    pub most_frequent_shift: Option<Shift>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Shift {
    pub from: String,
    pub to: String,
    pub count: usize,
    pub share_of_changes: f64,
}

/// Takes `(relation_id, label)` pairs for the same relations in the same order.
pub fn label_shift_report(
    pipeline: &[(String, String)],
    marginal: &[(String, String)],
    labels: &LabelSet,
) -> Result<ShiftReport, InferenceError> {
    if pipeline.len() != marginal.len() {
        return Err(InferenceError::Length {
            pipeline: pipeline.len(),
            marginal: marginal.len(),
        });
    }
    let n = labels.len();
    let mut matrix = vec![vec![0usize; n]; n];
    for (index, ((pid, pl), (mid, ml))) in pipeline.iter().zip(marginal).enumerate() {
        if pid != mid {
            return Err(InferenceError::Misaligned {
                index,
                pipeline: pid.clone(),
                marginal: mid.clone(),
            });
        }
        let from = labels.index_of(pl).ok_or_else(|| InferenceError::Label(pl.clone()))?;
        let to = labels.index_of(ml).ok_or_else(|| InferenceError::Label(ml.clone()))?;
        matrix[from][to] += 1;
    }
    let total = pipeline.len();
    let trace: usize = (0..n).map(|i| matrix[i][i]).sum();
    let changed = total - trace;
    let mut best: Option<(usize, usize, usize)> = None;
    for (i, row) in matrix.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if i != j && count > 0 && best.is_none_or(|(_, _, c)| count > c) {
                best = Some((i, j, count));
            }
        }
    }
    Ok(ShiftReport {
        labels: labels.labels().to_vec(),
        matrix,
        total,
        changed,
        changed_fraction: if total == 0 { 0.0 } else { changed as f64 / total as f64 },
        most_frequent_shift: best.map(|(i, j, count)| Shift {
            from: labels.labels()[i].clone(),
            to: labels.labels()[j].clone(),
            count,
            share_of_changes: count as f64 / changed as f64,
        }),
    })
}

/// `(relation_id, label)` pairs for [`label_shift_report`].
pub fn id_labels<'a>(preds: impl IntoIterator<Item = &'a Prediction>) -> Vec<(String, String)> {
    preds
        .into_iter()
        .map(|p| (p.relation_id.clone(), p.label.clone()))
        .collect()
}
