//! Metrics, baselines, agreement statistics and connective confusion.

mod agreement;
mod baselines;
mod confusion;
mod metrics;

pub use agreement::{agreement, AgreementReport};
pub use baselines::{
    baseline_most_common_connective, baseline_most_common_sense, default_common_sense, upper_bound_gold_connective,
    EvalItem, EvalSet, MOST_COMMON_CONNECTIVE,
};
pub use confusion::{connective_confusion, ConnectiveConfusion};
pub use metrics::{score_predictions, summarize_runs, ClassScore, EvalReport, RunSummary, MATCH_CONVENTION};

use thiserror::Error;

use crate::classifier::ClassifierError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predictions} predictions for {golds} gold items")]
    Length { predictions: usize, golds: usize },
    #[error("label `{0}` is not in the label set")]
    Label(String),
    #[error("gold item {0} has no label")]
    EmptyGold(usize),
    #[error("top_k must be at least 1")]
    TopK,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}
