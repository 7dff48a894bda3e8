use serde::Serialize;

use super::{EvalError, EvalSet};
use crate::classifier::SenseClassifier;

/// How often the top-ranked connective matches the gold implicit
/// connective, and how often its most frequent sense matches the gold
/// sense. Only relations with a one-word gold connective are eligible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub eligible: usize,
    pub total: usize,
    pub connective_agreement: f64,
    pub sense_agreement: f64,
}

/// `top_connectives[i]` is the top-ranked connective for `test.items[i]`.
pub fn agreement(
    test: &EvalSet,
    top_connectives: &[String],
    clf: &dyn SenseClassifier,
) -> Result<AgreementReport, EvalError> {
    if top_connectives.len() != test.len() {
        return Err(EvalError::Length {
            predictions: top_connectives.len(),
            golds: test.len(),
        });
    }
    let mut eligible = 0;
    let mut conn_hits = 0;
    let mut sense_hits = 0;
    for (item, top) in test.items.iter().zip(top_connectives) {
        let gold = item.connective.trim();
        if gold.is_empty() || gold.contains(char::is_whitespace) {
            continue;
        }
        eligible += 1;
        if gold.to_lowercase() == top.trim().to_lowercase() {
            conn_hits += 1;
        }
        let sense = clf.most_frequent_sense(top, &item.arg1, &item.arg2)?;
        let label = clf.labels().get(sense).expect("aligned");
        if item.golds.iter().any(|g| g == label) {
            sense_hits += 1;
        }
    }
    let pct = |hits: usize| if eligible == 0 { 0.0 } else { 100.0 * hits as f64 / eligible as f64 };
    Ok(AgreementReport {
        eligible,
        total: test.len(),
        connective_agreement: pct(conn_hits),
        sense_agreement: pct(sense_hits),
    })
}

impl AgreementReport {
    pub fn render(&self) -> String {
        format!(
            "eligible  {} of {}\nconnective agreement  {:.2}\nsense agreement  {:.2}\n",
            self.eligible, self.total, self.connective_agreement, self.sense_agreement
        )
    }
}
