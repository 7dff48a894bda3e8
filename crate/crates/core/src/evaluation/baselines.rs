use super::{score_predictions, EvalError, EvalReport};
use crate::classifier::SenseClassifier;
use crate::corpus::{LabelSet, Level, Relation};

/// The most common explicit connective in PDTB 2.0.
pub const MOST_COMMON_CONNECTIVE: &str = "but";

/// One test relation with its gold labels at the evaluation level.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalItem {
    pub relation_id: String,
    pub connective: String,
    pub arg1: String,
    pub arg2: String,
    pub golds: Vec<String>,
}

/// Test relations restricted to those with a gold label in the label set.
#[derive(Clone, Debug)]
pub struct EvalSet {
    pub labels: LabelSet,
    pub items: Vec<EvalItem>,
    /// Relations without any sense in the label set.
    pub dropped: usize,
}

impl EvalSet {
    pub fn new<'a>(test: impl IntoIterator<Item = &'a Relation>, labels: &LabelSet) -> Self {
        let mut items = Vec::new();
        let mut dropped = 0;
        for rel in test {
            let golds = labels.gold_labels(&rel.senses);
            if golds.is_empty() {
                dropped += 1;
                continue;
            }
            items.push(EvalItem {
                relation_id: rel.id.clone(),
                connective: rel.connective.clone(),
                arg1: rel.arg1.clone(),
                arg2: rel.arg2.clone(),
                golds,
            });
        }
        EvalSet {
            labels: labels.clone(),
            items,
            dropped,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn golds(&self) -> Vec<Vec<String>> {
        self.items.iter().map(|i| i.golds.clone()).collect()
    }

    /// Scores one predicted label per item.
    pub fn score(&self, predicted: &[String]) -> Result<EvalReport, EvalError> {
        score_predictions(predicted, &self.golds(), &self.labels)
    }
}

/// Expansion at level 1, Contingency.Cause at level 2.
pub fn default_common_sense(level: Level) -> &'static str {
    match level {
        Level::One => "Expansion",
        Level::Two => "Contingency.Cause",
    }
}

/// Predicts `label` for every relation.
pub fn baseline_most_common_sense(test: &EvalSet, label: &str) -> Result<EvalReport, EvalError> {
    if test.labels.index_of(label).is_none() {
        return Err(EvalError::Label(label.to_string()));
    }
    let preds = vec![label.to_string(); test.len()];
    Ok(test.score(&preds)?.with_meta("method", "most-common-sense").with_meta("label", label))
}

fn classify_with(
    test: &EvalSet,
    clf: &dyn SenseClassifier,
    connective: impl Fn(&super::EvalItem) -> String,
) -> Result<(Vec<String>, usize), EvalError> {
    let mut preds = Vec::with_capacity(test.len());
    let mut fallbacks = 0;
    for item in &test.items {
        let out = clf.classify(&connective(item), &item.arg1, &item.arg2)?;
        fallbacks += usize::from(out.fallback);
        let label = clf.labels().get(out.distribution.argmax()).expect("aligned");
        preds.push(label.to_string());
    }
    Ok((preds, fallbacks))
}

/// Classifies every relation as if its connective were `connective`.
pub fn baseline_most_common_connective(
    test: &EvalSet,
    clf: &dyn SenseClassifier,
    connective: &str,
) -> Result<EvalReport, EvalError> {
    let (preds, fallbacks) = classify_with(test, clf, |_| connective.to_string())?;
    Ok(test
        .score(&preds)?
        .with_meta("method", "most-common-connective")
        .with_meta("connective", connective)
        .with_meta("classifier", clf.id())
        .with_meta("fallbacks", fallbacks.to_string()))
}

/// Classifies every relation with its gold implicit connective.
///
/// Multi-word connectives are looked up as-is; the frequency classifier
/// falls back to its prior when a connective was never seen in training.
pub fn upper_bound_gold_connective(test: &EvalSet, clf: &dyn SenseClassifier) -> Result<EvalReport, EvalError> {
    let (preds, fallbacks) = classify_with(test, clf, |item| item.connective.clone())?;
    Ok(test
        .score(&preds)?
        .with_meta("method", "gold-connective")
        .with_meta("classifier", clf.id())
        .with_meta("fallbacks", fallbacks.to_string()))
}
