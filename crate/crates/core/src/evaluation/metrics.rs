use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;
use crate::corpus::LabelSet;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold items credited to this label.
    pub support: usize,
    pub predicted: usize,
}

/// Per-class and aggregate scores, all on a 0-100 scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub level: u8,
    pub per_class: Vec<ClassScore>,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub total: usize,
    pub correct: usize,
    /// `confusion[gold][predicted]` over the label set.
    pub confusion: Vec<Vec<usize>>,
    pub metadata: BTreeMap<String, String>,
}

pub const MATCH_CONVENTION: &str = "two-sense golds: a prediction matching either sense is correct and credited to that sense; otherwise the first sense is the gold";

fn f1(tp: usize, predicted: usize, support: usize) -> (f64, f64, f64) {
    let p = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
    let r = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (100.0 * p, 100.0 * r, 100.0 * f)
}

/// Scores predicted labels against gold label lists.
///
/// A gold list may hold two labels; a prediction equal to either is
/// correct and counts toward that label's support. A wrong prediction
/// counts against the first gold label.
pub fn score_predictions(
    predicted: &[String],
    golds: &[Vec<String>],
    labels: &LabelSet,
) -> Result<EvalReport, EvalError> {
    if predicted.len() != golds.len() {
        return Err(EvalError::Length {
            predictions: predicted.len(),
            golds: golds.len(),
        });
    }
    let n = labels.len();
    let index = |label: &String| labels.index_of(label).ok_or_else(|| EvalError::Label(label.clone()));
    let mut confusion = vec![vec![0usize; n]; n];
    for (item, (pred, gold)) in predicted.iter().zip(golds).enumerate() {
        let p = index(pred)?;
        let first = gold.first().ok_or(EvalError::EmptyGold(item))?;
        let mut credited = index(first)?;
        for g in gold {
            let g = index(g)?;
            if g == p {
                credited = g;
            }
        }
        confusion[credited][p] += 1;
    }

    let total = predicted.len();
    let mut per_class = Vec::with_capacity(n);
    let mut correct = 0;
    for (i, label) in labels.labels().iter().enumerate() {
        let tp = confusion[i][i];
        correct += tp;
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        let (precision, recall, f1) = f1(tp, predicted, support);
        per_class.push(ClassScore {
            label: label.clone(),
            precision,
            recall,
            f1,
            support,
            predicted,
        });
    }
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;
    let accuracy = if total == 0 { 0.0 } else { 100.0 * correct as f64 / total as f64 };
    let mut metadata = BTreeMap::new();
    metadata.insert("match_convention".to_string(), MATCH_CONVENTION.to_string());
    Ok(EvalReport {
        level: labels.level().number(),
        per_class,
        macro_f1,
        accuracy,
        total,
        correct,
        confusion,
        metadata,
    })
}

impl EvalReport {
    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn f1_of(&self, label: &str) -> Option<f64> {
        self.per_class.iter().find(|c| c.label == label).map(|c| c.f1)
    }

    /// Aligned plain-text table with two decimals.
    pub fn render(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|c| c.label.len())
            .max()
            .unwrap_or(0)
            .max("macro-F1".len());
        let mut out = String::new();
        if let Some(title) = self.metadata.get("title") {
            let _ = writeln!(out, "{title}");
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "label", "precision", "recall", "F1", "support"
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.2}  {:>9.2}  {:>9.2}  {:>7}",
                c.label, c.precision, c.recall, c.f1, c.support
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.2}", "macro-F1", "", "", self.macro_f1);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>9}  {:>9.2}  {:>7}", "accuracy", "", "", self.accuracy, self.total);
        out
    }
}

/// Mean and sample standard deviation of macro-F1 and accuracy over runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub runs: usize,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
}

pub fn summarize_runs(reports: &[EvalReport]) -> RunSummary {
    fn mean_std(values: &[f64]) -> (f64, f64) {
        let n = values.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return (mean, 0.0);
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var.sqrt())
    }
    let f1: Vec<f64> = reports.iter().map(|r| r.macro_f1).collect();
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let (macro_f1_mean, macro_f1_std) = mean_std(&f1);
    let (accuracy_mean, accuracy_std) = mean_std(&acc);
    RunSummary {
        runs: reports.len(),
        macro_f1_mean,
        macro_f1_std,
        accuracy_mean,
        accuracy_std,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let labels = LabelSet::level_one();
        let golds: Vec<Vec<String>> = labels.labels().iter().map(|l| vec![l.clone()]).collect();
        let preds: Vec<String> = labels.labels().to_vec();
        let r = score_predictions(&preds, &golds, &labels).unwrap();
        assert!(r.per_class.iter().all(|c| c.f1 == 100.0));
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.macro_f1, 100.0);
    }

    #[test]
    fn constant_predictor_on_ten_items() {
        // 5 Expansion, 3 Contingency, 2 Comparison; always predict Expansion.
        let labels = LabelSet::level_one();
        let mut golds = vec![s(&["Expansion"]); 5];
        golds.extend(vec![s(&["Contingency"]); 3]);
        golds.extend(vec![s(&["Comparison"]); 2]);
        let preds = vec!["Expansion".to_string(); 10];
        let r = score_predictions(&preds, &golds, &labels).unwrap();
        // P = 5/10, R = 1, F1 = 2 * 0.5 / 1.5 = 2/3
        assert!((r.f1_of("Expansion").unwrap() - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.f1_of("Contingency"), Some(0.0));
        assert_eq!(r.f1_of("Temporal"), Some(0.0));
        assert!((r.macro_f1 - 200.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.accuracy, 50.0);
    }

    #[test]
    fn second_sense_match_is_credited() {
        let labels = LabelSet::level_one();
        let golds = vec![s(&["Expansion", "Contingency"])];
        let r = score_predictions(&s(&["Contingency"]), &golds, &labels).unwrap();
        assert_eq!(r.correct, 1);
        assert_eq!(r.per_class[1].support, 1);
        assert_eq!(r.per_class[3].support, 0);
        let r = score_predictions(&s(&["Temporal"]), &golds, &labels).unwrap();
        assert_eq!(r.correct, 0);
        assert_eq!(r.per_class[3].support, 1);
    }

    #[test]
    fn errors() {
        let labels = LabelSet::level_one();
        assert!(score_predictions(&s(&["Expansion"]), &[], &labels).is_err());
        assert!(score_predictions(&s(&["Bogus"]), &[s(&["Expansion"])], &labels).is_err());
        assert!(score_predictions(&s(&["Expansion"]), &[s(&["Bogus"])], &labels).is_err());
        assert!(score_predictions(&s(&["Expansion"]), &[vec![]], &labels).is_err());
    }

    #[test]
    fn render_uses_two_decimals() {
        let labels = LabelSet::level_one();
        let r = score_predictions(&s(&["Expansion", "Comparison"]), &[s(&["Expansion"]), s(&["Expansion"])], &labels).unwrap();
        let text = r.render();
        assert!(text.contains("66.67"), "{text}");
        assert!(text.contains("accuracy"));
    }

    #[test]
    fn run_summary_statistics() {
        let labels = LabelSet::level_one();
        let a = score_predictions(&s(&["Expansion"]), &[s(&["Expansion"])], &labels).unwrap();
        let b = score_predictions(&s(&["Temporal"]), &[s(&["Expansion"])], &labels).unwrap();
        let sum = summarize_runs(&[a.clone(), b]);
        assert_eq!(sum.runs, 2);
        assert_eq!(sum.accuracy_mean, 50.0);
        assert!((sum.accuracy_std - 50.0f64 * 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(summarize_runs(&[a]).accuracy_std, 0.0);
    }

    fn arb_items() -> impl Strategy<Value = Vec<(usize, usize, Option<usize>)>> {
        prop::collection::vec((0..4usize, 0..4usize, prop::option::of(0..4usize)), 1..80)
    }

    proptest! {
        #[test]
        fn metric_sanity(items in arb_items(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let labels = LabelSet::level_one();
            let name = |i: usize| labels.labels()[i].clone();
            let preds: Vec<String> = items.iter().map(|(p, _, _)| name(*p)).collect();
            let golds: Vec<Vec<String>> = items
                .iter()
                .map(|(_, g, g2)| {
                    let mut v = vec![name(*g)];
                    if let Some(g2) = g2 { if g2 != g { v.push(name(*g2)); } }
                    v
                })
                .collect();
            let r = score_predictions(&preds, &golds, &labels).unwrap();
            let trace: usize = (0..4).map(|i| r.confusion[i][i]).sum();
            prop_assert!((r.accuracy - 100.0 * trace as f64 / r.total as f64).abs() < 1e-12);
            prop_assert_eq!(r.per_class.iter().map(|c| c.support).sum::<usize>(), r.total);
            let min = r.per_class.iter().map(|c| c.f1).fold(f64::INFINITY, f64::min);
            let max = r.per_class.iter().map(|c| c.f1).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min >= 0.0 && max <= 100.0);
            prop_assert!(r.macro_f1 >= min - 1e-12 && r.macro_f1 <= max + 1e-12);

            let mut order: Vec<usize> = (0..items.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p2: Vec<String> = order.iter().map(|&i| preds[i].clone()).collect();
            let g2: Vec<Vec<String>> = order.iter().map(|&i| golds[i].clone()).collect();
            let r2 = score_predictions(&p2, &g2, &labels).unwrap();
            prop_assert!((r2.macro_f1 - r.macro_f1).abs() < 1e-12);
        }
    }
}
