use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, ClassifierOutput, SenseClassifier, SenseDistribution};
use crate::corpus::{LabelSet, Level, Relation};
use crate::fingerprint;
use crate::lm::DISTRIBUTION_TOLERANCE;

/// Lookup key for a connective: lowercased and trimmed.
pub(crate) fn connective_key(connective: &str) -> String {
    connective.trim().to_lowercase()
}

/// Raw (connective, label) counts over a training set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyCounts {
    pub per_connective: BTreeMap<String, Vec<u64>>,
    pub per_label: Vec<u64>,
    /// Training relations with no label in the set at this level.
    pub dropped: usize,
    /// Number of (relation, sense) pairs counted.
    pub pairs: u64,
}

impl FrequencyCounts {
    /// Two-sense relations contribute one count per distinct label.
    pub fn tally<'a>(train: impl IntoIterator<Item = &'a Relation>, labels: &LabelSet) -> Self {
        let mut counts = FrequencyCounts {
            per_label: vec![0; labels.len()],
            ..Default::default()
        };
        for rel in train {
            let gold = labels.gold_labels(&rel.senses);
            if gold.is_empty() {
                counts.dropped += 1;
                continue;
            }
            let row = counts
                .per_connective
                .entry(connective_key(&rel.connective))
                .or_insert_with(|| vec![0; labels.len()]);
            for label in gold {
                let i = labels.index_of(&label).expect("gold label in set");
                row[i] += 1;
                counts.per_label[i] += 1;
                counts.pairs += 1;
            }
        }
        counts
    }
}

fn smooth(counts: &[u64], k: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + k * counts.len() as f64;
    counts.iter().map(|c| (*c as f64 + k) / denom).collect()
}

/// Connective-conditioned sense table trained on explicit relations.
///
/// `row(C)[l] = (count(C, l) + k) / (count(C) + k * |labels|)`; unseen
/// connectives get the smoothed label marginal. The argument texts are
/// ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyModel {
    labels: LabelSet,
    k: f64,
    rows: BTreeMap<String, Vec<f64>>,
    prior: Vec<f64>,
    fingerprint: String,
}

pub fn train_frequency<'a>(
    train: impl IntoIterator<Item = &'a Relation>,
    labels: &LabelSet,
    k: f64,
) -> Result<FrequencyModel, ClassifierError> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(ClassifierError::Smoothing(k));
    }
    let counts = FrequencyCounts::tally(train, labels);
    if counts.pairs == 0 {
        return Err(ClassifierError::EmptyTraining {
            level: labels.level().number(),
            dropped: counts.dropped,
        });
    }
    let rows = counts
        .per_connective
        .iter()
        .map(|(c, row)| (c.clone(), smooth(row, k)))
        .collect();
    let prior = smooth(&counts.per_label, k);

    let mut canon = format!("level={};k={k};labels={}", labels.level(), labels.labels().join(","));
    for (c, row) in &counts.per_connective {
        canon.push_str(&format!(";{c}={row:?}"));
    }
    Ok(FrequencyModel {
        labels: labels.clone(),
        k,
        rows,
        prior,
        fingerprint: fingerprint(canon.as_bytes()),
    })
}

impl FrequencyModel {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn row(&self, connective: &str) -> Option<&[f64]> {
        self.rows.get(&connective_key(connective)).map(Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Row for `connective`, or the prior with `fallback` set.
    pub fn predict(&self, connective: &str) -> ClassifierOutput {
        match self.row(connective) {
            Some(row) => ClassifierOutput {
                distribution: SenseDistribution::from_vec_unchecked(row.to_vec()),
                fallback: false,
            },
            None => ClassifierOutput {
                distribution: SenseDistribution::from_vec_unchecked(self.prior.clone()),
                fallback: true,
            },
        }
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        let doc = ModelDoc {
            level: self.labels.level(),
            labels: self.labels.labels().to_vec(),
            k: self.k,
            rows: self.rows.clone(),
            prior: self.prior.clone(),
            fingerprint: self.fingerprint.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        let labels = LabelSet::new(doc.level, doc.labels).map_err(|e| ClassifierError::Model(e.to_string()))?;
        let check = |what: &str, probs: &[f64]| {
            SenseDistribution::new(probs.to_vec(), labels.len(), DISTRIBUTION_TOLERANCE)
                .map(|_| ())
                .map_err(|e| ClassifierError::Model(format!("{what}: {e}")))
        };
        check("prior", &doc.prior)?;
        for (c, row) in &doc.rows {
            check(&format!("row `{c}`"), row)?;
        }
        Ok(FrequencyModel {
            labels,
            k: doc.k,
            rows: doc.rows,
            prior: doc.prior,
            fingerprint: doc.fingerprint,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    level: Level,
    labels: Vec<String>,
    k: f64,
    rows: BTreeMap<String, Vec<f64>>,
    prior: Vec<f64>,
    fingerprint: String,
}

impl SenseClassifier for FrequencyModel {
    fn id(&self) -> String {
        format!("frequency(k={},{})", self.k, self.fingerprint)
    }

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn classify(&self, connective: &str, _arg1: &str, _arg2: &str) -> Result<ClassifierOutput, ClassifierError> {
        Ok(self.predict(connective))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RelationKind, SensePath};
    use proptest::prelude::*;

    fn explicit(conn: &str, senses: &[&str]) -> Relation {
        Relation {
            id: conn.to_string(),
            kind: RelationKind::Explicit,
            connective: conn.into(),
            arg1: "a".into(),
            arg2: "b".into(),
            senses: senses.iter().map(|s| SensePath::parse(s).unwrap()).collect(),
            section: Some(2),
            file: "f".into(),
            corpus: "t".into(),
            spans: None,
        }
    }

    #[test]
    fn add_one_row_for_but() {
        let train = vec![explicit("but", &["Comparison"]); 3];
        let m = train_frequency(&train, &LabelSet::level_one(), 1.0).unwrap();
        // Temporal, Contingency, Comparison, Expansion
        let row = m.row("but").unwrap();
        let expect = [1.0 / 7.0, 1.0 / 7.0, 4.0 / 7.0, 1.0 / 7.0];
        for (a, b) in row.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(m.row(" BUT "), Some(row));
    }

    #[test]
    fn zero_smoothing_gives_one_hot_rows() {
        let train = vec![explicit("because", &["Contingency.Cause"]), explicit("because", &["Contingency"])];
        let m = train_frequency(&train, &LabelSet::level_one(), 0.0).unwrap();
        assert_eq!(m.row("because").unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn prior_is_smoothed_marginal() {
        let train = vec![
            explicit("but", &["Comparison"]),
            explicit("and", &["Expansion", "Temporal"]),
            explicit("and", &["Expansion"]),
        ];
        let m = train_frequency(&train, &LabelSet::level_one(), 0.5).unwrap();
        // counts: T1 C0 Cmp1 E2, N = 4, denominator 4 + 0.5*4 = 6
        let expect = [1.5 / 6.0, 0.5 / 6.0, 1.5 / 6.0, 2.5 / 6.0];
        for (a, b) in m.prior().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unseen_connective_falls_back_to_prior() {
        let train = vec![explicit("but", &["Comparison"])];
        let m = train_frequency(&train, &LabelSet::level_one(), 1.0).unwrap();
        let out = m.classify("meanwhile", "x", "y").unwrap();
        assert!(out.fallback);
        assert_eq!(out.distribution.probs(), m.prior());
        let seen = m.classify("but", "x", "y").unwrap();
        assert!(!seen.fallback);
        assert_eq!(seen, m.classify("but", "completely", "different").unwrap());
    }

    #[test]
    fn most_frequent_sense_of_but() {
        let train = vec![
            explicit("but", &["Comparison"]),
            explicit("but", &["Comparison"]),
            explicit("but", &["Expansion"]),
        ];
        let m = train_frequency(&train, &LabelSet::level_one(), 1.0).unwrap();
        assert_eq!(m.most_frequent_sense("but", "", "").unwrap(), 2);
    }

    #[test]
    fn tie_goes_to_first_label() {
        let train = vec![explicit("so", &["Expansion"]), explicit("so", &["Contingency"])];
        let m = train_frequency(&train, &LabelSet::level_one(), 1.0).unwrap();
        assert_eq!(m.most_frequent_sense("so", "", "").unwrap(), 1);
    }

    #[test]
    fn empty_effective_training_rejected() {
        let train = vec![explicit("but", &["Comparison"])];
        let err = train_frequency(&train, &LabelSet::default_level_two(), 1.0).unwrap_err();
        assert!(matches!(err, ClassifierError::EmptyTraining { level: 2, dropped: 1 }));
        assert!(train_frequency(&[], &LabelSet::level_one(), 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let train = vec![explicit("but", &["Comparison"]), explicit("and", &["Expansion"])];
        let m = train_frequency(&train, &LabelSet::level_one(), 1.0).unwrap();
        let json = m.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["level", "labels", "k", "rows", "prior", "fingerprint"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(FrequencyModel::from_json(&json).unwrap(), m);
    }

    const SENSES: [&str; 6] = [
        "Temporal.Asynchronous",
        "Contingency.Cause",
        "Comparison.Contrast",
        "Expansion.Conjunction",
        "Expansion",
        "Comparison.Concession",
    ];
    const CONNS: [&str; 5] = ["and", "but", "because", "then", "while"];

    fn arb_train() -> impl Strategy<Value = Vec<Relation>> {
        prop::collection::vec(
            (0..CONNS.len(), 0..SENSES.len(), prop::option::of(0..SENSES.len())),
            1..60,
        )
        .prop_map(|items| {
            items
                .into_iter()
                .map(|(c, s1, s2)| {
                    let mut senses = vec![SENSES[s1]];
                    if let Some(s2) = s2 {
                        senses.push(SENSES[s2]);
                    }
                    explicit(CONNS[c], &senses)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(train in arb_train(), k in 0.01f64..3.0) {
            for labels in [LabelSet::level_one(), LabelSet::default_level_two()] {
                let Ok(m) = train_frequency(&train, &labels, k) else { continue };
                for (_, row) in m.rows() {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
                prop_assert!((m.prior().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn adding_an_example_never_lowers_its_cell(train in arb_train(), c in 0..CONNS.len(), s in 0..4usize) {
            let labels = LabelSet::level_one();
            let before = train_frequency(&train, &labels, 1.0).unwrap();
            let sense = ["Temporal", "Contingency", "Comparison", "Expansion"][s];
            let mut more = train.clone();
            more.push(explicit(CONNS[c], &[sense]));
            let after = train_frequency(&more, &labels, 1.0).unwrap();
            let old = before.row(CONNS[c]).map(|r| r[s]).unwrap_or(0.0);
            prop_assert!(after.row(CONNS[c]).unwrap()[s] >= old - 1e-15);
        }

        #[test]
        fn training_order_does_not_matter(train in arb_train(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let labels = LabelSet::level_one();
            let mut shuffled = train.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(
                train_frequency(&train, &labels, 1.0).unwrap(),
                train_frequency(&shuffled, &labels, 1.0).unwrap()
            );
        }

        #[test]
        fn counts_match_pairs(train in arb_train()) {
            let labels = LabelSet::level_one();
            let counts = FrequencyCounts::tally(&train, &labels);
            let total: u64 = counts.per_connective.values().flatten().sum();
            let pairs: u64 = train.iter().map(|r| labels.gold_labels(&r.senses).len() as u64).sum();
            prop_assert_eq!(total, pairs);
            prop_assert_eq!(counts.pairs, pairs);
        }
    }
}
