use serde::Serialize;

use super::{LabelSet, Relation};

/// Label counts for one set of relations at one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub level: u8,
    /// Counts in label-set order. A two-sense relation counts once per
    /// distinct label.
    pub counts: Vec<(String, usize)>,
    /// Relations with at least one label in the set.
    pub relations: usize,
    /// Relations with no label in the set at this level.
    pub unlabeled: usize,
}

pub fn corpus_stats<'a>(relations: impl IntoIterator<Item = &'a Relation>, labels: &LabelSet) -> CorpusStats {
    let mut counts = vec![0usize; labels.len()];
    let mut labeled = 0;
    let mut unlabeled = 0;
    for rel in relations {
        let gold = labels.gold_labels(&rel.senses);
        if gold.is_empty() {
            unlabeled += 1;
            continue;
        }
        labeled += 1;
        for label in gold {
            let idx = labels.index_of(&label).expect("gold labels come from the set");
            counts[idx] += 1;
        }
    }
    CorpusStats {
        level: labels.level().number(),
        counts: labels.labels().iter().cloned().zip(counts).collect(),
        relations: labeled,
        unlabeled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RelationKind, SensePath};

    fn rel(senses: &[&str]) -> Relation {
        Relation {
            id: "r".into(),
            kind: RelationKind::Implicit,
            connective: "and".into(),
            arg1: "a".into(),
            arg2: "b".into(),
            senses: senses.iter().map(|s| SensePath::parse(s).unwrap()).collect(),
            section: Some(21),
            file: "f".into(),
            corpus: "t".into(),
            spans: None,
        }
    }

    #[test]
    fn empty_input_gives_zero_table() {
        let stats = corpus_stats(&[], &LabelSet::level_one());
        assert_eq!(stats.relations, 0);
        assert_eq!(stats.counts.len(), 4);
        assert!(stats.counts.iter().all(|(_, c)| *c == 0));
    }

    #[test]
    fn five_relation_fixture() {
        let rels = vec![
            rel(&["Expansion.Conjunction"]),
            rel(&["Expansion.Restatement.Specification", "Contingency.Cause.Reason"]),
            rel(&["Comparison"]),
            rel(&["Expansion.Conjunction", "Expansion.Instantiation"]),
            rel(&["Expansion.Exception"]),
        ];
        let one = corpus_stats(&rels, &LabelSet::level_one());
        // Temporal, Contingency, Comparison, Expansion
        let counts: Vec<usize> = one.counts.iter().map(|(_, c)| *c).collect();
        assert_eq!(counts, vec![0, 1, 1, 4]);
        assert_eq!(one.relations, 5);

        let two = corpus_stats(&rels, &LabelSet::default_level_two());
        let get = |l: &str| two.counts.iter().find(|(n, _)| n == l).unwrap().1;
        assert_eq!(get("Expansion.Conjunction"), 2);
        assert_eq!(get("Expansion.Restatement"), 1);
        assert_eq!(get("Contingency.Cause"), 1);
        assert_eq!(get("Expansion.Instantiation"), 1);
        // "Comparison" has no level-2 label, Exception is outside the 11 labels.
        assert_eq!(two.relations, 3);
        assert_eq!(two.unlabeled, 2);
    }
}
