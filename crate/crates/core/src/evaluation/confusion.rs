use std::collections::BTreeMap;

use serde::Serialize;

use super::{EvalError, EvalSet};
use crate::classifier::connective_key;

/// Predicted top connectives (rows) against gold implicit connectives
/// (columns), restricted to the `top_k` most frequent gold connectives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectiveConfusion {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `counts[row][column]`.
    pub counts: Vec<Vec<usize>>,
}

/// Columns are ordered by gold frequency, then alphabetically. Rows list
/// every predicted connective that occurs, in `row_order` first and
/// alphabetically after that for connectives outside it.
pub fn connective_confusion(
    test: &EvalSet,
    top_connectives: &[String],
    row_order: &[String],
    top_k: usize,
) -> Result<ConnectiveConfusion, EvalError> {
    if top_k == 0 {
        return Err(EvalError::TopK);
    }
    if top_connectives.len() != test.len() {
        return Err(EvalError::Length {
            predictions: top_connectives.len(),
            golds: test.len(),
        });
    }
    let mut gold_counts: BTreeMap<String, usize> = BTreeMap::new();
    for item in &test.items {
        *gold_counts.entry(connective_key(&item.connective)).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = gold_counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let columns: Vec<String> = ranked.into_iter().take(top_k).map(|(c, _)| c).collect();

    let mut cells: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (item, top) in test.items.iter().zip(top_connectives) {
        let gold = connective_key(&item.connective);
        if let Some(j) = columns.iter().position(|c| *c == gold) {
            cells.entry(connective_key(top)).or_insert_with(|| vec![0; columns.len()])[j] += 1;
        }
    }
    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for conn in row_order {
        if let Some(row) = cells.remove(&connective_key(conn)) {
            rows.push(connective_key(conn));
            counts.push(row);
        }
    }
    for (conn, row) in cells {
        rows.push(conn);
        counts.push(row);
    }
    Ok(ConnectiveConfusion { rows, columns, counts })
}

impl ConnectiveConfusion {
    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.columns.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// CSV with a header row of gold connectives and a leading column of
    /// predicted connectives.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["predicted\\gold".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (row, counts) in self.rows.iter().zip(&self.counts) {
            let mut record = vec![row.clone()];
            record.extend(counts.iter().map(usize::to_string));
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelSet, Relation, RelationKind, SensePath};

    fn set(golds: &[&str]) -> EvalSet {
        let rels: Vec<Relation> = golds
            .iter()
            .enumerate()
            .map(|(i, c)| Relation {
                id: format!("r{i}"),
                kind: RelationKind::Implicit,
                connective: c.to_string(),
                arg1: "x".into(),
                arg2: "y".into(),
                senses: vec![SensePath::parse("Expansion").unwrap()],
                section: Some(21),
                file: "f".into(),
                corpus: "t".into(),
                spans: None,
            })
            .collect();
        EvalSet::new(&rels, &LabelSet::level_one())
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn single_cell() {
        let m = connective_confusion(&set(&["while"; 3]), &s(&["but"; 3]), &s(&["and", "but"]), 10).unwrap();
        assert_eq!(m.rows, s(&["but"]));
        assert_eq!(m.columns, s(&["while"]));
        assert_eq!(m.counts, vec![vec![3]]);
    }

    #[test]
    fn top_k_restricts_columns_and_sums_match() {
        let golds = ["and", "and", "and", "but", "but", "so", "because"];
        let preds = ["and", "but", "so", "but", "and", "so", "and"];
        let m = connective_confusion(&set(&golds), &s(&preds), &s(&["so", "and", "but"]), 2).unwrap();
        assert_eq!(m.columns, s(&["and", "but"]));
        assert_eq!(m.column_sums(), vec![3, 2]);
        assert_eq!(m.rows, s(&["so", "and", "but"]));
        assert_eq!(m.counts, vec![vec![1, 0], vec![1, 1], vec![1, 1]]);

        let full = connective_confusion(&set(&golds), &s(&preds), &[], 100).unwrap();
        assert_eq!(full.columns.len(), 4);
        assert_eq!(full.column_sums().iter().sum::<usize>(), golds.len());
    }

    #[test]
    fn csv_layout() {
        let m = connective_confusion(&set(&["while"; 3]), &s(&["but"; 3]), &[], 1).unwrap();
        assert_eq!(m.to_csv().unwrap(), "predicted\\gold,while\nbut,3\n");
        assert!(connective_confusion(&set(&["a"]), &s(&["a"]), &[], 0).is_err());
    }
}
