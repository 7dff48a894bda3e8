use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

const PDTB2: &str = include_str!("../../data/columns/pdtb2.toml");

/// Field positions of a pipe-separated relation record.
///
/// Optional columns are simply absent from some releases; the parser falls
/// back to file-level information (section from the directory, file id from
/// the file name) or leaves spans unset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub field_count: usize,
    pub kind: usize,
    #[serde(default)]
    pub section: Option<usize>,
    #[serde(default)]
    pub file: Option<usize>,
    /// Connective head of explicit relations.
    pub connective: usize,
    /// Annotator-inserted connective of implicit relations; defaults to `connective`.
    #[serde(default)]
    pub implicit_connective: Option<usize>,
    pub arg1: usize,
    pub arg2: usize,
    pub sense1: usize,
    #[serde(default)]
    pub sense2: Option<usize>,
    #[serde(default)]
    pub connective_span: Option<usize>,
    #[serde(default)]
    pub arg1_span: Option<usize>,
    #[serde(default)]
    pub arg2_span: Option<usize>,
}

impl ColumnMap {
    /// The 48-field PDTB 2.0 layout.
    pub fn pdtb2() -> Self {
        ColumnMap::from_toml(PDTB2).expect("shipped PDTB 2.0 column map is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, CorpusError> {
        let map: ColumnMap =
            toml::from_str(text).map_err(|e| CorpusError::ColumnMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    /// Resolves `pdtb2` to the built-in layout, anything else as a TOML file.
    pub fn load(spec: &str) -> Result<Self, CorpusError> {
        if spec == "pdtb2" {
            return Ok(ColumnMap::pdtb2());
        }
        let text = std::fs::read_to_string(Path::new(spec))?;
        ColumnMap::from_toml(&text)
    }

    fn indices(&self) -> Vec<(&'static str, usize)> {
        let mut out = vec![
            ("kind", self.kind),
            ("connective", self.connective),
            ("arg1", self.arg1),
            ("arg2", self.arg2),
            ("sense1", self.sense1),
        ];
        let optional = [
            ("section", self.section),
            ("file", self.file),
            ("implicit_connective", self.implicit_connective),
            ("sense2", self.sense2),
            ("connective_span", self.connective_span),
            ("arg1_span", self.arg1_span),
            ("arg2_span", self.arg2_span),
        ];
        out.extend(optional.into_iter().filter_map(|(n, i)| i.map(|i| (n, i))));
        out
    }

    /// Every index must be below `field_count` and no two fields may share a column.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let indices = self.indices();
        for (name, idx) in &indices {
            if *idx >= self.field_count {
                return Err(CorpusError::ColumnMap(format!(
                    "{name} index {idx} exceeds field count {}",
                    self.field_count
                )));
            }
        }
        for (i, (a, ia)) in indices.iter().enumerate() {
            if let Some((b, _)) = indices[i + 1..].iter().find(|(_, ib)| ib == ia) {
                return Err(CorpusError::ColumnMap(format!(
                    "{a} and {b} share column {ia}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdtb2_default_is_valid() {
        let map = ColumnMap::pdtb2();
        assert_eq!(map.field_count, 48);
        assert_eq!(map.arg2, 34);
        assert!(map.validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range_index() {
        let mut map = ColumnMap::pdtb2();
        map.arg2 = 48;
        let err = map.validate().unwrap_err().to_string();
        assert!(err.contains("arg2"), "{err}");
    }

    #[test]
    fn rejects_shared_column() {
        let mut map = ColumnMap::pdtb2();
        map.sense2 = Some(map.sense1);
        assert!(map.validate().is_err());
    }

    #[test]
    fn toml_validation_runs_on_load() {
        let text = "field_count = 3\nkind = 0\nconnective = 1\narg1 = 2\narg2 = 3\nsense1 = 1\n";
        assert!(ColumnMap::from_toml(text).is_err());
        let ok = "field_count = 5\nkind = 0\nconnective = 1\narg1 = 2\narg2 = 3\nsense1 = 4\n";
        assert!(ColumnMap::from_toml(ok).is_ok());
    }
}
