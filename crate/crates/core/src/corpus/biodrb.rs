use std::collections::BTreeMap;

use serde::Serialize;

use super::{config_lines, CorpusError, SensePath};

const DEFAULT_TABLE: &str = include_str!("../../data/biodrb_senses.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MappedSense {
    Mapped(SensePath),
    Unmapped(String),
}

/// Counts of labels that could not be mapped, for reporting.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UnmappedReport {
    pub labels: BTreeMap<String, usize>,
}

impl UnmappedReport {
    pub fn record(&mut self, label: &str) {
        *self.labels.entry(label.to_string()).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.labels.values().sum()
    }

    pub fn merge(&mut self, other: UnmappedReport) {
        for (k, v) in other.labels {
            *self.labels.entry(k).or_default() += v;
        }
    }
}

/// Maps BioDRB sense labels onto the PDTB 2.0 hierarchy.
///
/// Lookup order: the table, then the label itself if it already is a valid
/// PDTB sense. Anything else is unmapped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SenseMapping {
    table: BTreeMap<String, SensePath>,
}

impl SenseMapping {
    pub fn default_biodrb() -> Self {
        SenseMapping::parse(DEFAULT_TABLE).expect("shipped BioDRB mapping is valid")
    }

    /// Parses `source => target` lines. Every target must be a valid PDTB sense.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut table = BTreeMap::new();
        for line in config_lines(text) {
            let (source, target) = line
                .split_once("=>")
                .ok_or_else(|| CorpusError::Mapping(format!("missing `=>` in `{line}`")))?;
            let (source, target) = (source.trim(), target.trim());
            if source.is_empty() {
                return Err(CorpusError::Mapping(format!("empty source label in `{line}`")));
            }
            let sense = SensePath::parse(target).map_err(|_| {
                CorpusError::Mapping(format!("`{source}` maps to invalid PDTB sense `{target}`"))
            })?;
            if table.insert(source.to_string(), sense).is_some() {
                return Err(CorpusError::Mapping(format!("duplicate source label `{source}`")));
            }
        }
        Ok(SenseMapping { table })
    }

    pub fn map(&self, raw: &str) -> MappedSense {
        let raw = raw.trim();
        if let Some(sense) = self.table.get(raw) {
            return MappedSense::Mapped(sense.clone());
        }
        match SensePath::parse(raw) {
            Ok(sense) => MappedSense::Mapped(sense),
            Err(_) => MappedSense::Unmapped(raw.to_string()),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &SensePath)> {
        self.table.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}
