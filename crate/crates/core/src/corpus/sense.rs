use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// First-level PDTB 2.0 sense class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopSense {
    Temporal,
    Contingency,
    Comparison,
    Expansion,
}

impl TopSense {
    pub const ALL: [TopSense; 4] = [
        TopSense::Temporal,
        TopSense::Contingency,
        TopSense::Comparison,
        TopSense::Expansion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopSense::Temporal => "Temporal",
            TopSense::Contingency => "Contingency",
            TopSense::Comparison => "Comparison",
            TopSense::Expansion => "Expansion",
        }
    }

    /// Second-level types defined under this class in the PDTB 2.0 hierarchy.
    pub fn subtypes(self) -> &'static [&'static str] {
        match self {
            TopSense::Temporal => &["Asynchronous", "Synchrony"],
            TopSense::Contingency => &[
                "Cause",
                "Pragmatic cause",
                "Condition",
                "Pragmatic condition",
            ],
            TopSense::Comparison => &[
                "Contrast",
                "Pragmatic contrast",
                "Concession",
                "Pragmatic concession",
            ],
            TopSense::Expansion => &[
                "Conjunction",
                "Instantiation",
                "Restatement",
                "Alternative",
                "Exception",
                "List",
            ],
        }
    }
}

impl fmt::Display for TopSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopSense {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TopSense::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CorpusError::Sense(s.to_string()))
    }
}

/// A sense annotation such as `Contingency.Cause.Reason`.
///
/// Only the first two levels are interpreted; deeper levels survive in
/// `raw`, which always holds the annotation string exactly as read.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SensePath {
    pub top: TopSense,
    pub subtype: Option<String>,
    pub raw: String,
}

impl SensePath {
    pub fn parse(raw: &str) -> Result<Self, CorpusError> {
        let trimmed = raw.trim();
        let mut parts = trimmed.split('.');
        let top: TopSense = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CorpusError::Sense(raw.to_string()))?
            .parse()
            .map_err(|_| CorpusError::Sense(raw.to_string()))?;
        let subtype = match parts.next() {
            None => None,
            Some(sub) if top.subtypes().contains(&sub) => Some(sub.to_string()),
            Some(_) => return Err(CorpusError::Sense(raw.to_string())),
        };
        Ok(SensePath {
            top,
            subtype,
            raw: trimmed.to_string(),
        })
    }

    /// Label of this sense at the given level, `None` when the annotation
    /// stops above that level.
    pub fn label(&self, level: Level) -> Option<String> {
        match level {
            Level::One => Some(self.top.as_str().to_string()),
            Level::Two => self
                .subtype
                .as_ref()
                .map(|sub| format!("{}.{}", self.top, sub)),
        }
    }
}

impl TryFrom<String> for SensePath {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SensePath::parse(&value)
    }
}

impl From<SensePath> for String {
    fn from(value: SensePath) -> Self {
        value.raw
    }
}

impl fmt::Display for SensePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// Depth of the sense hierarchy used for classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    One,
    Two,
}

impl Level {
    pub fn number(self) -> u8 {
        match self {
            Level::One => 1,
            Level::Two => 2,
        }
    }
}

impl TryFrom<u8> for Level {
    type Error = CorpusError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            other => Err(CorpusError::Level(other)),
        }
    }
}

impl From<Level> for u8 {
    fn from(value: Level) -> Self {
        value.number()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

const DEFAULT_LEVEL2: &str = include_str!("../../data/senses_level2.txt");

/// Ordered set of labels at one level. Order fixes report layout and
/// argmax tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    level: Level,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new(level: Level, labels: Vec<String>) -> Result<Self, CorpusError> {
        if labels.is_empty() {
            return Err(CorpusError::LabelSet("label set is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let sense = SensePath::parse(label)
                .map_err(|_| CorpusError::LabelSet(format!("invalid label `{label}`")))?;
            if sense.label(level).as_deref() != Some(label.as_str()) {
                return Err(CorpusError::LabelSet(format!(
                    "label `{label}` is not a level-{level} sense"
                )));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(CorpusError::LabelSet(format!("duplicate label `{label}`")));
            }
        }
        Ok(LabelSet {
            level,
            labels,
            index,
        })
    }

    /// The four first-level classes.
    pub fn level_one() -> Self {
        let labels = TopSense::ALL.iter().map(|t| t.to_string()).collect();
        LabelSet::new(Level::One, labels).expect("top-level classes form a valid label set")
    }

    /// The shipped 11-way second-level label list.
    pub fn default_level_two() -> Self {
        LabelSet::parse(Level::Two, DEFAULT_LEVEL2).expect("shipped level-2 list is valid")
    }

    /// Parses a one-label-per-line config text (`#` comments allowed).
    pub fn parse(level: Level, text: &str) -> Result<Self, CorpusError> {
        LabelSet::new(level, config_lines(text).map(str::to_string).collect())
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// Distinct labels of `senses` inside this set, in annotation order.
    pub fn gold_labels(&self, senses: &[SensePath]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for sense in senses {
            if let Some(label) = sense.label(self.level) {
                if self.index.contains_key(&label) && !out.contains(&label) {
                    out.push(label);
                }
            }
        }
        out
    }
}

/// Non-empty, non-comment lines of a plain-text config file, trimmed.
pub(crate) fn config_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter_map(|line| {
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let content = content.trim();
        (!content.is_empty()).then_some(content)
    })
}
