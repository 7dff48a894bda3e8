//! Discourse relation corpora: the shared relation model and everything
//! needed to get PDTB 2.0 and BioDRB pipe files into it.

mod biodrb;
mod columns;
mod jsonl;
mod order;
mod pipe;
mod sense;
mod split;
mod stats;

pub use biodrb::{MappedSense, SenseMapping, UnmappedReport};
pub use columns::ColumnMap;
pub use jsonl::{read_relations_jsonl, write_relations_jsonl};
pub use order::{filter_canonical_order, OrderFilter};
pub use pipe::{parse_pipe_bytes, parse_pipe_file, Origin, ParseMode, ParseOutcome, RecordError, SenseSource};
pub use sense::{LabelSet, Level, SensePath, TopSense};
pub use split::{split_pdtb, Split, SplitSpec};
pub use stats::{corpus_stats, CorpusStats};

pub(crate) use sense::config_lines;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown sense `{0}`")]
    Sense(String),
    #[error("invalid sense level {0} (expected 1 or 2)")]
    Level(u8),
    #[error("invalid label set: {0}")]
    LabelSet(String),
    #[error("invalid column map: {0}")]
    ColumnMap(String),
    #[error("invalid split specification: {0}")]
    Split(String),
    #[error("invalid relation: {0}")]
    Relation(String),
    #[error("{file}: not valid UTF-8: {source}")]
    Encoding {
        file: String,
        source: std::str::Utf8Error,
    },
    #[error("{file}:{line}: {message}")]
    Record {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid sense mapping: {0}")]
    Mapping(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    Explicit,
    Implicit,
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationKind::Explicit => f.write_str("Explicit"),
            RelationKind::Implicit => f.write_str("Implicit"),
        }
    }
}

/// Half-open character offsets `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Parses a PDTB span list such as `120..135;140..151`.
    pub fn parse_list(text: &str) -> Option<Vec<Span>> {
        let text = text.trim();
        if text.is_empty() {
            return Some(Vec::new());
        }
        text.split(';')
            .map(|part| {
                let (a, b) = part.trim().split_once("..")?;
                let start = a.trim().parse().ok()?;
                let end = b.trim().parse().ok()?;
                (start <= end).then_some(Span { start, end })
            })
            .collect()
    }

    /// Smallest span covering every span in `list`.
    pub fn hull(list: &[Span]) -> Option<Span> {
        let start = list.iter().map(|s| s.start).min()?;
        let end = list.iter().map(|s| s.end).max()?;
        Some(Span { start, end })
    }
}

/// Character spans of the three relation parts, each possibly discontinuous.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSpans {
    pub arg1: Vec<Span>,
    pub connective: Vec<Span>,
    pub arg2: Vec<Span>,
}

/// One explicit or implicit discourse relation.
///
/// For implicit relations `connective` is the connective inserted by the
/// annotators and may span several words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub id: String,
    pub kind: RelationKind,
    pub connective: String,
    pub arg1: String,
    pub arg2: String,
    pub senses: Vec<SensePath>,
    pub section: Option<u32>,
    pub file: String,
    pub corpus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<RelationSpans>,
}

impl Relation {
    /// Checks the structural invariants: non-empty arguments and one or two senses.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.arg1.trim().is_empty() {
            return Err(CorpusError::Relation(format!("{}: empty arg1", self.id)));
        }
        if self.arg2.trim().is_empty() {
            return Err(CorpusError::Relation(format!("{}: empty arg2", self.id)));
        }
        if self.senses.is_empty() || self.senses.len() > 2 {
            return Err(CorpusError::Relation(format!(
                "{}: expected 1 or 2 senses, found {}",
                self.id,
                self.senses.len()
            )));
        }
        Ok(())
    }

    /// True when the gold connective is a single whitespace-free word.
    pub fn has_one_word_connective(&self) -> bool {
        let c = self.connective.trim();
        !c.is_empty() && !c.contains(char::is_whitespace)
    }
}
