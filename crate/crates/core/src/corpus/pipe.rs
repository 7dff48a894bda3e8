use std::collections::BTreeMap;

use super::biodrb::{MappedSense, SenseMapping, UnmappedReport};
use super::{ColumnMap, CorpusError, Relation, RelationKind, RelationSpans, SensePath, Span};

/// File-level context for a pipe file: which corpus it belongs to and the
/// fallbacks for columns a layout may not carry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Origin {
    pub corpus: String,
    /// File identifier, usually the file stem (`wsj_2100`, `GENIA_1421503`).
    pub file: String,
    pub section: Option<u32>,
}

impl Origin {
    pub fn new(corpus: impl Into<String>, file: impl Into<String>) -> Self {
        Origin {
            corpus: corpus.into(),
            file: file.into(),
            section: None,
        }
    }

    pub fn with_section(mut self, section: Option<u32>) -> Self {
        self.section = section;
        self
    }
}

/// How sense strings are interpreted.
#[derive(Clone, Copy, Debug)]
pub enum SenseSource<'a> {
    /// Annotations are PDTB 2.0 sense strings.
    Pdtb,
    /// Annotations use another hierarchy and go through a mapping table.
    Mapped(&'a SenseMapping),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseMode {
    /// The first malformed record aborts the file.
    Strict,
    /// Malformed records are collected in [`ParseOutcome::errors`].
    Lenient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseOutcome {
    pub relations: Vec<Relation>,
    /// Records skipped on purpose, keyed by reason (relation type or `unmapped-sense`).
    pub skipped: BTreeMap<String, usize>,
    pub errors: Vec<RecordError>,
    pub unmapped: UnmappedReport,
    pub lines: usize,
}

impl ParseOutcome {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    pub fn merge(&mut self, other: ParseOutcome) {
        self.relations.extend(other.relations);
        for (k, v) in other.skipped {
            *self.skipped.entry(k).or_default() += v;
        }
        self.errors.extend(other.errors);
        self.unmapped.merge(other.unmapped);
        self.lines += other.lines;
    }
}

/// Decodes `bytes` as UTF-8 and parses them as a pipe file.
pub fn parse_pipe_bytes(
    bytes: &[u8],
    map: &ColumnMap,
    origin: &Origin,
    senses: SenseSource<'_>,
    mode: ParseMode,
) -> Result<ParseOutcome, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|source| CorpusError::Encoding {
        file: origin.file.clone(),
        source,
    })?;
    parse_pipe_file(text, map, origin, senses, mode)
}

/// Parses one pipe file, one record per line.
///
/// Explicit and Implicit records become relations; every other relation
/// type is counted in `skipped`. Every input line ends up in exactly one of
/// `relations`, `skipped` or `errors`.
pub fn parse_pipe_file(
    text: &str,
    map: &ColumnMap,
    origin: &Origin,
    senses: SenseSource<'_>,
    mode: ParseMode,
) -> Result<ParseOutcome, CorpusError> {
    map.validate()?;
    let mut out = ParseOutcome::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        out.lines += 1;
        match parse_record(line, line_no, map, origin, senses, &mut out.unmapped) {
            Ok(Record::Relation(rel)) => out.relations.push(*rel),
            Ok(Record::Skipped(reason)) => *out.skipped.entry(reason).or_default() += 1,
            Err(message) => match mode {
                ParseMode::Strict => {
                    return Err(CorpusError::Record {
                        file: origin.file.clone(),
                        line: line_no,
                        message,
                    })
                }
                ParseMode::Lenient => out.errors.push(RecordError {
                    line: line_no,
                    message,
                }),
            },
        }
    }
    Ok(out)
}

enum Record {
    Relation(Box<Relation>),
    Skipped(String),
}

fn parse_record(
    line: &str,
    line_no: usize,
    map: &ColumnMap,
    origin: &Origin,
    senses: SenseSource<'_>,
    unmapped: &mut UnmappedReport,
) -> Result<Record, String> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != map.field_count {
        return Err(format!(
            "expected {} fields, found {}",
            map.field_count,
            fields.len()
        ));
    }
    let kind = match fields[map.kind].trim() {
        "Explicit" => RelationKind::Explicit,
        "Implicit" => RelationKind::Implicit,
        "" => return Err("empty relation type".into()),
        other => return Ok(Record::Skipped(other.to_string())),
    };

    let connective_col = match kind {
        RelationKind::Implicit => map.implicit_connective.unwrap_or(map.connective),
        RelationKind::Explicit => map.connective,
    };
    let connective = fields[connective_col].trim().to_string();
    if connective.is_empty() {
        return Err(format!("{kind} relation without connective"));
    }

    let mut raw_senses = vec![fields[map.sense1].trim()];
    if let Some(col) = map.sense2 {
        raw_senses.push(fields[col].trim());
    }
    raw_senses.retain(|s| !s.is_empty());
    if raw_senses.is_empty() {
        return Err("relation without sense annotation".into());
    }
    let mut parsed = Vec::with_capacity(raw_senses.len());
    for raw in raw_senses {
        match senses {
            SenseSource::Pdtb => {
                parsed.push(SensePath::parse(raw).map_err(|e| e.to_string())?);
            }
            SenseSource::Mapped(table) => match table.map(raw) {
                MappedSense::Mapped(sense) => parsed.push(sense),
                MappedSense::Unmapped(label) => unmapped.record(&label),
            },
        }
    }
    if parsed.is_empty() {
        return Ok(Record::Skipped("unmapped-sense".into()));
    }

    let section = match map.section {
        Some(col) => {
            let value = fields[col].trim();
            Some(
                value
                    .parse::<u32>()
                    .map_err(|_| format!("invalid section `{value}`"))?,
            )
        }
        None => origin.section,
    };
    let file = map
        .file
        .map(|col| fields[col].trim().to_string())
        .filter(|f| !f.is_empty())
        .unwrap_or_else(|| origin.file.clone());

    let spans = match (map.arg1_span, map.connective_span, map.arg2_span) {
        (Some(a1), Some(c), Some(a2)) => {
            let parse = |col: usize, what: &str| {
                Span::parse_list(fields[col]).ok_or_else(|| format!("malformed {what} span list"))
            };
            Some(RelationSpans {
                arg1: parse(a1, "arg1")?,
                connective: parse(c, "connective")?,
                arg2: parse(a2, "arg2")?,
            })
        }
        _ => None,
    };

    let relation = Relation {
        id: format!("{}:{}", origin.file, line_no),
        kind,
        connective,
        arg1: fields[map.arg1].trim().to_string(),
        arg2: fields[map.arg2].trim().to_string(),
        senses: parsed,
        section,
        file,
        corpus: origin.corpus.clone(),
        spans,
    };
    relation.validate().map_err(|e| e.to_string())?;
    Ok(Record::Relation(Box::new(relation)))
}
