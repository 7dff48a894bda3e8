use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use walkdir::WalkDir;

use super::ExperimentError;
use crate::corpus::{
    parse_pipe_bytes, ColumnMap, Origin, ParseMode, ParseOutcome, Relation, SenseSource, UnmappedReport,
};

/// Parsed corpus plus the bookkeeping needed to report on it.
#[derive(Clone, Debug, Default)]
pub struct LoadedCorpus {
    pub relations: Vec<Relation>,
    pub files: usize,
    pub lines: usize,
    pub skipped: BTreeMap<String, usize>,
    /// Malformed records skipped in lenient mode, as `file:line: message`.
    pub errors: Vec<String>,
    pub unmapped: UnmappedReport,
    /// Hash over file names and contents.
    pub fingerprint: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParseSummary {
    pub files: usize,
    pub lines: usize,
    pub relations: usize,
    pub skipped: BTreeMap<String, usize>,
    pub errors: usize,
    pub unmapped: BTreeMap<String, usize>,
    pub fingerprint: String,
}

impl LoadedCorpus {
    pub fn summary(&self) -> ParseSummary {
        ParseSummary {
            files: self.files,
            lines: self.lines,
            relations: self.relations.len(),
            skipped: self.skipped.clone(),
            errors: self.errors.len(),
            unmapped: self.unmapped.labels.clone(),
            fingerprint: self.fingerprint.clone(),
        }
    }
}

pub struct CorpusSource<'a> {
    pub name: &'a str,
    pub dir: &'a Path,
    pub extension: &'a str,
    pub columns: &'a ColumnMap,
    pub senses: SenseSource<'a>,
    /// File stems to keep; empty keeps all.
    pub files: &'a [String],
    pub strict: bool,
}

/// Corpus files under `dir` with the given extension, in path order.
pub fn corpus_files(dir: &Path, extension: &str, stems: &[String]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| ExperimentError::Data(format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some(extension) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if stems.is_empty() || stems.iter().any(|s| s == stem) {
            out.push(path.to_path_buf());
        }
    }
    Ok(out)
}

/// Reads and parses every corpus file. Files are parsed in parallel and
/// merged in path order, so the result does not depend on scheduling.
pub fn load_corpus(source: &CorpusSource<'_>) -> Result<LoadedCorpus, ExperimentError> {
    let paths = corpus_files(source.dir, source.extension, source.files)?;
    let mode = if source.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let parsed: Vec<(String, Vec<u8>, ParseOutcome)> = paths
        .par_iter()
        .map(|path| {
            let rel = path.strip_prefix(source.dir).unwrap_or(path);
            let name = rel.to_string_lossy().replace('\\', "/");
            let bytes = std::fs::read(path).map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
            // PDTB keeps each section in a numbered directory.
            let section = rel
                .parent()
                .and_then(|p| p.file_name())
                .and_then(|d| d.to_str())
                .and_then(|d| d.parse::<u32>().ok());
            let origin = Origin::new(source.name, name.clone()).with_section(section);
            let outcome = parse_pipe_bytes(&bytes, source.columns, &origin, source.senses, mode)?;
            Ok((name, bytes, outcome))
        })
        .collect::<Result<_, ExperimentError>>()?;

    let mut hasher_input = Vec::new();
    let mut out = LoadedCorpus {
        files: parsed.len(),
        ..Default::default()
    };
    let mut merged = ParseOutcome::default();
    for (name, bytes, outcome) in parsed {
        hasher_input.extend_from_slice(name.as_bytes());
        hasher_input.push(0);
        hasher_input.extend_from_slice(&bytes);
        hasher_input.push(0);
        for e in &outcome.errors {
            out.errors.push(format!("{name}:{}: {}", e.line, e.message));
        }
        merged.merge(outcome);
    }
    out.relations = merged.relations;
    out.lines = merged.lines;
    out.skipped = merged.skipped;
    out.unmapped = merged.unmapped;
    out.fingerprint = crate::fingerprint(&hasher_input);
    Ok(out)
}
