use std::io::{BufRead, Write};

use super::{CorpusError, Relation};

/// Writes one relation object per line.
pub fn write_relations_jsonl<W: Write>(mut out: W, relations: &[Relation]) -> Result<(), CorpusError> {
    for rel in relations {
        serde_json::to_writer(&mut out, rel)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_relations_jsonl<R: BufRead>(input: R) -> Result<Vec<Relation>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rel: Relation = serde_json::from_str(&line).map_err(|e| CorpusError::Record {
            file: "<jsonl>".into(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        rel.validate()?;
        out.push(rel);
    }
    Ok(out)
}
