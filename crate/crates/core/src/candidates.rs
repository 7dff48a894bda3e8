//! Connective inventory and explicitation candidates.
//!
//! Causal candidates are full strings `arg1 C arg2`, one per connective.
//! Masked candidates are a single template `arg1 [SEP] [MASK] arg2 [SEP]`
//! whose mask slot is filled by the scorer.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{config_lines, Relation, RelationKind};

const DEFAULT_INVENTORY: &str = include_str!("../data/connectives.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CandidateError {
    #[error("connective inventory is empty")]
    EmptyInventory,
    #[error("duplicate connective `{0}` in inventory")]
    Duplicate(String),
    #[error("connective `{0}` is not a single word")]
    MultiWord(String),
    #[error("{id}: candidates can only be generated for implicit relations")]
    NotImplicit { id: String },
    #[error("{id}: {which} is empty after normalization")]
    EmptyArgument { id: String, which: &'static str },
}

/// Ordered list of one-word connectives. Position defines tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectiveInventory {
    connectives: Vec<String>,
    index: HashMap<String, usize>,
}

impl ConnectiveInventory {
    pub fn new(connectives: Vec<String>) -> Result<Self, CandidateError> {
        if connectives.is_empty() {
            return Err(CandidateError::EmptyInventory);
        }
        let mut index = HashMap::with_capacity(connectives.len());
        for (i, c) in connectives.iter().enumerate() {
            if c.is_empty() || c.contains(char::is_whitespace) {
                return Err(CandidateError::MultiWord(c.clone()));
            }
            if index.insert(c.to_lowercase(), i).is_some() {
                return Err(CandidateError::Duplicate(c.clone()));
            }
        }
        Ok(ConnectiveInventory { connectives, index })
    }

    /// Loads a one-connective-per-line config (`#` comments allowed).
    pub fn parse(text: &str) -> Result<Self, CandidateError> {
        ConnectiveInventory::new(config_lines(text).map(str::to_string).collect())
    }

    /// The shipped 65-connective inventory.
    pub fn default_inventory() -> Self {
        ConnectiveInventory::parse(DEFAULT_INVENTORY).expect("shipped inventory is valid")
    }

    pub fn len(&self) -> usize {
        self.connectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connectives.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.connectives.get(i).map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.connectives
    }

    /// Case-insensitive position lookup.
    pub fn position(&self, connective: &str) -> Option<usize> {
        self.index.get(&connective.trim().to_lowercase()).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    Causal,
    Masked,
}

impl fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringMode::Causal => f.write_str("causal"),
            ScoringMode::Masked => f.write_str("masked"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TemplatePart {
    Text(String),
    Separator,
    Mask,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Candidates {
    /// One joined string per connective, in inventory order.
    Causal(Vec<String>),
    /// `arg1 [SEP] [MASK] arg2 [SEP]`; token strings are the scorer's concern.
    Masked(Vec<TemplatePart>),
}

/// Candidates for one relation together with the argument texts they were
/// built from, as sent to an external scorer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub relation_id: String,
    pub left: String,
    pub right: String,
    pub connectives: Vec<String>,
    pub candidates: Candidates,
}

impl CandidateSet {
    pub fn mode(&self) -> ScoringMode {
        match self.candidates {
            Candidates::Causal(_) => ScoringMode::Causal,
            Candidates::Masked(_) => ScoringMode::Masked,
        }
    }

    pub fn len(&self) -> usize {
        self.connectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connectives.is_empty()
    }
}

const TERMINAL: [char; 3] = ['.', '!', '?'];

/// Drops the sentence-final punctuation of the first argument.
///
/// A trailing run of terminal marks is removed as a unit so the function
/// stays idempotent on inputs like `"wait..."`.
pub fn normalize_arg1(text: &str) -> String {
    text.trim()
        .trim_end_matches(|c: char| TERMINAL.contains(&c) || c.is_whitespace())
        .to_string()
}

/// Lowercases the first alphabetic character of the second argument.
pub fn normalize_arg2(text: &str) -> String {
    let text = text.trim();
    match text.char_indices().find(|(_, c)| c.is_alphabetic()) {
        Some((pos, c)) => {
            let mut out = String::with_capacity(text.len());
            out.push_str(&text[..pos]);
            out.extend(c.to_lowercase());
            out.push_str(&text[pos + c.len_utf8()..]);
            out
        }
        None => text.to_string(),
    }
}

fn implicit_arguments(rel: &Relation) -> Result<(), CandidateError> {
    if rel.kind != RelationKind::Implicit {
        return Err(CandidateError::NotImplicit { id: rel.id.clone() });
    }
    Ok(())
}

fn non_empty(id: &str, which: &'static str, text: String) -> Result<String, CandidateError> {
    if text.is_empty() {
        Err(CandidateError::EmptyArgument {
            id: id.to_string(),
            which,
        })
    } else {
        Ok(text)
    }
}

/// `norm1(arg1) C norm2(arg2)` for every connective, single-space joined.
pub fn generate_causal(rel: &Relation, inv: &ConnectiveInventory) -> Result<CandidateSet, CandidateError> {
    implicit_arguments(rel)?;
    let left = non_empty(&rel.id, "arg1", normalize_arg1(&rel.arg1))?;
    let right = non_empty(&rel.id, "arg2", normalize_arg2(&rel.arg2))?;
    let texts = inv
        .as_slice()
        .iter()
        .map(|c| format!("{left} {c} {right}"))
        .collect();
    Ok(CandidateSet {
        relation_id: rel.id.clone(),
        left,
        right,
        connectives: inv.as_slice().to_vec(),
        candidates: Candidates::Causal(texts),
    })
}

/// The single masked template `arg1 [SEP] [MASK] norm2(arg2) [SEP]`.
pub fn generate_masked(rel: &Relation, inv: &ConnectiveInventory) -> Result<CandidateSet, CandidateError> {
    implicit_arguments(rel)?;
    let left = non_empty(&rel.id, "arg1", rel.arg1.trim().to_string())?;
    let right = non_empty(&rel.id, "arg2", normalize_arg2(&rel.arg2))?;
    let parts = vec![
        TemplatePart::Text(left.clone()),
        TemplatePart::Separator,
        TemplatePart::Mask,
        TemplatePart::Text(right.clone()),
        TemplatePart::Separator,
    ];
    Ok(CandidateSet {
        relation_id: rel.id.clone(),
        left,
        right,
        connectives: inv.as_slice().to_vec(),
        candidates: Candidates::Masked(parts),
    })
}

pub fn generate(rel: &Relation, inv: &ConnectiveInventory, mode: ScoringMode) -> Result<CandidateSet, CandidateError> {
    match mode {
        ScoringMode::Causal => generate_causal(rel, inv),
        ScoringMode::Masked => generate_masked(rel, inv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SensePath;
    use proptest::prelude::*;

    fn example_one() -> Relation {
        Relation {
            id: "wsj_0233:1".into(),
            kind: RelationKind::Implicit,
            connective: "While".into(),
            arg1: "A figure above 50 indicates the economy is likely to expand.".into(),
            arg2: "One below 50 indicates a contraction may be ahead.".into(),
            senses: vec![SensePath::parse("Comparison").unwrap()],
            section: Some(2),
            file: "wsj_0233".into(),
            corpus: "pdtb".into(),
            spans: None,
        }
    }

    #[test]
    fn small_inventory_from_text() {
        let inv = ConnectiveInventory::parse("and\nbut\nbecause").unwrap();
        assert_eq!(inv.len(), 3);
        assert_eq!(inv.position("But"), Some(1));
    }

    #[test]
    fn shipped_inventory_has_65_connectives() {
        assert_eq!(ConnectiveInventory::default_inventory().len(), 65);
    }

    #[test]
    fn inventory_rejects_bad_entries() {
        assert_eq!(
            ConnectiveInventory::parse("and\nas a result\n"),
            Err(CandidateError::MultiWord("as a result".into()))
        );
        assert_eq!(
            ConnectiveInventory::parse("and\nAnd"),
            Err(CandidateError::Duplicate("And".into()))
        );
        assert_eq!(ConnectiveInventory::parse("# nothing\n"), Err(CandidateError::EmptyInventory));
    }

    #[test]
    fn causal_candidate_for_worked_example() {
        let inv = ConnectiveInventory::parse("and\nbecause\nbut").unwrap();
        let set = generate_causal(&example_one(), &inv).unwrap();
        let Candidates::Causal(texts) = &set.candidates else { panic!() };
        assert_eq!(
            texts[0],
            "A figure above 50 indicates the economy is likely to expand and one below 50 indicates a contraction may be ahead."
        );
        assert!(texts[1].contains("expand because one below"));
        assert_eq!(texts.len(), 3);
    }

    #[test]
    fn inventory_of_one_gives_one_candidate() {
        let inv = ConnectiveInventory::parse("so").unwrap();
        assert_eq!(generate_causal(&example_one(), &inv).unwrap().len(), 1);
    }

    #[test]
    fn arg1_without_terminal_mark_unchanged() {
        assert_eq!(normalize_arg1("prices rose"), "prices rose");
        assert_eq!(normalize_arg1("prices rose!"), "prices rose");
    }

    #[test]
    fn masked_template_structure() {
        let inv = ConnectiveInventory::default_inventory();
        let set = generate_masked(&example_one(), &inv).unwrap();
        let Candidates::Masked(parts) = &set.candidates else { panic!() };
        assert_eq!(parts.len(), 5);
        assert_eq!(parts.iter().filter(|p| **p == TemplatePart::Mask).count(), 1);
        assert_eq!(
            parts[0],
            TemplatePart::Text("A figure above 50 indicates the economy is likely to expand.".into())
        );
        assert_eq!(
            parts[3],
            TemplatePart::Text("one below 50 indicates a contraction may be ahead.".into())
        );
        assert_eq!(set.mode(), ScoringMode::Masked);
    }

    #[test]
    fn empty_arguments_rejected() {
        let inv = ConnectiveInventory::default_inventory();
        let mut rel = example_one();
        rel.arg2 = "".into();
        assert!(matches!(
            generate_masked(&rel, &inv),
            Err(CandidateError::EmptyArgument { which: "arg2", .. })
        ));
        let mut rel = example_one();
        rel.arg1 = "?!".into();
        assert!(matches!(
            generate_causal(&rel, &inv),
            Err(CandidateError::EmptyArgument { which: "arg1", .. })
        ));
    }

    #[test]
    fn explicit_relations_rejected() {
        let mut rel = example_one();
        rel.kind = RelationKind::Explicit;
        assert!(generate_causal(&rel, &ConnectiveInventory::default_inventory()).is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_arg1(&s);
            prop_assert_eq!(normalize_arg1(&once), once);
            let once = normalize_arg2(&s);
            prop_assert_eq!(normalize_arg2(&once), once);
        }

        #[test]
        fn causal_candidates_differ_only_in_connective(
            a1 in "[A-Za-z ]{1,20}[a-z][.!?]?",
            a2 in "[A-Za-z][A-Za-z ]{0,20}",
            n in 1usize..65,
        ) {
            let inv = ConnectiveInventory::new(
                ConnectiveInventory::default_inventory().as_slice()[..n].to_vec()
            ).unwrap();
            let mut rel = example_one();
            rel.arg1 = a1;
            rel.arg2 = a2;
            let set = generate_causal(&rel, &inv).unwrap();
            let Candidates::Causal(texts) = &set.candidates else { panic!() };
            prop_assert_eq!(texts.len(), inv.len());
            for (text, conn) in texts.iter().zip(inv.as_slice()) {
                prop_assert_eq!(text, &format!("{} {} {}", set.left, conn, set.right));
            }
        }
    }
}
