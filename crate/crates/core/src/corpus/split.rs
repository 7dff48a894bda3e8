use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Relation, RelationKind};

/// Section assignment for training, development and test data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SplitSpecRepr", into = "SplitSpecRepr")]
pub struct SplitSpec {
    train: BTreeSet<u32>,
    dev: BTreeSet<u32>,
    test: BTreeSet<u32>,
}

impl SplitSpec {
    pub fn new(
        train: BTreeSet<u32>,
        dev: BTreeSet<u32>,
        test: BTreeSet<u32>,
    ) -> Result<Self, CorpusError> {
        let pairs = [("train", &train, "dev", &dev), ("train", &train, "test", &test), ("dev", &dev, "test", &test)];
        for (na, a, nb, b) in pairs {
            if let Some(s) = a.intersection(b).next() {
                return Err(CorpusError::Split(format!("section {s} is in both {na} and {nb}")));
            }
        }
        Ok(SplitSpec { train, dev, test })
    }

    /// Explicit training on sections 2-20 and 23-24, development on 0-1,
    /// implicit test on 21-22.
    pub fn pdtb_standard() -> Self {
        SplitSpec::parse("2-20,23-24", "0-1", "21-22").expect("standard split is valid")
    }

    /// Parses range lists such as `2-20,23-24`.
    pub fn parse(train: &str, dev: &str, test: &str) -> Result<Self, CorpusError> {
        SplitSpec::new(parse_ranges(train)?, parse_ranges(dev)?, parse_ranges(test)?)
    }

    pub fn train(&self) -> &BTreeSet<u32> {
        &self.train
    }

    pub fn dev(&self) -> &BTreeSet<u32> {
        &self.dev
    }

    pub fn test(&self) -> &BTreeSet<u32> {
        &self.test
    }
}

pub(crate) fn parse_ranges(text: &str) -> Result<BTreeSet<u32>, CorpusError> {
    let mut out = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CorpusError::Split(format!("invalid section range `{part}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u32 = a.trim().parse().map_err(|_| bad())?;
                let b: u32 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad())?);
            }
        }
    }
    Ok(out)
}

fn format_ranges(set: &BTreeSet<u32>) -> String {
    let mut parts = Vec::new();
    let mut iter = set.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap();
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
    }
    parts.join(",")
}

#[derive(Serialize, Deserialize)]
struct SplitSpecRepr {
    train: String,
    dev: String,
    test: String,
}

impl TryFrom<SplitSpecRepr> for SplitSpec {
    type Error = CorpusError;

    fn try_from(r: SplitSpecRepr) -> Result<Self, Self::Error> {
        SplitSpec::parse(&r.train, &r.dev, &r.test)
    }
}

impl From<SplitSpec> for SplitSpecRepr {
    fn from(s: SplitSpec) -> Self {
        SplitSpecRepr {
            train: format_ranges(&s.train),
            dev: format_ranges(&s.dev),
            test: format_ranges(&s.test),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    /// Explicit relations from training sections.
    pub train: Vec<Relation>,
    /// Explicit relations from development sections.
    pub dev: Vec<Relation>,
    /// Implicit relations from test sections.
    pub test: Vec<Relation>,
    pub dropped: usize,
}

/// Partitions relations by section. Relations of the wrong kind for their
/// section, or from sections outside the spec, are dropped and counted.
pub fn split_pdtb(relations: Vec<Relation>, spec: &SplitSpec) -> Split {
    let mut out = Split::default();
    for rel in relations {
        let Some(section) = rel.section else {
            out.dropped += 1;
            continue;
        };
        match rel.kind {
            RelationKind::Explicit if spec.train.contains(&section) => out.train.push(rel),
            RelationKind::Explicit if spec.dev.contains(&section) => out.dev.push(rel),
            RelationKind::Implicit if spec.test.contains(&section) => out.test.push(rel),
            _ => out.dropped += 1,
        }
    }
    out
}
