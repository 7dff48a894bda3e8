#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_explicitation")
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("EXPLICITATION_SIDECAR")
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

/// One 48-field PDTB 2.0 record.
pub struct Line<'a> {
    pub kind: &'a str,
    pub section: u32,
    pub connective: &'a str,
    pub sense1: &'a str,
    pub sense2: &'a str,
    pub arg1: &'a str,
    pub arg2: &'a str,
}

impl Line<'_> {
    /// Spans put arg1, connective and arg2 in canonical order.
    pub fn render(&self) -> String {
        let mut f = vec![String::new(); 48];
        let explicit = self.kind == "Explicit";
        let a1 = (0, self.arg1.len());
        let c = (a1.1 + 1, a1.1 + 1 + self.connective.len());
        let a2_start = if explicit { c.1 + 1 } else { a1.1 + 1 };
        f[0] = self.kind.into();
        f[1] = format!("{:02}", self.section);
        f[2] = "00".into();
        if explicit {
            f[3] = format!("{}..{}", c.0, c.1);
            f[8] = self.connective.into();
        } else {
            f[9] = self.connective.into();
        }
        f[11] = self.sense1.into();
        f[12] = self.sense2.into();
        f[22] = format!("{}..{}", a1.0, a1.1);
        f[24] = self.arg1.into();
        f[32] = format!("{}..{}", a2_start, a2_start + self.arg2.len());
        f[34] = self.arg2.into();
        f.join("|")
    }
}

pub fn explicit<'a>(section: u32, connective: &'a str, sense: &'a str) -> Line<'a> {
    Line {
        kind: "Explicit",
        section,
        connective,
        sense1: sense,
        sense2: "",
        arg1: "The company raised its forecast",
        arg2: "sales doubled",
    }
}

pub fn implicit<'a>(section: u32, connective: &'a str, sense: &'a str) -> Line<'a> {
    Line {
        kind: "Implicit",
        section,
        connective,
        sense1: sense,
        sense2: "",
        arg1: "The company raised its forecast.",
        arg2: "Sales doubled.",
    }
}

/// Writes `lines` to `dir/SS/name` and returns the path.
pub fn write_pipe(dir: &Path, section: u32, name: &str, lines: &[Line<'_>]) -> PathBuf {
    let sub = dir.join(format!("{section:02}"));
    fs::create_dir_all(&sub).unwrap();
    let path = sub.join(name);
    let text: String = lines.iter().map(|l| l.render() + "\n").collect();
    fs::write(&path, text).unwrap();
    path
}

/// Corpus and table-backend scores where marginalization turns exactly
/// one of five Expansion predictions into Contingency. Returns the
/// config path.
pub fn shift_fixture(dir: &Path) -> PathBuf {
    let corpus = dir.join("pdtb");
    let mut train = Vec::new();
    for _ in 0..5 {
        train.push(explicit(2, "and", "Expansion.Conjunction"));
        train.push(explicit(2, "because", "Contingency.Cause.Reason"));
        train.push(explicit(2, "since", "Contingency.Cause.Reason"));
        train.push(explicit(2, "as", "Contingency.Cause.Reason"));
    }
    write_pipe(&corpus, 2, "wsj_0200.pipe", &train);
    let test = [
        implicit(21, "and", "Expansion.Conjunction"),
        implicit(21, "and", "Expansion.Conjunction"),
        implicit(21, "because", "Contingency.Cause.Reason"),
        implicit(21, "since", "Contingency.Cause.Reason"),
        implicit(21, "and", "Expansion.Conjunction"),
    ];
    write_pipe(&corpus, 21, "wsj_2100.pipe", &test);

    // Probabilities for (and, because, since, as), one row per test relation.
    let rows: [[f64; 4]; 5] = [
        [0.3, 0.25, 0.25, 0.2],
        [0.9, 0.1 / 3.0, 0.1 / 3.0, 0.1 / 3.0],
        [0.1, 0.7, 0.1, 0.1],
        [0.35, 0.15, 0.4, 0.1],
        [0.6, 0.4 / 3.0, 0.4 / 3.0, 0.4 / 3.0],
    ];
    let conns = ["and", "because", "since", "as"];
    let mut table = String::new();
    for (i, row) in rows.iter().enumerate() {
        let scores: serde_json::Map<String, serde_json::Value> = conns
            .iter()
            .zip(row)
            .map(|(c, p)| (c.to_string(), serde_json::json!(p.ln())))
            .collect();
        let rec = serde_json::json!({"id": format!("21/wsj_2100.pipe:{}", i + 1), "mode": "causal", "scores": scores});
        table.push_str(&rec.to_string());
        table.push('\n');
    }
    fs::write(dir.join("scores.jsonl"), table).unwrap();
    fs::write(dir.join("inventory.txt"), conns.join("\n") + "\n").unwrap();
    let config = dir.join("shift.toml");
    fs::write(
        &config,
        "[corpus]\ndir = \"pdtb\"\n\n[inventory]\npath = \"inventory.txt\"\n\n[backend]\nkind = \"table\"\npath = \"scores.jsonl\"\n\n[classifier]\nk = 1.0\n\n[run]\nlevels = [1]\noutput_dir = \"out\"\n",
    )
    .unwrap();
    config
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Classifier returning a fixed row per connective.
pub struct TableClassifier {
    pub labels: explicitation::corpus::LabelSet,
    pub rows: std::collections::HashMap<String, explicitation::classifier::SenseDistribution>,
}

impl explicitation::classifier::SenseClassifier for TableClassifier {
    fn id(&self) -> String {
        "table".into()
    }

    fn labels(&self) -> &explicitation::corpus::LabelSet {
        &self.labels
    }

    fn classify(
        &self,
        connective: &str,
        _arg1: &str,
        _arg2: &str,
    ) -> Result<explicitation::classifier::ClassifierOutput, explicitation::classifier::ClassifierError> {
        Ok(explicitation::classifier::ClassifierOutput {
            distribution: self.rows[connective].clone(),
            fallback: false,
        })
    }
}

/// Normalizes non-negative weights to a probability vector.
pub fn stochastic(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}
