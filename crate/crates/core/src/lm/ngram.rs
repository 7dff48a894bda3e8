//! Add-k smoothed n-gram language model.
//!
//! Small and deterministic: it stands in for a neural causal LM when
//! scoring candidates on a desk, and doubles as a closed-form oracle.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::ScoringError;

pub const UNK: &str = "<unk>";
const BOS: u32 = u32::MAX;

/// Lowercases and splits into word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    static TOKEN: OnceLock<Regex> = OnceLock::new();
    let re = TOKEN.get_or_init(|| Regex::new(r"\w+|[^\w\s]").expect("token regex"));
    re.find_iter(&text.to_lowercase())
        .map(|m| m.as_str().to_string())
        .collect()
}

#[derive(Clone, Debug, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

#[derive(Clone, Debug)]
pub struct NGramModel {
    order: usize,
    k: f64,
    vocab: Vec<String>,
    ids: HashMap<String, u32>,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

impl NGramModel {
    /// Trains on pre-tokenized sequences. Each sequence is padded on the
    /// left with `order - 1` begin markers; there is no end marker.
    pub fn train<I, S>(sequences: I, order: usize, k: f64) -> Result<Self, ScoringError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        if order == 0 {
            return Err(ScoringError::NGram("order must be at least 1".into()));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(ScoringError::NGram(format!("smoothing k must be positive, got {k}")));
        }
        let mut model = NGramModel {
            order,
            k,
            vocab: vec![UNK.to_string()],
            ids: HashMap::from([(UNK.to_string(), 0)]),
            contexts: HashMap::new(),
        };
        let mut seen_tokens = 0usize;
        for seq in sequences {
            let ids: Vec<u32> = seq
                .as_ref()
                .iter()
                .map(|t| model.intern(t))
                .collect();
            seen_tokens += ids.len();
            let padded = model.pad(&ids);
            for i in (order - 1)..padded.len() {
                let ctx = padded[i + 1 - order..i].to_vec();
                let entry = model.contexts.entry(ctx).or_default();
                entry.total += 1;
                *entry.next.entry(padded[i]).or_default() += 1;
            }
        }
        if seen_tokens == 0 {
            return Err(ScoringError::NGram("training text is empty".into()));
        }
        Ok(model)
    }

    /// Trains on raw text, one sequence per non-empty line.
    pub fn train_text(text: &str, order: usize, k: f64) -> Result<Self, ScoringError> {
        let seqs: Vec<Vec<String>> = text
            .lines()
            .map(tokenize)
            .filter(|t| !t.is_empty())
            .collect();
        NGramModel::train(seqs, order, k)
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(id) = self.ids.get(token) {
            return *id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    fn pad(&self, ids: &[u32]) -> Vec<u32> {
        let mut padded = vec![BOS; self.order - 1];
        padded.extend_from_slice(ids);
        padded
    }

    fn lookup(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(0)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Vocabulary size including the unknown token.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn prob_ids(&self, ctx: &[u32], token: u32) -> f64 {
        let v = self.vocab.len() as f64;
        let (count, total) = match self.contexts.get(ctx) {
            Some(c) => (c.next.get(&token).copied().unwrap_or(0), c.total),
            None => (0, 0),
        };
        (count as f64 + self.k) / (total as f64 + self.k * v)
    }

    /// `P(token | history)`, using the last `order - 1` history tokens and
    /// begin markers where the history is shorter.
    pub fn prob(&self, history: &[String], token: &str) -> f64 {
        let ids: Vec<u32> = history.iter().map(|t| self.lookup(t)).collect();
        let padded = self.pad(&ids);
        let ctx = &padded[padded.len() + 1 - self.order..];
        self.prob_ids(ctx, self.lookup(token))
    }

    /// Conditional distribution over the vocabulary (in vocabulary order).
    pub fn distribution(&self, history: &[String]) -> Vec<f64> {
        self.vocab.iter().map(|t| self.prob(history, t)).collect()
    }

    /// Natural-log probability of a token sequence from its start.
    pub fn log_prob(&self, tokens: &[String]) -> f64 {
        let ids: Vec<u32> = tokens.iter().map(|t| self.lookup(t)).collect();
        let padded = self.pad(&ids);
        (self.order - 1..padded.len())
            .map(|i| self.prob_ids(&padded[i + 1 - self.order..i], padded[i]).ln())
            .sum()
    }

    /// Sum of `log P(continuation_i | prefix, continuation_<i)`.
    pub fn continuation_log_prob(&self, prefix: &[String], continuation: &[String]) -> f64 {
        let mut history = prefix.to_vec();
        let mut total = 0.0;
        for tok in continuation {
            total += self.prob(&history, tok).ln();
            history.push(tok.clone());
        }
        total
    }
}
