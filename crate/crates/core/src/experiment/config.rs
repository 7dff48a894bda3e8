use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::candidates::ScoringMode;
use crate::corpus::{ColumnMap, SplitSpec};
use crate::inference::Method;
use crate::sidecar::ENDPOINT_ENV;

/// Experiment configuration, read from TOML. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_corpus: Option<EvalCorpusSection>,
    #[serde(default)]
    pub labels: LabelsSection,
    #[serde(default)]
    pub inventory: InventorySection,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn pdtb2() -> String {
    "pdtb2".into()
}

fn pipe() -> String {
    "pipe".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// Directory searched recursively for corpus files.
    pub dir: PathBuf,
    /// `pdtb2` or a path to a column-map TOML file.
    #[serde(default = "pdtb2")]
    pub columns: String,
    #[serde(default = "default_corpus_name")]
    pub name: String,
    #[serde(default = "pipe")]
    pub extension: String,
    /// Fail on the first malformed record instead of skipping it.
    #[serde(default = "yes")]
    pub strict: bool,
}

fn yes() -> bool {
    true
}

fn default_corpus_name() -> String {
    "pdtb".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train: String,
    pub dev: String,
    pub test: String,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: "2-20,23-24".into(),
            dev: "0-1".into(),
            test: "21-22".into(),
        }
    }
}

/// A second, cross-domain test corpus whose senses are mapped onto PDTB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCorpusSection {
    #[serde(default = "default_eval_name")]
    pub name: String,
    pub dir: PathBuf,
    pub columns: String,
    /// Defaults to the shipped BioDRB table.
    #[serde(default)]
    pub sense_mapping: Option<PathBuf>,
    /// File stems to use; empty means every file.
    #[serde(default)]
    pub files: Vec<String>,
    #[serde(default = "pipe")]
    pub extension: String,
    #[serde(default = "yes")]
    pub strict: bool,
}

fn default_eval_name() -> String {
    "biodrb".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsSection {
    /// Second-level label list; defaults to the shipped 11-way list.
    #[serde(default)]
    pub level2: Option<PathBuf>,
    #[serde(default)]
    pub most_common_level1: Option<String>,
    #[serde(default)]
    pub most_common_level2: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventorySection {
    /// Defaults to the shipped 65-connective list.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Uniform,
    Ngram,
    Table,
    Sidecar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default = "default_backend")]
    pub kind: BackendKind,
    #[serde(default = "default_mode")]
    pub mode: ScoringMode,
    /// n-gram order.
    #[serde(default = "default_order")]
    pub order: usize,
    /// n-gram add-k smoothing.
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub training_text: Option<PathBuf>,
    #[serde(default)]
    pub length_normalize: bool,
    /// Score table for the `table` backend.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
}

fn default_backend() -> BackendKind {
    BackendKind::Uniform
}

fn default_mode() -> ScoringMode {
    ScoringMode::Causal
}

fn default_order() -> usize {
    3
}

fn default_k() -> f64 {
    1.0
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection {
            kind: default_backend(),
            mode: default_mode(),
            order: default_order(),
            k: default_k(),
            training_text: None,
            length_normalize: false,
            path: None,
            endpoint: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Frequency,
    Sidecar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    #[serde(default = "default_classifier")]
    pub kind: ClassifierKind,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default)]
    pub endpoint: Option<String>,
}

fn default_classifier() -> ClassifierKind {
    ClassifierKind::Frequency
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            kind: default_classifier(),
            k: default_k(),
            endpoint: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_levels")]
    pub levels: Vec<u8>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for scoring; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Store connective distributions in prediction files.
    #[serde(default)]
    pub conn_probs: bool,
    #[serde(default = "default_top_k")]
    pub confusion_top_k: usize,
    #[serde(default = "default_baseline_connective")]
    pub baseline_connective: String,
}

fn default_methods() -> Vec<Method> {
    Method::BOTH.to_vec()
}

fn default_levels() -> Vec<u8> {
    vec![1, 2]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_runs() -> usize {
    1
}

fn default_top_k() -> usize {
    10
}

fn default_baseline_connective() -> String {
    crate::evaluation::MOST_COMMON_CONNECTIVE.into()
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            methods: default_methods(),
            levels: default_levels(),
            output_dir: default_output(),
            seed: 0,
            jobs: 0,
            runs: default_runs(),
            conn_probs: false,
            confusion_top_k: default_top_k(),
            baseline_connective: default_baseline_connective(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub mode: Option<ScoringMode>,
    pub score_table: Option<PathBuf>,
    pub classifier: Option<ClassifierKind>,
    /// Sidecar endpoint for both backend and classifier.
    pub sidecar: Option<String>,
    pub levels: Option<Vec<u8>>,
    pub methods: Option<Vec<Method>>,
    pub jobs: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub conn_probs: bool,
    pub top_k: Option<usize>,
}

fn config_err(message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(message.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ExperimentError> {
        let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Resolves a column-map reference, leaving the built-in name alone.
    pub fn resolve_columns(&self, spec: &str) -> String {
        if spec == "pdtb2" {
            spec.to_string()
        } else {
            self.resolve(Path::new(spec)).to_string_lossy().into_owned()
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.run.output_dir)
    }

    /// Applies flag overrides, then the sidecar endpoint from the
    /// environment when no flag gave one.
    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.output_dir {
            // Flags are relative to the working directory, not the config.
            self.run.output_dir = std::path::absolute(&v).unwrap_or(v);
        }
        if let Some(v) = o.backend {
            self.backend.kind = v;
        }
        if let Some(v) = o.mode {
            self.backend.mode = v;
        }
        if let Some(v) = o.score_table {
            self.backend.path = Some(std::path::absolute(&v).unwrap_or(v));
        }
        if let Some(v) = o.classifier {
            self.classifier.kind = v;
        }
        let endpoint = o.sidecar.or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()));
        if let Some(v) = endpoint {
            self.backend.endpoint = Some(v.clone());
            self.classifier.endpoint = Some(v);
        }
        if let Some(v) = o.levels {
            self.run.levels = v;
        }
        if let Some(v) = o.methods {
            self.run.methods = v;
        }
        if let Some(v) = o.jobs {
            self.run.jobs = v;
        }
        if let Some(v) = o.runs {
            self.run.runs = v;
        }
        if let Some(v) = o.seed {
            self.run.seed = v;
        }
        if o.conn_probs {
            self.run.conn_probs = true;
        }
        if let Some(v) = o.top_k {
            self.run.confusion_top_k = v;
        }
    }

    fn require_file(&self, what: &str, path: &Path) -> Result<(), ExperimentError> {
        let p = self.resolve(path);
        if p.is_file() {
            Ok(())
        } else {
            Err(config_err(format!("{what} not found: {}", p.display())))
        }
    }

    fn require_dir(&self, what: &str, path: &Path) -> Result<(), ExperimentError> {
        let p = self.resolve(path);
        if p.is_dir() {
            Ok(())
        } else {
            Err(config_err(format!("{what} directory not found: {}", p.display())))
        }
    }

    fn check_columns(&self, what: &str, spec: &str) -> Result<(), ExperimentError> {
        if spec != "pdtb2" {
            self.require_file(what, Path::new(spec))?;
        }
        ColumnMap::load(&self.resolve_columns(spec))
            .map(|_| ())
            .map_err(|e| config_err(format!("{what}: {e}")))
    }

    /// Checks everything that can be checked without reading corpus data:
    /// paths exist, values are in range, and the backend supports the mode.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.require_dir("corpus", &self.corpus.dir)?;
        self.check_columns("corpus column map", &self.corpus.columns)?;
        SplitSpec::parse(&self.split.train, &self.split.dev, &self.split.test)
            .map_err(|e| config_err(e.to_string()))?;
        if let Some(eval) = &self.eval_corpus {
            self.require_dir("eval corpus", &eval.dir)?;
            self.check_columns("eval corpus column map", &eval.columns)?;
            if let Some(m) = &eval.sense_mapping {
                self.require_file("sense mapping", m)?;
            }
        }
        if let Some(p) = &self.labels.level2 {
            self.require_file("level-2 label list", p)?;
        }
        if let Some(p) = &self.inventory.path {
            self.require_file("connective inventory", p)?;
        }

        let b = &self.backend;
        match b.kind {
            BackendKind::Uniform => {}
            BackendKind::Ngram => {
                if b.mode != ScoringMode::Causal {
                    return Err(config_err(format!("the n-gram backend does not support {} scoring", b.mode)));
                }
                if b.order == 0 {
                    return Err(config_err("n-gram order must be at least 1"));
                }
                if !(b.k > 0.0 && b.k.is_finite()) {
                    return Err(config_err(format!("n-gram smoothing k must be positive, got {}", b.k)));
                }
                let text = b
                    .training_text
                    .as_ref()
                    .ok_or_else(|| config_err("the n-gram backend needs backend.training_text"))?;
                self.require_file("n-gram training text", text)?;
            }
            BackendKind::Table => {
                let path = b.path.as_ref().ok_or_else(|| config_err("the table backend needs backend.path"))?;
                self.require_file("score table", path)?;
            }
            BackendKind::Sidecar => {
                if b.endpoint.is_none() {
                    return Err(config_err(format!(
                        "the sidecar backend needs backend.endpoint or {ENDPOINT_ENV}"
                    )));
                }
            }
        }
        match self.classifier.kind {
            ClassifierKind::Frequency => {
                if !(self.classifier.k >= 0.0 && self.classifier.k.is_finite()) {
                    return Err(config_err(format!("classifier k must be non-negative, got {}", self.classifier.k)));
                }
            }
            ClassifierKind::Sidecar => {
                if self.classifier.endpoint.is_none() {
                    return Err(config_err(format!(
                        "the sidecar classifier needs classifier.endpoint or {ENDPOINT_ENV}"
                    )));
                }
            }
        }

        let r = &self.run;
        if r.levels.is_empty() || r.levels.iter().any(|l| !matches!(l, 1 | 2)) {
            return Err(config_err(format!("run.levels must be a non-empty subset of [1, 2], got {:?}", r.levels)));
        }
        if r.methods.is_empty() {
            return Err(config_err("run.methods is empty"));
        }
        if r.runs == 0 {
            return Err(config_err("run.runs must be at least 1"));
        }
        if r.confusion_top_k == 0 {
            return Err(config_err("run.confusion_top_k must be at least 1"));
        }
        Ok(())
    }

    /// Fingerprint of the settings that determine results. Output location
    /// and thread count are left out.
    pub fn fingerprint(&self) -> String {
        let mut canon = self.clone();
        canon.run.output_dir = PathBuf::new();
        canon.run.jobs = 0;
        let json = serde_json::to_string(&canon).expect("config serializes");
        crate::fingerprint(json.as_bytes())
    }
}
