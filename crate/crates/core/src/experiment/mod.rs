//! Configuration and end-to-end runs behind the command-line tool.

mod config;
mod data;

pub use config::{
    BackendKind, BackendSection, ClassifierKind, ClassifierSection, CorpusSection, EvalCorpusSection,
    ExperimentConfig, InventorySection, LabelsSection, Overrides, RunSection, SplitSection,
};
pub use data::{corpus_files, load_corpus, CorpusSource, LoadedCorpus, ParseSummary};

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{generate, CandidateError, ConnectiveInventory};
use crate::classifier::{train_frequency, ClassifierError, FrequencyModel, SenseClassifier, SidecarClassifier};
use crate::corpus::{
    corpus_stats, filter_canonical_order, split_pdtb, ColumnMap, CorpusError, CorpusStats, LabelSet, Level,
    Relation, RelationKind, SenseMapping, SenseSource, Split, SplitSpec,
};
use crate::evaluation::{
    agreement, baseline_most_common_connective, baseline_most_common_sense, connective_confusion,
    default_common_sense, summarize_runs, upper_bound_gold_connective, AgreementReport, EvalError, EvalReport,
    EvalSet, RunSummary,
};
use crate::inference::{id_labels, label_shift_report, predict_both, InferenceError, Method, Prediction, PredictionRecord, ShiftReport};
use crate::lm::{
    normalize, score, top_connective, ConnectiveDistribution, NGramBackend, NGramModel, ScoringBackend,
    ScoringError, TableBackend, UniformBackend, SidecarBackend,
};
use crate::sidecar::{SidecarClient, SidecarError};

/// Failure categories, each with its own process exit code.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Data(_) => 2,
            ExperimentError::Backend(_) => 3,
        }
    }
}

impl From<CorpusError> for ExperimentError {
    fn from(e: CorpusError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

impl From<CandidateError> for ExperimentError {
    fn from(e: CandidateError) -> Self {
        ExperimentError::Data(e.to_string())
    }
}

impl From<ScoringError> for ExperimentError {
    fn from(e: ScoringError) -> Self {
        ExperimentError::Backend(e.to_string())
    }
}

impl From<SidecarError> for ExperimentError {
    fn from(e: SidecarError) -> Self {
        ExperimentError::Backend(e.to_string())
    }
}

impl From<ClassifierError> for ExperimentError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Sidecar(_) | ClassifierError::InvalidDistribution(_) => {
                ExperimentError::Backend(e.to_string())
            }
            _ => ExperimentError::Data(e.to_string()),
        }
    }
}

impl From<InferenceError> for ExperimentError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Classifier(c) => c.into(),
            other => ExperimentError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for ExperimentError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Classifier(c) => c.into(),
            other => ExperimentError::Data(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Data(format!("{}: {e}", path.display()))
}

/// Parsed corpus after order filtering and splitting.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub corpus: LoadedCorpus,
    pub order_excluded: usize,
    pub order_missing_spans: usize,
    pub order_excluded_percent: f64,
    pub split: Split,
    pub eval: Option<(String, LoadedCorpus)>,
}

impl PreparedData {
    /// Test sets to evaluate on: the implicit test split, then the
    /// implicit relations of the cross-domain corpus when configured.
    pub fn targets(&self) -> Vec<(String, Vec<Relation>)> {
        let mut out = vec![("test".to_string(), self.split.test.clone())];
        if let Some((name, corpus)) = &self.eval {
            let implicit = corpus
                .relations
                .iter()
                .filter(|r| r.kind == RelationKind::Implicit)
                .cloned()
                .collect();
            out.push((name.clone(), implicit));
        }
        out
    }
}

/// Connective distribution for one relation, one JSON line each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub relation_id: String,
    pub top_connective: String,
    pub probs: Vec<f64>,
}

/// Everything reported for one test set at one level.
#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub config_fingerprint: String,
    pub target: String,
    pub level: u8,
    pub evaluated: usize,
    pub dropped: usize,
    pub methods: BTreeMap<String, EvalReport>,
    pub runs: BTreeMap<String, RunSummary>,
    pub baselines: BTreeMap<String, EvalReport>,
    pub agreement: AgreementReport,
    pub shift: Option<ShiftReport>,
}

/// Table 1 style counts: split sizes per level plus parser bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct CorpusStatsReport {
    pub corpus: ParseSummary,
    pub order_excluded: usize,
    pub order_missing_spans: usize,
    pub order_excluded_percent: f64,
    pub split_dropped: usize,
    /// `(split name, stats)` per level.
    pub splits: Vec<(String, Vec<CorpusStats>)>,
}

impl CorpusStatsReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let c = &self.corpus;
        let _ = writeln!(out, "files {}  lines {}  relations {}  errors {}", c.files, c.lines, c.relations, c.errors);
        for (kind, n) in &c.skipped {
            let _ = writeln!(out, "skipped {kind}: {n}");
        }
        for (label, n) in &c.unmapped {
            let _ = writeln!(out, "unmapped sense {label}: {n}");
        }
        let _ = writeln!(
            out,
            "explicit relations out of arg1-conn-arg2 order: {} ({:.2}%)",
            self.order_excluded, self.order_excluded_percent
        );
        let _ = writeln!(out, "relations not used by the split (kind or section): {}", self.split_dropped);
        for (name, per_level) in &self.splits {
            for stats in per_level {
                let _ = writeln!(out, "\n{name}, level {}: {} relations ({} without a label)", stats.level, stats.relations, stats.unlabeled);
                let width = stats.counts.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
                for (label, n) in &stats.counts {
                    let _ = writeln!(out, "  {label:<width$}  {n:>6}");
                }
            }
        }
        out
    }
}

/// A validated configuration with its small config files loaded.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub inventory: ConnectiveInventory,
    pub labels: Vec<LabelSet>,
    pool: rayon::ThreadPool,
}

impl Experiment {
    /// Validates `config` and loads the inventory and label lists. No
    /// corpus data is touched.
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let inventory = match &config.inventory.path {
            Some(p) => {
                let p = config.resolve(p);
                let text = fs::read_to_string(&p).map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?;
                ConnectiveInventory::parse(&text)
                    .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?
            }
            None => ConnectiveInventory::default_inventory(),
        };
        let level_two = match &config.labels.level2 {
            Some(p) => {
                let p = config.resolve(p);
                let text = fs::read_to_string(&p).map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?;
                LabelSet::parse(Level::Two, &text)
                    .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?
            }
            None => LabelSet::default_level_two(),
        };
        let mut labels = Vec::new();
        for &level in &config.run.levels {
            labels.push(if level == 1 { LabelSet::level_one() } else { level_two.clone() });
        }
        for set in &labels {
            let label = common_sense(&config, set.level());
            if set.index_of(&label).is_none() {
                return Err(ExperimentError::Config(format!(
                    "most common sense `{label}` is not a level-{} label",
                    set.level()
                )));
            }
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.jobs)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(Experiment {
            config,
            inventory,
            labels,
            pool,
        })
    }

    fn columns(&self, spec: &str) -> Result<ColumnMap, ExperimentError> {
        ColumnMap::load(&self.config.resolve_columns(spec)).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Parses the corpus, filters argument order and splits by section.
    pub fn prepare(&self) -> Result<PreparedData, ExperimentError> {
        let c = &self.config;
        let columns = self.columns(&c.corpus.columns)?;
        let dir = c.resolve(&c.corpus.dir);
        let corpus = self.pool.install(|| {
            load_corpus(&CorpusSource {
                name: &c.corpus.name,
                dir: &dir,
                extension: &c.corpus.extension,
                columns: &columns,
                senses: SenseSource::Pdtb,
                files: &[],
                strict: c.corpus.strict,
            })
        })?;
        if corpus.files == 0 {
            warn!("no .{} files under {}", c.corpus.extension, dir.display());
        }
        for e in &corpus.errors {
            warn!("skipped malformed record {e}");
        }
        let spec = SplitSpec::parse(&c.split.train, &c.split.dev, &c.split.test)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let filtered = filter_canonical_order(corpus.relations.clone());
        if filtered.missing_spans > 0 {
            warn!("{} explicit relations lack spans and were excluded", filtered.missing_spans);
        }
        let order_excluded_percent = filtered.excluded_percent();
        let split = split_pdtb(filtered.kept, &spec);

        let eval = match &c.eval_corpus {
            Some(e) => {
                let columns = self.columns(&e.columns)?;
                let mapping = match &e.sense_mapping {
                    Some(p) => {
                        let p = c.resolve(p);
                        let text = fs::read_to_string(&p).map_err(io_err(&p))?;
                        SenseMapping::parse(&text).map_err(|err| ExperimentError::Config(format!("{}: {err}", p.display())))?
                    }
                    None => SenseMapping::default_biodrb(),
                };
                let dir = c.resolve(&e.dir);
                let loaded = self.pool.install(|| {
                    load_corpus(&CorpusSource {
                        name: &e.name,
                        dir: &dir,
                        extension: &e.extension,
                        columns: &columns,
                        senses: SenseSource::Mapped(&mapping),
                        files: &e.files,
                        strict: e.strict,
                    })
                })?;
                for (label, n) in &loaded.unmapped.labels {
                    warn!("{}: sense `{label}` has no PDTB mapping ({n} occurrences)", e.name);
                }
                Some((e.name.clone(), loaded))
            }
            None => None,
        };
        Ok(PreparedData {
            corpus,
            order_excluded: filtered.excluded,
            order_missing_spans: filtered.missing_spans,
            order_excluded_percent,
            split,
            eval,
        })
    }

    pub fn corpus_stats(&self, data: &PreparedData) -> CorpusStatsReport {
        let mut splits = Vec::new();
        let parts: [(&str, &Vec<Relation>); 3] =
            [("train", &data.split.train), ("dev", &data.split.dev), ("test", &data.split.test)];
        for (name, rels) in parts {
            splits.push((name.to_string(), self.labels.iter().map(|l| corpus_stats(rels, l)).collect()));
        }
        if let Some((name, corpus)) = &data.eval {
            splits.push((name.clone(), self.labels.iter().map(|l| corpus_stats(&corpus.relations, l)).collect()));
            let implicit: Vec<&Relation> =
                corpus.relations.iter().filter(|r| r.kind == RelationKind::Implicit).collect();
            splits.push((
                format!("{name} implicit"),
                self.labels.iter().map(|l| corpus_stats(implicit.iter().copied(), l)).collect(),
            ));
        }
        CorpusStatsReport {
            corpus: data.corpus.summary(),
            order_excluded: data.order_excluded,
            order_missing_spans: data.order_missing_spans,
            order_excluded_percent: data.order_excluded_percent,
            split_dropped: data.split.dropped,
            splits,
        }
    }

    fn sidecar(endpoint: &Option<String>) -> Result<Arc<SidecarClient>, ExperimentError> {
        let endpoint = endpoint
            .as_deref()
            .ok_or_else(|| ExperimentError::Config("no sidecar endpoint".into()))?;
        Ok(Arc::new(SidecarClient::connect(endpoint)?))
    }

    pub fn backend(&self) -> Result<Box<dyn ScoringBackend>, ExperimentError> {
        let b = &self.config.backend;
        Ok(match b.kind {
            config::BackendKind::Uniform => Box::new(UniformBackend),
            config::BackendKind::Ngram => {
                let path = self.config.resolve(b.training_text.as_ref().expect("validated"));
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                let model = NGramModel::train_text(&text, b.order, b.k)?;
                let mut backend = NGramBackend::new(model);
                backend.length_normalize = b.length_normalize;
                Box::new(backend)
            }
            config::BackendKind::Table => {
                let path = self.config.resolve(b.path.as_ref().expect("validated"));
                let file = fs::File::open(&path).map_err(io_err(&path))?;
                Box::new(TableBackend::from_jsonl(path.to_string_lossy(), BufReader::new(file))?)
            }
            config::BackendKind::Sidecar => Box::new(SidecarBackend::new(Self::sidecar(&b.endpoint)?)),
        })
    }

    /// Trains the frequency classifier on the explicit training split.
    pub fn train_frequency(&self, data: &PreparedData, labels: &LabelSet) -> Result<FrequencyModel, ExperimentError> {
        let model = train_frequency(&data.split.train, labels, self.config.classifier.k)?;
        info!("trained level-{} frequency classifier {}", labels.level(), model.fingerprint());
        Ok(model)
    }

    pub fn classifier(
        &self,
        data: &PreparedData,
        labels: &LabelSet,
    ) -> Result<Box<dyn SenseClassifier>, ExperimentError> {
        Ok(match self.config.classifier.kind {
            ClassifierKind::Frequency => Box::new(self.train_frequency(data, labels)?),
            ClassifierKind::Sidecar => Box::new(SidecarClassifier::new(
                Self::sidecar(&self.config.classifier.endpoint)?,
                labels.clone(),
            )),
        })
    }

    /// Connective distributions for `relations`, in input order.
    pub fn distributions(
        &self,
        backend: &dyn ScoringBackend,
        relations: &[Relation],
    ) -> Result<Vec<ConnectiveDistribution>, ExperimentError> {
        let mode = self.config.backend.mode;
        if !backend.supports(mode) {
            return Err(ExperimentError::Config(format!("backend `{}` does not support {mode} scoring", backend.id())));
        }
        self.pool.install(|| {
            relations
                .par_iter()
                .map(|rel| {
                    let cands = generate(rel, &self.inventory, mode)?;
                    let scores = score(backend, &cands)
                        .map_err(|e| ExperimentError::Backend(format!("relation {}: {e}", rel.id)))?;
                    Ok(normalize(&scores))
                })
                .collect()
        })
    }

    pub fn distribution_records(&self, relations: &[Relation], dists: &[ConnectiveDistribution]) -> Vec<DistributionRecord> {
        relations
            .iter()
            .zip(dists)
            .map(|(rel, d)| DistributionRecord {
                relation_id: rel.id.clone(),
                top_connective: self.inventory.get(top_connective(d)).expect("aligned").to_string(),
                probs: d.probs().to_vec(),
            })
            .collect()
    }

    /// Reads distributions written by `score`, keyed by relation id.
    pub fn read_distributions(&self, path: &Path) -> Result<HashMap<String, ConnectiveDistribution>, ExperimentError> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut out = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: String| ExperimentError::Data(format!("{}:{}: {m}", path.display(), i + 1));
            let rec: DistributionRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            if rec.probs.len() != self.inventory.len() {
                return Err(bad(format!(
                    "{} probabilities for an inventory of {}",
                    rec.probs.len(),
                    self.inventory.len()
                )));
            }
            let dist = ConnectiveDistribution::new(rec.probs).map_err(|e| bad(e.to_string()))?;
            out.insert(rec.relation_id, dist);
        }
        Ok(out)
    }

    /// Distributions for `relations`, from a file when given, otherwise
    /// computed with the configured backend.
    /// Also returns the backend id, or `file` for loaded distributions.
    pub fn obtain_distributions(
        &self,
        relations: &[Relation],
        from: Option<&HashMap<String, ConnectiveDistribution>>,
    ) -> Result<(Vec<ConnectiveDistribution>, String), ExperimentError> {
        match from {
            Some(map) => {
                let dists = relations
                    .iter()
                    .map(|r| {
                        map.get(&r.id)
                            .cloned()
                            .ok_or_else(|| ExperimentError::Data(format!("no distribution for relation {}", r.id)))
                    })
                    .collect::<Result<_, _>>()?;
                Ok((dists, "file".to_string()))
            }
            None => {
                let backend = self.backend()?;
                Ok((self.distributions(backend.as_ref(), relations)?, backend.id()))
            }
        }
    }

    /// Pipeline and marginal predictions for every item of `set`.
    pub fn predict(
        &self,
        set: &EvalSet,
        dists: &HashMap<&str, &ConnectiveDistribution>,
        clf: &dyn SenseClassifier,
    ) -> Result<Vec<(Prediction, Prediction)>, ExperimentError> {
        self.pool.install(|| {
            set.items
                .par_iter()
                .map(|item| {
                    let dist = dists
                        .get(item.relation_id.as_str())
                        .ok_or_else(|| ExperimentError::Data(format!("no distribution for relation {}", item.relation_id)))?;
                    Ok(predict_both(&item.relation_id, dist, &self.inventory, clf, &item.arg1, &item.arg2)?)
                })
                .collect()
        })
    }

    fn with_meta(&self, report: EvalReport, clf: &dyn SenseClassifier, backend: &str, target: &str) -> EvalReport {
        report
            .with_meta("classifier", clf.id())
            .with_meta("backend", backend)
            .with_meta("target", target)
            .with_meta("config_fingerprint", self.config.fingerprint())
    }

    /// Evaluates one level on one target from precomputed distributions.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate_level(
        &self,
        target: &str,
        relations: &[Relation],
        dists: &[ConnectiveDistribution],
        labels: &LabelSet,
        clf: &dyn SenseClassifier,
        backend_id: &str,
        extra_runs: &[Vec<ConnectiveDistribution>],
    ) -> Result<(LevelReport, Vec<(Prediction, Prediction)>), ExperimentError> {
        let set = EvalSet::new(relations, labels);
        if set.dropped > 0 {
            info!("{target}: {} relations without a level-{} label left out", set.dropped, labels.level());
        }
        let lookup = by_id(relations, dists);
        let preds = self.predict(&set, &lookup, clf)?;
        let fallbacks = preds.iter().filter(|(p, _)| p.fallback).count();
        if fallbacks > 0 {
            warn!("{target}: classifier used its prior for {fallbacks} top connectives");
        }

        let mut methods = BTreeMap::new();
        let mut runs = BTreeMap::new();
        for &method in &self.config.run.methods {
            let labels_of = |preds: &[(Prediction, Prediction)]| -> Vec<String> {
                preds
                    .iter()
                    .map(|(p, m)| if method == Method::Pipeline { p.label.clone() } else { m.label.clone() })
                    .collect()
            };
            let report = set.score(&labels_of(&preds))?.with_meta("method", method.to_string());
            let mut all = vec![report.clone()];
            for run in extra_runs {
                let run_preds = self.predict(&set, &by_id(relations, run), clf)?;
                all.push(set.score(&labels_of(&run_preds))?);
            }
            runs.insert(method.to_string(), summarize_runs(&all));
            methods.insert(method.to_string(), self.with_meta(report, clf, backend_id, target));
        }

        let mut baselines = BTreeMap::new();
        let sense = common_sense(&self.config, labels.level());
        baselines.insert(
            "most_common_sense".to_string(),
            self.with_meta(baseline_most_common_sense(&set, &sense)?, clf, "none", target),
        );
        let conn = &self.config.run.baseline_connective;
        baselines.insert(
            "most_common_connective".to_string(),
            self.with_meta(baseline_most_common_connective(&set, clf, conn)?, clf, "none", target),
        );
        baselines.insert(
            "gold_connective".to_string(),
            self.with_meta(upper_bound_gold_connective(&set, clf)?, clf, "none", target),
        );

        let tops: Vec<String> = preds.iter().map(|(p, _)| p.top_connective.clone()).collect();
        let agreement = agreement(&set, &tops, clf)?;
        let shift = if self.config.run.methods.len() == 2 {
            let pipeline: Vec<&Prediction> = preds.iter().map(|(p, _)| p).collect();
            let marginal: Vec<&Prediction> = preds.iter().map(|(_, m)| m).collect();
            Some(label_shift_report(&id_labels(pipeline), &id_labels(marginal), labels)?)
        } else {
            None
        };
        let report = LevelReport {
            config_fingerprint: self.config.fingerprint(),
            target: target.to_string(),
            level: labels.level().number(),
            evaluated: set.len(),
            dropped: set.dropped,
            methods,
            runs,
            baselines,
            agreement,
            shift,
        };
        Ok((report, preds))
    }

    pub fn prediction_records(&self, preds: &[(Prediction, Prediction)]) -> Vec<PredictionRecord> {
        let mut out = Vec::new();
        for (p, m) in preds {
            for &method in &self.config.run.methods {
                let pred = if method == Method::Pipeline { p } else { m };
                out.push(pred.record(self.config.run.conn_probs));
            }
        }
        out
    }

    /// Predicted-versus-gold connective counts over a target.
    pub fn confusion_csv(&self, relations: &[Relation], dists: &[ConnectiveDistribution]) -> Result<String, ExperimentError> {
        let set = EvalSet::new(relations, &LabelSet::level_one());
        let top: HashMap<&str, String> = relations
            .iter()
            .zip(dists)
            .map(|(r, d)| (r.id.as_str(), self.inventory.get(top_connective(d)).expect("aligned").to_string()))
            .collect();
        let tops: Vec<String> = set.items.iter().map(|i| top[i.relation_id.as_str()].clone()).collect();
        let m = connective_confusion(&set, &tops, self.inventory.as_slice(), self.config.run.confusion_top_k)?;
        Ok(m.to_csv()?)
    }

    /// Runs the whole experiment and writes every artifact under the
    /// output directory.
    pub fn run(&self) -> Result<RunSummaryReport, ExperimentError> {
        let data = self.prepare()?;
        let out_dir = self.config.output_dir();
        fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;

        let stats = self.corpus_stats(&data);
        write_json(&out_dir.join("corpus_stats.json"), &stats)?;
        write_text(&out_dir.join("corpus_stats.txt"), &stats.render())?;

        let backend = self.backend()?;
        let backend_id = backend.id();
        let mut classifiers = BTreeMap::new();
        let mut clfs = Vec::new();
        for labels in &self.labels {
            let clf: Box<dyn SenseClassifier> = if self.config.classifier.kind == ClassifierKind::Frequency {
                let model = self.train_frequency(&data, labels)?;
                write_text(&out_dir.join(format!("classifier_level{}.json", labels.level())), &(model.to_json()? + "\n"))?;
                Box::new(model)
            } else {
                self.classifier(&data, labels)?
            };
            classifiers.insert(format!("level{}", labels.level()), clf.id());
            clfs.push(clf);
        }

        let mut reports = Vec::new();
        for (target, relations) in data.targets() {
            let dir = out_dir.join(&target);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let dists = self.distributions(backend.as_ref(), &relations)?;
            let mut extra = Vec::new();
            for _ in 1..self.config.run.runs {
                extra.push(self.distributions(backend.as_ref(), &relations)?);
            }
            write_jsonl(&dir.join("distributions.jsonl"), &self.distribution_records(&relations, &dists))?;
            write_text(&dir.join("confusion.csv"), &self.confusion_csv(&relations, &dists)?)?;
            for (labels, clf) in self.labels.iter().zip(&clfs) {
                let (report, preds) =
                    self.evaluate_level(&target, &relations, &dists, labels, clf.as_ref(), &backend_id, &extra)?;
                let level_dir = dir.join(format!("level{}", labels.level()));
                fs::create_dir_all(&level_dir).map_err(io_err(&level_dir))?;
                write_jsonl(&level_dir.join("predictions.jsonl"), &self.prediction_records(&preds))?;
                write_json(&level_dir.join("report.json"), &report)?;
                write_text(&level_dir.join("report.txt"), &render_level_report(&report))?;
                reports.push(report);
            }
        }
        let manifest = RunSummaryReport {
            config_fingerprint: self.config.fingerprint(),
            corpus_fingerprint: data.corpus.fingerprint.clone(),
            backend: backend_id,
            mode: self.config.backend.mode.to_string(),
            classifiers,
            inventory_size: self.inventory.len(),
            seed: self.config.run.seed,
            runs: self.config.run.runs,
            reports: reports
                .iter()
                .map(|r| ReportIndex {
                    target: r.target.clone(),
                    level: r.level,
                    evaluated: r.evaluated,
                    macro_f1: r.methods.iter().map(|(k, v)| (k.clone(), v.macro_f1)).collect(),
                    accuracy: r.methods.iter().map(|(k, v)| (k.clone(), v.accuracy)).collect(),
                })
                .collect(),
        };
        write_json(&out_dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

fn by_id<'a>(relations: &'a [Relation], dists: &'a [ConnectiveDistribution]) -> HashMap<&'a str, &'a ConnectiveDistribution> {
    relations.iter().map(|r| r.id.as_str()).zip(dists).collect()
}

fn common_sense(config: &ExperimentConfig, level: Level) -> String {
    let configured = match level {
        Level::One => &config.labels.most_common_level1,
        Level::Two => &config.labels.most_common_level2,
    };
    configured.clone().unwrap_or_else(|| default_common_sense(level).to_string())
}

/// Index written to `manifest.json` at the end of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummaryReport {
    pub config_fingerprint: String,
    pub corpus_fingerprint: String,
    pub backend: String,
    pub mode: String,
    pub classifiers: BTreeMap<String, String>,
    pub inventory_size: usize,
    pub seed: u64,
    pub runs: usize,
    pub reports: Vec<ReportIndex>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportIndex {
    pub target: String,
    pub level: u8,
    pub evaluated: usize,
    pub macro_f1: BTreeMap<String, f64>,
    pub accuracy: BTreeMap<String, f64>,
}

pub fn render_level_report(r: &LevelReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} level {}: {} relations evaluated, {} without a label",
        r.target, r.level, r.evaluated, r.dropped
    );
    let order = ["pipeline", "marginal", "most_common_sense", "most_common_connective", "gold_connective"];
    let sections = order
        .iter()
        .filter_map(|name| r.methods.get(*name).or_else(|| r.baselines.get(*name)).map(|rep| (*name, rep)));
    for (name, report) in sections {
        let _ = writeln!(out, "\n[{name}]");
        out.push_str(&report.render());
        if let Some(s) = r.runs.get(name).filter(|s| s.runs > 1) {
            let _ = writeln!(
                out,
                "over {} runs: macro-F1 {:.2} ± {:.2}, accuracy {:.2} ± {:.2}",
                s.runs, s.macro_f1_mean, s.macro_f1_std, s.accuracy_mean, s.accuracy_std
            );
        }
    }
    let _ = writeln!(out, "\n[agreement]");
    out.push_str(&r.agreement.render());
    if let Some(shift) = &r.shift {
        let _ = writeln!(out, "\n[pipeline -> marginal]");
        out.push_str(&render_shift(shift));
    }
    out
}

pub fn render_shift(shift: &ShiftReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "changed {} of {} ({:.2}%)",
        shift.changed,
        shift.total,
        100.0 * shift.changed_fraction
    );
    if let Some(s) = &shift.most_frequent_shift {
        let _ = writeln!(
            out,
            "most frequent shift {} -> {}: {} ({:.2}% of changes)",
            s.from,
            s.to,
            s.count,
            100.0 * s.share_of_changes
        );
    }
    let width = shift.labels.iter().map(String::len).max().unwrap_or(0);
    for (label, row) in shift.labels.iter().zip(&shift.matrix) {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        let _ = writeln!(out, "{label:<width$} {}", cells.join(""));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExperimentError::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|e| ExperimentError::Data(e.to_string()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads prediction records written by `predict`.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, ExperimentError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| ExperimentError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Writes a synthetic corpus, its LM text and a matching config into `dir`.
pub fn write_synthetic(dir: &Path, seed: u64) -> Result<PathBuf, ExperimentError> {
    let spec = crate::synthetic::SyntheticSpec {
        seed,
        ..Default::default()
    };
    let corpus = crate::synthetic::generate(&spec);
    corpus.write_pipes(&dir.join("pdtb")).map_err(io_err(dir))?;
    write_text(&dir.join("lm.txt"), &corpus.lm_text)?;
    let config = format!(
        "[corpus]\ndir = \"pdtb\"\n\n[backend]\nkind = \"uniform\"\ntraining_text = \"lm.txt\"\norder = 3\n\n[classifier]\nkind = \"frequency\"\nk = 1.0\n\n[run]\noutput_dir = \"out\"\nseed = {seed}\n"
    );
    let path = dir.join("experiment.toml");
    write_text(&path, &config)?;
    Ok(path)
}
