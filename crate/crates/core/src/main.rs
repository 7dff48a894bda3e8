use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use explicitation::candidates::ScoringMode;
use explicitation::experiment::{
    read_predictions, render_level_report, render_shift, write_json, write_jsonl, write_synthetic, write_text,
    BackendKind, ClassifierKind, Experiment, ExperimentConfig, ExperimentError, Overrides,
};
use explicitation::inference::{label_shift_report, Method};
use explicitation::lm::ConnectiveDistribution;
use explicitation::sidecar::ENDPOINT_ENV;

#[derive(Parser)]
#[command(name = "explicitation", version, about = "Implicit discourse relation classification by connective explicitation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, value_enum)]
    mode: Option<ScoringMode>,
    /// Score table for the table backend.
    #[arg(long)]
    score_table: Option<PathBuf>,
    #[arg(long, value_enum)]
    classifier: Option<ClassifierKind>,
    /// Sidecar endpoint, `tcp://host:port` or `exec:<command>`.
    #[arg(long, env = ENDPOINT_ENV)]
    sidecar: Option<String>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u8>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    methods: Option<Vec<Method>>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Include connective distributions in prediction files.
    #[arg(long)]
    conn_probs: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Relation counts per split and sense level.
    CorpusStats {
        #[command(flatten)]
        common: Common,
        /// Print JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Train the frequency classifier and save one model per level.
    TrainClassifier {
        #[command(flatten)]
        common: Common,
    },
    /// Connective distributions for every test relation.
    Score {
        #[command(flatten)]
        common: Common,
    },
    /// Pipeline and marginal predictions.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Reuse distributions written by `score`.
        #[arg(long)]
        distributions: Option<PathBuf>,
    },
    /// Metrics, baselines and upper bound per level.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distributions: Option<PathBuf>,
    },
    /// Agreement of top connectives with gold connectives and senses.
    Agreement {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distributions: Option<PathBuf>,
    },
    /// Predicted-versus-gold connective matrix as CSV.
    Confusion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distributions: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Label transitions from pipeline to marginal predictions.
    ShiftReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distributions: Option<PathBuf>,
        /// Reuse a predictions file holding both methods (single level).
        #[arg(long, conflicts_with = "distributions")]
        predictions: Option<PathBuf>,
    },
    /// The full experiment: every artifact above.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded synthetic PDTB-format corpus with a ready config.
    SynthCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn experiment(common: &Common, top_k: Option<usize>) -> Result<Experiment, ExperimentError> {
    let mut config = ExperimentConfig::load(&common.config)?;
    config.apply(Overrides {
        output_dir: common.output_dir.clone(),
        backend: common.backend,
        mode: common.mode,
        score_table: common.score_table.clone(),
        classifier: common.classifier,
        sidecar: common.sidecar.clone(),
        levels: common.levels.clone(),
        methods: common.methods.clone(),
        jobs: common.jobs,
        runs: common.runs,
        seed: common.seed,
        conn_probs: common.conn_probs,
        top_k,
    });
    Experiment::new(config)
}

fn load_distributions(
    exp: &Experiment,
    path: &Option<PathBuf>,
) -> Result<Option<HashMap<String, ConnectiveDistribution>>, ExperimentError> {
    path.as_deref().map(|p| exp.read_distributions(p)).transpose()
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::SynthCorpus { out, seed } => {
            let config = write_synthetic(&out, seed)?;
            announce(&config);
        }
        Command::CorpusStats { common, json } => {
            let exp = experiment(&common, None)?;
            let data = exp.prepare()?;
            let stats = exp.corpus_stats(&data);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                print!("{}", stats.render());
            }
        }
        Command::TrainClassifier { common } => {
            let exp = experiment(&common, None)?;
            if exp.config.classifier.kind != ClassifierKind::Frequency {
                return Err(ExperimentError::Config("only the frequency classifier is trained locally".into()));
            }
            let data = exp.prepare()?;
            for labels in &exp.labels {
                let model = exp.train_frequency(&data, labels)?;
                let path = exp.config.output_dir().join(format!("classifier_level{}.json", labels.level()));
                write_text(&path, &(model.to_json()? + "\n"))?;
                announce(&path);
            }
        }
        Command::Score { common } => {
            let exp = experiment(&common, None)?;
            let data = exp.prepare()?;
            let backend = exp.backend()?;
            for (target, rels) in data.targets() {
                let dists = exp.distributions(backend.as_ref(), &rels)?;
                let path = exp.config.output_dir().join(&target).join("distributions.jsonl");
                write_jsonl(&path, &exp.distribution_records(&rels, &dists))?;
                announce(&path);
            }
        }
        Command::Predict { common, distributions } => {
            let exp = experiment(&common, None)?;
            let data = exp.prepare()?;
            let given = load_distributions(&exp, &distributions)?;
            for (target, rels) in data.targets() {
                let (dists, _) = exp.obtain_distributions(&rels, given.as_ref())?;
                let lookup = rels.iter().map(|r| r.id.as_str()).zip(dists.iter()).collect();
                for labels in &exp.labels {
                    let clf = exp.classifier(&data, labels)?;
                    let set = explicitation::evaluation::EvalSet::new(&rels, labels);
                    let preds = exp.predict(&set, &lookup, clf.as_ref())?;
                    let path = exp
                        .config
                        .output_dir()
                        .join(&target)
                        .join(format!("level{}", labels.level()))
                        .join("predictions.jsonl");
                    write_jsonl(&path, &exp.prediction_records(&preds))?;
                    announce(&path);
                }
            }
        }
        Command::Evaluate { common, distributions } => evaluate(&common, &distributions, false)?,
        Command::Agreement { common, distributions } => evaluate(&common, &distributions, true)?,
        Command::Confusion { common, distributions, top_k } => {
            let exp = experiment(&common, top_k)?;
            let data = exp.prepare()?;
            let given = load_distributions(&exp, &distributions)?;
            for (target, rels) in data.targets() {
                let (dists, _) = exp.obtain_distributions(&rels, given.as_ref())?;
                let path = exp.config.output_dir().join(&target).join("confusion.csv");
                write_text(&path, &exp.confusion_csv(&rels, &dists)?)?;
                announce(&path);
            }
        }
        Command::ShiftReport { common, distributions, predictions } => {
            let exp = experiment(&common, None)?;
            match predictions {
                Some(path) => {
                    let [labels] = exp.labels.as_slice() else {
                        return Err(ExperimentError::Config("--predictions needs exactly one level (--levels)".into()));
                    };
                    let records = read_predictions(&path)?;
                    let pick = |m: Method| -> Vec<(String, String)> {
                        records
                            .iter()
                            .filter(|r| r.method == m)
                            .map(|r| (r.relation_id.clone(), r.label.clone()))
                            .collect()
                    };
                    let report = label_shift_report(&pick(Method::Pipeline), &pick(Method::Marginal), labels)
                        .map_err(|e| ExperimentError::Data(e.to_string()))?;
                    print!("{}", render_shift(&report));
                    let out = exp.config.output_dir().join(format!("shift_level{}.json", labels.level()));
                    write_json(&out, &report)?;
                    announce(&out);
                }
                None => shift_from_scratch(&exp, &distributions)?,
            }
        }
        Command::Run { common } => {
            let exp = experiment(&common, None)?;
            let manifest = exp.run()?;
            let out = exp.config.output_dir();
            for r in &manifest.reports {
                let text = std::fs::read_to_string(out.join(&r.target).join(format!("level{}", r.level)).join("report.txt"))
                    .unwrap_or_default();
                println!("{text}");
            }
            announce(&out.join("manifest.json"));
        }
    }
    Ok(())
}

fn evaluate(common: &Common, distributions: &Option<PathBuf>, agreement_only: bool) -> Result<(), ExperimentError> {
    let exp = experiment(common, None)?;
    let data = exp.prepare()?;
    let given = load_distributions(&exp, distributions)?;
    for (target, rels) in data.targets() {
        let (dists, backend) = exp.obtain_distributions(&rels, given.as_ref())?;
        for labels in &exp.labels {
            let clf = exp.classifier(&data, labels)?;
            let (report, _) = exp.evaluate_level(&target, &rels, &dists, labels, clf.as_ref(), &backend, &[])?;
            let dir = exp.config.output_dir().join(&target).join(format!("level{}", labels.level()));
            let path = if agreement_only {
                println!("{target} level {}", labels.level());
                print!("{}", report.agreement.render());
                let path = dir.join("agreement.json");
                write_json(&path, &report.agreement)?;
                path
            } else {
                print!("{}", render_level_report(&report));
                let path = dir.join("report.json");
                write_json(&path, &report)?;
                path
            };
            announce(&path);
        }
    }
    Ok(())
}

fn shift_from_scratch(exp: &Experiment, distributions: &Option<PathBuf>) -> Result<(), ExperimentError> {
    let data = exp.prepare()?;
    let given = load_distributions(exp, distributions)?;
    for (target, rels) in data.targets() {
        let (dists, _) = exp.obtain_distributions(&rels, given.as_ref())?;
        let lookup = rels.iter().map(|r| r.id.as_str()).zip(dists.iter()).collect();
        for labels in &exp.labels {
            let clf = exp.classifier(&data, labels)?;
            let set = explicitation::evaluation::EvalSet::new(&rels, labels);
            let preds = exp.predict(&set, &lookup, clf.as_ref())?;
            let pipeline: Vec<(String, String)> = preds.iter().map(|(p, _)| (p.relation_id.clone(), p.label.clone())).collect();
            let marginal: Vec<(String, String)> = preds.iter().map(|(_, m)| (m.relation_id.clone(), m.label.clone())).collect();
            let report = label_shift_report(&pipeline, &marginal, labels).map_err(|e| ExperimentError::Data(e.to_string()))?;
            println!("{target} level {}", labels.level());
            print!("{}", render_shift(&report));
            let path = exp
                .config
                .output_dir()
                .join(&target)
                .join(format!("level{}", labels.level()))
                .join("shift.json");
            write_json(&path, &report)?;
            announce(&path);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
