//! Command-line front end and the on-disk model format.
//!
//! Exit codes: 0 success, 1 domain failure (divergence, failed check,
//! unwritable output), 2 usage or configuration error. Diagnostics go to
//! stderr; JSON reports go to `--out` or stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{
    explain, grad_check, run_case, train, CaseId, CaseOutcome, ExperimentConfig, ImportanceEntry,
    ImportanceReport, DEFAULT_SEEDS,
};
use crate::network::{ExpDnnParams, NetworkConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "expdnn",
    version,
    about = "Train explainable deep networks and rank their inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a network from a JSON config and save the model.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the trained model.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the importance report of a saved model.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the bundled cases over a list of seeds.
    Reproduce {
        case_id: String,
        /// Comma-separated seeds; defaults to 0..9.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare backpropagated gradients with central finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
    },
    /// List the bundled case ids.
    ListCases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub final_loss: f64,
    pub dataset: String,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub network: NetworkConfig,
    pub params: ExpDnnParams,
    pub metadata: TrainingMetadata,
}

/// The JSON importance report written by `train` and `explain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub final_loss: f64,
    pub seed: u64,
    pub entries: Vec<ImportanceEntry>,
}

impl ReportDocument {
    pub fn new(final_loss: f64, seed: u64, report: ImportanceReport) -> Self {
        Self {
            final_loss,
            seed,
            entries: report.entries,
        }
    }
}

pub fn save_model(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    write_file(path, &to_json(artifact))
}

pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    let text = read_file(path)?;
    let json_err = |source| Error::Json {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Config(format!("{} has no format_version", path.display())))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::IncompatibleVersion {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let artifact: ModelArtifact = serde_json::from_value(value).map_err(json_err)?;
    artifact.network.validate()?;
    artifact.params.check_shapes(&artifact.network)?;
    if artifact.metadata.feature_names.len() != artifact.network.n_inputs {
        return Err(Error::Config(format!(
            "{} lists {} feature names for {} inputs",
            path.display(),
            artifact.metadata.feature_names.len(),
            artifact.network.n_inputs
        )));
    }
    Ok(artifact)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = read_file(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    config.validate()?;
    Ok(config)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Reals use shortest round-trip form.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

enum Failure {
    /// Exit 1.
    Domain(String),
    /// Exit 2.
    Usage(String),
}

impl Failure {
    fn usage(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }

    fn domain(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

/// Runs one command. `args` excludes the program name.
pub fn dispatch<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv =
        std::iter::once(std::ffi::OsString::from("expdnn")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => write_file(path, text).map_err(Failure::domain),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Domain(format!("writing to stdout: {e}")))
        }
    }
}

fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Train { config, seed, out } => cmd_train(&config, seed, &out),
        Command::Explain { model, out } => {
            let artifact = load_model(&model).map_err(Failure::usage)?;
            let report = explain(&artifact.params, &artifact.metadata.feature_names)
                .map_err(Failure::usage)?;
            let doc =
                ReportDocument::new(artifact.metadata.final_loss, artifact.metadata.seed, report);
            emit(out.as_deref(), &to_json(&doc))
        }
        Command::Reproduce {
            case_id,
            seeds,
            out,
        } => {
            let case: CaseId = case_id.parse().map_err(Failure::usage)?;
            let seeds = seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
            if seeds.is_empty() {
                return Err(Failure::Usage("--seeds must name at least one seed".into()));
            }
            eprintln!(
                "running {case} over {} seed(s): {}",
                seeds.len(),
                case.summary()
            );
            let outcome = run_case(case, &seeds).map_err(Failure::domain)?;
            summarize(&outcome);
            emit(out.as_deref(), &to_json(&outcome))?;
            if outcome.pass {
                Ok(())
            } else {
                Err(Failure::Domain(format!(
                    "{case} did not meet its acceptance thresholds"
                )))
            }
        }
        Command::Gradcheck {
            config,
            tolerance,
            step,
        } => {
            if !(step > 0.0) || !(tolerance >= 0.0) {
                return Err(Failure::Usage(
                    "--step must be positive and --tolerance non-negative".into(),
                ));
            }
            let cfg = load_config(&config).map_err(Failure::usage)?;
            let base = config.parent();
            let raw = cfg.load_dataset(base).map_err(Failure::usage)?;
            let report = grad_check(&cfg, &raw, step, tolerance).map_err(Failure::usage)?;
            eprintln!(
                "max relative error: {:e} at {} over {} parameters (tolerance {:e})",
                report.max_relative_error, report.worst_parameter, report.num_params, tolerance
            );
            if report.passed {
                eprintln!("gradient check passed");
                Ok(())
            } else {
                Err(Failure::Domain(format!(
                    "gradient check failed at {}: analytic {:e}, numeric {:e}",
                    report.worst_parameter, report.analytic, report.numeric
                )))
            }
        }
        Command::ListCases => {
            let text: String = CaseId::ALL
                .iter()
                .map(|c| format!("{}\t{}\n", c.id(), c.summary()))
                .collect();
            emit(None, &text)
        }
    }
}

fn cmd_train(
    config_path: &Path,
    seed: Option<u64>,
    out: &Path,
) -> std::result::Result<(), Failure> {
    let mut cfg = load_config(config_path).map_err(Failure::usage)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let raw = cfg
        .load_dataset(config_path.parent())
        .map_err(Failure::usage)?;
    cfg.prepare(&raw).map_err(Failure::usage)?;
    eprintln!("training for {} epochs (seed {})", cfg.epochs, cfg.seed);
    let result = train(&cfg, &raw).map_err(Failure::domain)?;
    for (epoch, loss) in &result.loss_history {
        if *epoch == cfg.epochs || epoch % (cfg.loss_log_stride * 10) == 0 {
            eprintln!("epoch {epoch:>7}  loss {loss:.6e}");
        }
    }
    let artifact = ModelArtifact {
        format_version: MODEL_FORMAT_VERSION,
        network: cfg.network.clone(),
        params: result.params.clone(),
        metadata: TrainingMetadata {
            seed: cfg.seed,
            epochs: cfg.epochs,
            final_loss: result.final_loss,
            dataset: cfg.dataset.describe(),
            feature_names: result.feature_names.clone(),
        },
    };
    save_model(&artifact, out).map_err(Failure::domain)?;
    eprintln!("model written to {}", out.display());
    let report = explain(&result.params, &result.feature_names).map_err(Failure::domain)?;
    emit(
        None,
        &to_json(&ReportDocument::new(result.final_loss, cfg.seed, report)),
    )
}

fn summarize(outcome: &CaseOutcome) {
    for run in &outcome.runs {
        let ranking: Vec<String> = run
            .report
            .entries
            .iter()
            .map(|e| format!("{}={:.4}", e.feature, e.weight))
            .collect();
        eprintln!(
            "  seed {:>3}  loss {:.3e}  {}",
            run.seed,
            run.final_loss,
            ranking.join(" ")
        );
    }
    for c in &outcome.checks {
        let gate = match c.threshold {
            Some(t) => format!(">= {t}"),
            None => "info".to_string(),
        };
        eprintln!(
            "  [{}] {}: {:.2} ({gate})  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.fraction_satisfied,
            c.description
        );
    }
}
