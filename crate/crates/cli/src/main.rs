mod config;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codemia::eval::{make_splits, SplitPlan};
use codemia::pipeline;
use codemia::sample::read_manifest;
use codemia::scoring::{DEFAULT_ALPHA, DEFAULT_K_PERCENT};
use codemia::synthetic::{generate, SyntheticConfig};
use codemia::TrainConfig;

use config::FileConfig;

#[derive(Debug, Parser)]
#[command(
    name = "codemia",
    version,
    about = "Structure-aware membership inference for code language models"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical CPU count).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// TOML file of key = value defaults; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build character weight masks for a manifest.
    Mask {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// External linter diagnostics (NDJSON).
        #[arg(long)]
        lints: Option<PathBuf>,
    },
    /// Compute anomaly, loss and Min-K% scores from token records.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k_percent: Option<f64>,
    },
    /// Train one probe per layer and keep the best layers.
    TrainProbes(TrainArgs),
    /// Add ensemble probe scores and fused scores to a scores file.
    Infer {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write the AUC report and ROC curves.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Report path; `roc_<method>.csv` files go next to it.
        #[arg(long)]
        out: PathBuf,
        /// Restrict evaluation to the inference side of a split plan.
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Draw balanced probe-training and inference sets.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        per_language_n: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Generate a synthetic corpus from real source files.
    Synth {
        /// Manifest of real source files.
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        layers: usize,
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        #[arg(long, default_value_t = 4000)]
        max_chars: usize,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    /// Manifest supplying labels.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Train only on the training side of a split plan.
    #[arg(long)]
    split: Option<PathBuf>,
    /// Per-layer validation AUCs as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    validation_fraction: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] codemia::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_split(path: &Path) -> Result<SplitPlan> {
    let text = std::fs::read_to_string(path).map_err(codemia::Error::from)?;
    serde_json::from_str(&text).map_err(|e| {
        codemia::Error::Schema {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        }
        .into()
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(codemia::Error::from)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(CliError::Usage)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let workers = cli.workers.or(file.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;

    pool.install(|| match cli.command {
        Command::Mask { manifest, out, lints } => {
            let s = pipeline::run_mask(&manifest, lints.as_deref(), &out)?;
            eprintln!("masked {} samples, {} degraded", s.samples, s.degraded);
            Ok(())
        }
        Command::Score { manifest, masks, tokens, out, k_percent } => {
            let k = k_percent.or(file.k_percent).unwrap_or(DEFAULT_K_PERCENT);
            let s = pipeline::run_score(&manifest, &masks, &tokens, &out, k)?;
            eprintln!("scored {} of {} samples, {} without token records", s.scored, s.samples, s.missing);
            Ok(())
        }
        Command::TrainProbes(a) => {
            let defaults = TrainConfig::default();
            let config = TrainConfig {
                hidden_dim: a.hidden.or(file.hidden).unwrap_or(defaults.hidden_dim),
                learning_rate: a.learning_rate.or(file.learning_rate).unwrap_or(defaults.learning_rate),
                epochs: a.epochs.or(file.epochs).unwrap_or(defaults.epochs),
                batch_size: a.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
                seed,
                validation_fraction: a
                    .validation_fraction
                    .or(file.validation_fraction)
                    .unwrap_or(defaults.validation_fraction),
            };
            let ids: Option<HashSet<String>> = match &a.split {
                Some(p) => Some(load_split(p)?.train_ids().map(str::to_owned).collect()),
                None => None,
            };
            let reports = pipeline::run_train(&a.features, &a.manifest, ids.as_ref(), &config, &a.out)?;
            for r in &reports {
                log::info!("layer {}: validation AUC {:.4}", r.layer, r.validation_auc);
            }
            if let Some(path) = &a.report {
                let rows: Vec<_> = reports
                    .iter()
                    .map(|r| serde_json::json!({"layer": r.layer, "validation_auc": r.validation_auc, "final_loss": r.final_loss}))
                    .collect();
                write_json(path, &rows)?;
            }
            eprintln!("trained {} layer probes", reports.len());
            Ok(())
        }
        Command::Infer { features, bundle, scores, out, alpha } => {
            let alpha = alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
            let s = pipeline::run_infer(&features, &bundle, &scores, &out, alpha)?;
            eprintln!("probed {} of {} samples, {} missing features", s.probed, s.samples, s.missing);
            Ok(())
        }
        Command::Eval { scores, manifest, out, split } => {
            let ids: Option<HashSet<String>> = match &split {
                Some(p) => Some(load_split(p)?.inference_ids().map(str::to_owned).collect()),
                None => None,
            };
            let report = pipeline::run_eval(&scores, &manifest, ids.as_ref(), &out)?;
            for (method, r) in &report.methods {
                let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
                eprintln!("{method:>8}: pooled {} macro {}", fmt(r.overall_pooled), fmt(r.overall_macro));
            }
            Ok(())
        }
        Command::Split { manifest, out, per_language_n, train_fraction } => {
            let n = per_language_n
                .or(file.per_language_n)
                .ok_or_else(|| CliError::Usage("--per-language-n is required".into()))?;
            let fraction = train_fraction.or(file.train_fraction).unwrap_or(0.5);
            pipeline::ensure_distinct(&[&manifest], &[&out])?;
            let plan = make_splits(&read_manifest(&manifest)?, seed, n, fraction)?;
            write_json(&out, &plan)
        }
        Command::Synth { sources, out_dir, samples, layers, hidden, max_chars } => {
            let src = read_manifest(&sources)?;
            let config = SyntheticConfig {
                samples,
                seed,
                max_chars,
                layers,
                hidden,
                ..SyntheticConfig::default()
            };
            generate(&src, &config)?.write(&out_dir)?;
            eprintln!("wrote {samples} synthetic samples to {}", out_dir.display());
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
