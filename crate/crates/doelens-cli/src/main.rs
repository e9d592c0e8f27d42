//! `doelens`: command-line entry point for the audit pipeline.
//!
//! One stage per invocation. Logs go to standard error; artifacts go to
//! the configured paths. Exit codes: 0 success, 2 validation error,
//! 1 runtime failure, 3 acceptance-band violation under `--check`.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "doelens",
    version,
    about = "Designed-experiment audits for image classifiers: factorial probes, ANOVA \
             sensitivity profiles, gap diagnosis, targeted correction"
)]
struct Cli {
    /// Worker threads for data-parallel stages (defaults to the hardware
    /// count).
    #[arg(long, global = true, env = "DOELENS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Every subcommand requires an explicit seed; there is no wall-clock
/// default, so reruns are reproducible by construction.
#[derive(Args, Debug, Clone, Copy)]
struct SeedArg {
    /// Master seed for all randomness in this invocation.
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a full or fractional factorial design.
    Design {
        #[command(flatten)]
        seed: SeedArg,
        /// Number of factors (1..=20).
        #[arg(long)]
        k: usize,
        /// Comma-separated generator words, e.g. "D=AB,E=AC"; empty for a
        /// full factorial.
        #[arg(long, default_value = "")]
        generators: String,
        /// Output CSV path; a sidecar .json carries generators,
        /// resolution, and alias groups.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a dataset directory from a generation config.
    Generate {
        #[command(flatten)]
        seed: SeedArg,
        /// Generation config (JSON; see README for the schema).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a dataset directory.
    Train {
        #[command(flatten)]
        seed: SeedArg,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Training config (JSON; defaults: conv4 at width 0.5, lr 3e-4,
        /// batch 256, 15 epochs, lambda 0.5, 32 pairs per batch).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// ANOVA sensitivity audit of a checkpoint on a dataset.
    Audit {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Family-wise significance level for the Holm correction.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Profile JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Coverage + shortcut tests and the gap classification.
    Diagnose {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        model: PathBuf,
        /// Audit-validation dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Training-level histogram JSON (hist.json of the training set).
        #[arg(long)]
        train_hist: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Stratified accuracy drop that counts as a coverage failure.
        #[arg(long, default_value_t = 0.10)]
        delta: f64,
        /// Diagnosis JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a diagnosis into targeted synthetic data.
    Prescribe {
        #[command(flatten)]
        seed: SeedArg,
        /// Diagnosis JSON (from `doelens diagnose`).
        #[arg(long)]
        diag: PathBuf,
        /// Training-level histogram JSON for marginal sampling.
        #[arg(long)]
        train_hist: PathBuf,
        /// Generator family: "sprites" or "colored".
        #[arg(long, default_value = "sprites")]
        generator: String,
        /// Style leakage for the colored generator.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 2000)]
        type1_budget: usize,
        #[arg(long, default_value_t = 500)]
        type2_pairs: usize,
        /// Output directory (plan.json, type1/, pairs/).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune a checkpoint on real + prescribed data.
    Correct {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        model: PathBuf,
        /// Real training dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Type I correction dataset directory.
        #[arg(long)]
        type1: Option<PathBuf>,
        /// Counterfactual pair directory.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Training config JSON override.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reinitialize instead of warm-starting (ablation).
        #[arg(long)]
        cold_start: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit → diagnose → prescribe → correct until clean or round limit.
    Loop {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        model: PathBuf,
        /// Real training dataset directory.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        audit_val: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, default_value = "sprites")]
        generator: String,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 3)]
        max_rounds: usize,
        #[arg(long, default_value_t = 2000)]
        type1_budget: usize,
        #[arg(long, default_value_t = 500)]
        type2_pairs: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.10)]
        delta: f64,
        /// Training config JSON for the correction steps.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (history.json, transfer.txt, model.ckpt).
        #[arg(long)]
        out: PathBuf,
    },
    /// Planted-bias diagnosis and correction experiment.
    Exp1 {
        #[command(flatten)]
        seed: SeedArg,
        /// Experiment config JSON (defaults are the desk-scale sizes).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restore full-size settings (30k train / 5k splits / width 1).
        #[arg(long)]
        paper_scale: bool,
        /// Verify acceptance bands; exit 3 on violation.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generator entanglement detection experiment.
    Exp3 {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit CSV and text tables from a stored report JSON.
    Report {
        #[command(flatten)]
        seed: SeedArg,
        /// exp1 or exp3 report JSON.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    doelens::exec::set_threads(cli.threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }));
    let code = match commands::run(cli.command) {
        Ok(()) => 0,
        Err(commands::CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(commands::CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(commands::CliError::ChecksFailed) => {
            eprintln!("error: acceptance bands violated");
            3
        }
    };
    std::process::exit(code);
}
