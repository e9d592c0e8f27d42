//! Subcommand handlers. Input validation happens before any work starts
//! and maps to exit code 2; failures during execution map to exit code 1.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use doelens::audit::run_audit;
use doelens::design::{alias_structure, factor_letter, fractional_factorial, word_name, GeneratorWord};
use doelens::diagnose::{diagnose, GapDiagnosis, TrainHistogram};
use doelens::error::DoeError;
use doelens::experiments::{
    check_exp1, check_exp3, emit_exp1, emit_exp3, print_checks, run_exp1, run_exp3, Exp1Config,
    Exp1Report, Exp3Config, Exp3Report,
};
use doelens::nnet::{
    load_checkpoint, save_checkpoint, train, ArchSpec, ModelParams, TrainConfig,
};
use doelens::prescribe::{
    build_plan, correct, generate_type1, generate_type2_pairs, load_pairs, save_pairs,
    sensitivity_transfer_report, verify_loop, LoopBudgets,
};
use doelens::rng;
use doelens::synthgen::io::{load_dataset, load_histogram, save_dataset};
use doelens::synthgen::{
    build_balanced_splits, build_biased_trainset, build_uniform_balanced, ColoredShapesRenderer,
    Dataset, DspritesRenderer, EntanglementConfig, Provenance, Renderer,
};

use crate::Command;

pub enum CliError {
    Validation(String),
    Runtime(String),
    ChecksFailed,
}

impl From<DoeError> for CliError {
    fn from(e: DoeError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CResult = Result<(), CliError>;

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(validation(format!(
            "{what} not found at '{}'",
            path.display()
        )));
    }
    Ok(())
}

fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_dir() {
        return Err(validation(format!(
            "{what} directory not found at '{}'",
            path.display()
        )));
    }
    Ok(())
}

fn check_unit_interval(value: f64, what: &str) -> Result<(), CliError> {
    if !(value > 0.0 && value < 1.0) {
        return Err(validation(format!("{what} must lie in (0, 1), got {value}")));
    }
    Ok(())
}

fn parse_json_file<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {what} '{}': {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| validation(format!("invalid {what} '{}': {e}", path.display())))
}

/// Schema of `doelens generate --config`.
#[derive(Debug, Deserialize)]
#[serde(tag = "dataset", rename_all = "snake_case", deny_unknown_fields)]
enum GenerateConfig {
    /// Sprite training set with the planted shortcut and coverage hole.
    SpritesBiased { n: usize },
    /// Disjoint balanced audit-validation and final-test splits.
    SpritesBalancedSplits { n_each: usize },
    /// Uniform class-balanced sprite dataset.
    SpritesUniform { n: usize },
    /// Uniform class-balanced colored-shapes dataset.
    ColoredUniform {
        n: usize,
        #[serde(default)]
        epsilon: f64,
    },
    /// Probe set realized from a fractional factorial plan.
    SpritesProbe {
        #[serde(default)]
        generators: Vec<String>,
        #[serde(default = "default_replicates")]
        replicates: usize,
    },
}

fn default_replicates() -> usize {
    1
}

/// Schema of the training config file used by `train`, `correct`, `loop`.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainFileConfig {
    arch: String,
    width_mult: f64,
    learning_rate: f64,
    batch_size: usize,
    epochs: usize,
    lambda: f64,
    inv_pairs_per_batch: usize,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        Self {
            arch: "auto".into(),
            width_mult: 0.5,
            learning_rate: 3e-4,
            batch_size: 256,
            epochs: 15,
            lambda: 0.5,
            inv_pairs_per_batch: 32,
        }
    }
}

impl TrainFileConfig {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            lambda: self.lambda,
            inv_pairs_per_batch: self.inv_pairs_per_batch,
            seed,
        }
    }

    fn arch_for(&self, data: &Dataset) -> Result<ArchSpec, CliError> {
        let channels = data.samples().first().map_or(1, |s| s.channels);
        match self.arch.as_str() {
            "conv4" => Ok(ArchSpec::conv4(self.width_mult)),
            "tiny" => Ok(ArchSpec::tiny()),
            "auto" => Ok(if channels == 3 {
                ArchSpec::tiny()
            } else {
                ArchSpec::conv4(self.width_mult)
            }),
            other => Err(validation(format!(
                "unknown arch '{other}' (expected auto, conv4, or tiny)"
            ))),
        }
    }
}

fn renderer_from_flag(generator: &str, epsilon: f64) -> Result<Box<dyn Renderer>, CliError> {
    match generator {
        "sprites" => Ok(Box::new(DspritesRenderer)),
        "colored" => {
            let cfg = EntanglementConfig::new(epsilon)
                .map_err(|e| validation(e.to_string()))?;
            Ok(Box::new(ColoredShapesRenderer::new(cfg)))
        }
        other => Err(validation(format!(
            "unknown generator '{other}' (expected sprites or colored)"
        ))),
    }
}

fn load_train_file_config(path: Option<&PathBuf>) -> Result<TrainFileConfig, CliError> {
    match path {
        Some(p) => {
            require_file(p, "training config")?;
            parse_json_file(p, "training config")
        }
        None => Ok(TrainFileConfig::default()),
    }
}

pub fn run(cmd: Command) -> CResult {
    match cmd {
        Command::Design {
            seed: _,
            k,
            generators,
            out,
        } => cmd_design(k, &generators, &out),
        Command::Generate { seed, config, out } => cmd_generate(seed.seed, &config, &out),
        Command::Train {
            seed,
            data,
            config,
            out,
        } => cmd_train(seed.seed, &data, config.as_ref(), &out),
        Command::Audit {
            seed: _,
            model,
            data,
            alpha,
            out,
        } => cmd_audit(&model, &data, alpha, &out),
        Command::Diagnose {
            seed: _,
            model,
            data,
            train_hist,
            alpha,
            delta,
            out,
        } => cmd_diagnose(&model, &data, &train_hist, alpha, delta, &out),
        Command::Prescribe {
            seed,
            diag,
            train_hist,
            generator,
            epsilon,
            type1_budget,
            type2_pairs,
            out,
        } => cmd_prescribe(
            seed.seed,
            &diag,
            &train_hist,
            &generator,
            epsilon,
            type1_budget,
            type2_pairs,
            &out,
        ),
        Command::Correct {
            seed,
            model,
            data,
            type1,
            pairs,
            config,
            cold_start,
            out,
        } => cmd_correct(
            seed.seed,
            &model,
            &data,
            type1.as_ref(),
            pairs.as_ref(),
            config.as_ref(),
            cold_start,
            &out,
        ),
        Command::Loop {
            seed,
            model,
            data,
            audit_val,
            test,
            generator,
            epsilon,
            max_rounds,
            type1_budget,
            type2_pairs,
            alpha,
            delta,
            config,
            out,
        } => cmd_loop(
            seed.seed,
            &model,
            &data,
            &audit_val,
            &test,
            &generator,
            epsilon,
            max_rounds,
            LoopBudgets {
                type1_samples: type1_budget,
                type2_pairs,
            },
            alpha,
            delta,
            config.as_ref(),
            &out,
        ),
        Command::Exp1 {
            seed,
            config,
            paper_scale,
            check,
            out,
        } => cmd_exp1(seed.seed, config.as_ref(), paper_scale, check, &out),
        Command::Exp3 {
            seed,
            config,
            check,
            out,
        } => cmd_exp3(seed.seed, config.as_ref(), check, &out),
        Command::Report {
            seed: _,
            input,
            out,
        } => cmd_report(&input, &out),
    }
}

fn cmd_design(k: usize, generators: &str, out: &Path) -> CResult {
    if k == 0 || k > doelens::design::MAX_FACTORS {
        return Err(validation(format!(
            "--k must lie in 1..={}, got {k}",
            doelens::design::MAX_FACTORS
        )));
    }
    let words: Vec<GeneratorWord> = generators
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| GeneratorWord::parse(s.trim()).map_err(|e| validation(e.to_string())))
        .collect::<Result<_, _>>()?;
    let plan =
        fractional_factorial(k, &words).map_err(|e| validation(e.to_string()))?;
    let groups = alias_structure(&plan);

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut writer = csv::Writer::from_path(out).map_err(DoeError::from)?;
    let header: Vec<String> = (0..plan.k).map(|i| factor_letter(i).to_string()).collect();
    writer.write_record(&header).map_err(DoeError::from)?;
    for row in &plan.runs {
        let record: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        writer.write_record(&record).map_err(DoeError::from)?;
    }
    writer.flush()?;

    let sidecar = out.with_extension("json");
    let payload = serde_json::json!({
        "k": plan.k,
        "p": plan.p,
        "runs": plan.run_count(),
        "generators": plan.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "resolution": plan.resolution,
        "alias_groups": groups
            .iter()
            .map(|g| g.iter().map(|w| word_name(w)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    fs::write(&sidecar, format!("{}\n", serde_json::to_string_pretty(&payload)?))?;
    log::info!(
        "design: {} runs, resolution {:?}, wrote {} and {}",
        plan.run_count(),
        plan.resolution,
        out.display(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_generate(seed: u64, config: &Path, out: &Path) -> CResult {
    require_file(config, "generation config")?;
    let cfg: GenerateConfig = parse_json_file(config, "generation config")?;
    match cfg {
        GenerateConfig::SpritesBiased { n } => {
            let ds = build_biased_trainset(n, seed)?;
            save_dataset(&ds, out)?;
        }
        GenerateConfig::SpritesBalancedSplits { n_each } => {
            let (audit_val, final_test) =
                build_balanced_splits(&DspritesRenderer, n_each, seed)?;
            save_dataset(&audit_val, &out.join("audit_val"))?;
            save_dataset(&final_test, &out.join("final_test"))?;
        }
        GenerateConfig::SpritesUniform { n } => {
            let ds = build_uniform_balanced(
                &DspritesRenderer,
                n,
                Provenance::Probe,
                seed,
                "cli_uniform",
            )?;
            save_dataset(&ds, out)?;
        }
        GenerateConfig::ColoredUniform { n, epsilon } => {
            let cfg = EntanglementConfig::new(epsilon).map_err(|e| validation(e.to_string()))?;
            let renderer = ColoredShapesRenderer::new(cfg);
            let ds =
                build_uniform_balanced(&renderer, n, Provenance::Probe, seed, "cli_uniform")?;
            save_dataset(&ds, out)?;
        }
        GenerateConfig::SpritesProbe {
            generators,
            replicates,
        } => {
            let words: Vec<GeneratorWord> = generators
                .iter()
                .map(|s| GeneratorWord::parse(s).map_err(|e| validation(e.to_string())))
                .collect::<Result<_, _>>()?;
            let space = doelens::synthgen::dsprites_space();
            let plan = fractional_factorial(space.len(), &words)
                .map_err(|e| validation(e.to_string()))?;
            let mut stream = rng::stream(seed, "cli_probe", 0);
            let settings = doelens::design::realize(&plan, space, replicates, &mut stream)?;
            let ds = Dataset::render_from_settings(
                &DspritesRenderer,
                &settings,
                Provenance::Probe,
                Some(seed),
            )?;
            save_dataset(&ds, out)?;
        }
    }
    log::info!("generate: wrote {}", out.display());
    Ok(())
}

fn cmd_train(seed: u64, data: &Path, config: Option<&PathBuf>, out: &Path) -> CResult {
    require_dir(data, "dataset")?;
    let file_cfg = load_train_file_config(config)?;
    let dataset = load_dataset(data)?;
    let arch = file_cfg.arch_for(&dataset)?;
    let train_cfg = file_cfg.train_config(rng::mix(seed, "cli_train", 0));
    let init = ModelParams::<f32>::init(arch, rng::mix(seed, "cli_init", 0))?;
    let model = train(init, &dataset, None, &train_cfg)?;
    save_checkpoint(&model, Some(&train_cfg), out)?;
    log::info!("train: wrote {}", out.display());
    Ok(())
}

fn cmd_audit(model: &Path, data: &Path, alpha: f64, out: &Path) -> CResult {
    require_file(model, "checkpoint")?;
    require_dir(data, "dataset")?;
    check_unit_interval(alpha, "--alpha")?;
    let (params, _) = load_checkpoint(model)?;
    let dataset = load_dataset(data)?;
    let profile = run_audit(&params, &dataset, alpha)?;
    print!("{}", profile.text_table());
    fs::write(out, format!("{}\n", serde_json::to_string_pretty(&profile)?))?;
    log::info!("audit: wrote {}", out.display());
    Ok(())
}

fn cmd_diagnose(
    model: &Path,
    data: &Path,
    train_hist: &Path,
    alpha: f64,
    delta: f64,
    out: &Path,
) -> CResult {
    require_file(model, "checkpoint")?;
    require_dir(data, "dataset")?;
    require_file(train_hist, "training histogram")?;
    check_unit_interval(alpha, "--alpha")?;
    if delta < 0.0 || delta > 1.0 {
        return Err(validation(format!("--delta must lie in [0,1], got {delta}")));
    }
    let (params, _) = load_checkpoint(model)?;
    let dataset = load_dataset(data)?;
    let hist = TrainHistogram::from_counts(load_histogram(train_hist)?);
    let profile = run_audit(&params, &dataset, alpha)?;
    let diag = diagnose(&params, &dataset, &profile, &hist, delta)?;
    for f in &diag.factors {
        log::info!("diagnose: {} -> {}", f.factor, f.class);
    }
    fs::write(out, format!("{}\n", serde_json::to_string_pretty(&diag)?))?;
    log::info!("diagnose: wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_prescribe(
    seed: u64,
    diag_path: &Path,
    train_hist: &Path,
    generator: &str,
    epsilon: f64,
    type1_budget: usize,
    type2_pairs: usize,
    out: &Path,
) -> CResult {
    require_file(diag_path, "diagnosis")?;
    require_file(train_hist, "training histogram")?;
    let renderer = renderer_from_flag(generator, epsilon)?;
    let diag: GapDiagnosis = parse_json_file(diag_path, "diagnosis")?;
    let hist = TrainHistogram::from_counts(load_histogram(train_hist)?);
    let space = renderer.space().clone();
    let plan = build_plan(&diag, &space, type1_budget, type2_pairs)?;

    fs::create_dir_all(out)?;
    fs::write(
        out.join("plan.json"),
        format!("{}\n", serde_json::to_string_pretty(&plan)?),
    )?;
    if plan.total_type1_samples() > 0 {
        let ds = generate_type1(&plan, renderer.as_ref(), &hist, rng::mix(seed, "cli_type1", 0))?;
        save_dataset(&ds, &out.join("type1"))?;
    }
    if plan.total_pairs() > 0 {
        let pairs =
            generate_type2_pairs(&plan, renderer.as_ref(), rng::mix(seed, "cli_type2", 0))?;
        save_pairs(&pairs, &space, &out.join("pairs"))?;
    }
    log::info!(
        "prescribe: {} diversity samples, {} pairs -> {}",
        plan.total_type1_samples(),
        plan.total_pairs(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_correct(
    seed: u64,
    model: &Path,
    data: &Path,
    type1: Option<&PathBuf>,
    pairs: Option<&PathBuf>,
    config: Option<&PathBuf>,
    cold_start: bool,
    out: &Path,
) -> CResult {
    require_file(model, "checkpoint")?;
    require_dir(data, "dataset")?;
    if let Some(p) = type1 {
        require_dir(p, "Type I dataset")?;
    }
    if let Some(p) = pairs {
        require_dir(p, "pair dataset")?;
    }
    let (loaded, snapshot) = load_checkpoint(model)?;
    let real = load_dataset(data)?;
    let type1_ds = type1.map(|p| load_dataset(p)).transpose()?;
    let pair_list = pairs.map(|p| load_pairs(p)).transpose()?;

    let file_cfg = match config {
        Some(_) => Some(load_train_file_config(config)?),
        None => None,
    };
    let mut train_cfg = match (&file_cfg, snapshot) {
        (Some(fc), _) => fc.train_config(0),
        (None, Some(snap)) => snap,
        (None, None) => TrainConfig::default(),
    };
    train_cfg.seed = rng::mix(seed, "cli_correct", 0);

    let start = if cold_start {
        ModelParams::<f32>::init(loaded.arch.clone(), rng::mix(seed, "cli_cold_init", 0))?
    } else {
        loaded
    };
    let corrected = correct(
        start,
        &real,
        type1_ds.as_ref(),
        pair_list.as_deref(),
        &train_cfg,
    )?;
    save_checkpoint(&corrected, Some(&train_cfg), out)?;
    log::info!("correct: wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_loop(
    seed: u64,
    model: &Path,
    data: &Path,
    audit_val: &Path,
    test: &Path,
    generator: &str,
    epsilon: f64,
    max_rounds: usize,
    budgets: LoopBudgets,
    alpha: f64,
    delta: f64,
    config: Option<&PathBuf>,
    out: &Path,
) -> CResult {
    require_file(model, "checkpoint")?;
    require_dir(data, "dataset")?;
    require_dir(audit_val, "audit-validation dataset")?;
    require_dir(test, "test dataset")?;
    check_unit_interval(alpha, "--alpha")?;
    if max_rounds == 0 {
        return Err(validation("--max-rounds must be >= 1"));
    }
    let renderer = renderer_from_flag(generator, epsilon)?;
    let (params, snapshot) = load_checkpoint(model)?;
    let real = load_dataset(data)?;
    let audit_ds = load_dataset(audit_val)?;
    let test_ds = load_dataset(test)?;

    let file_cfg = match config {
        Some(_) => Some(load_train_file_config(config)?),
        None => None,
    };
    let mut train_cfg = match (&file_cfg, snapshot) {
        (Some(fc), _) => fc.train_config(0),
        (None, Some(snap)) => snap,
        (None, None) => TrainConfig::default(),
    };
    train_cfg.seed = rng::mix(seed, "cli_loop", 0);

    let (final_model, history) = verify_loop(
        params,
        &real,
        &audit_ds,
        &test_ds,
        renderer.as_ref(),
        budgets,
        max_rounds,
        &train_cfg,
        alpha,
        delta,
    )?;

    fs::create_dir_all(out)?;
    save_checkpoint(&final_model, Some(&train_cfg), &out.join("model.ckpt"))?;
    fs::write(
        out.join("history.json"),
        format!("{}\n", serde_json::to_string_pretty(&history)?),
    )?;
    if history.rounds.len() >= 2 {
        let transfer = sensitivity_transfer_report(&history)?;
        fs::write(out.join("transfer.txt"), transfer.text_table())?;
    }
    log::info!(
        "loop: {} round(s), final heldout accuracy {:.3}",
        history.rounds.len(),
        history.rounds.last().map_or(0.0, |r| r.heldout_accuracy)
    );
    Ok(())
}

fn cmd_exp1(
    seed: u64,
    config: Option<&PathBuf>,
    paper_scale: bool,
    check: bool,
    out: &Path,
) -> CResult {
    let mut cfg: Exp1Config = match config {
        Some(p) => {
            require_file(p, "exp1 config")?;
            parse_json_file(p, "exp1 config")?
        }
        None => Exp1Config::default(),
    };
    if paper_scale {
        cfg = cfg.paper_scale();
    }
    cfg.seed = seed;
    let report = run_exp1(&cfg)?;
    emit_exp1(&report, out)?;
    log::info!("exp1: wrote reports to {}", out.display());
    if check && !print_checks(&check_exp1(&report)) {
        return Err(CliError::ChecksFailed);
    }
    Ok(())
}

fn cmd_exp3(seed: u64, config: Option<&PathBuf>, check: bool, out: &Path) -> CResult {
    let mut cfg: Exp3Config = match config {
        Some(p) => {
            require_file(p, "exp3 config")?;
            parse_json_file(p, "exp3 config")?
        }
        None => Exp3Config::default(),
    };
    cfg.seed = seed;
    let report = run_exp3(&cfg)?;
    emit_exp3(&report, out)?;
    log::info!("exp3: wrote reports to {}", out.display());
    if check && !print_checks(&check_exp3(&report)) {
        return Err(CliError::ChecksFailed);
    }
    Ok(())
}

fn cmd_report(input: &Path, out: &Path) -> CResult {
    require_file(input, "report")?;
    let text = fs::read_to_string(input)?;
    if let Ok(report) = serde_json::from_str::<Exp1Report>(&text) {
        emit_exp1(&report, out)?;
    } else if let Ok(report) = serde_json::from_str::<Exp3Report>(&text) {
        emit_exp3(&report, out)?;
    } else {
        return Err(validation(format!(
            "'{}' is neither an exp1 nor an exp3 report",
            input.display()
        )));
    }
    log::info!("report: re-emitted tables to {}", out.display());
    Ok(())
}
