//! Entanglement detection: train the tiny classifier on a perfect and an
//! entangled colored-shapes generator with identical seeds and settings,
//! audit both, and compare per-factor F statistics.

use serde::{Deserialize, Serialize};

use crate::audit::run_audit;
use crate::error::Result;
use crate::nnet::{eval_accuracy, train, ArchSpec, ModelParams, TrainConfig};
use crate::rng;
use crate::synthgen::{
    build_uniform_balanced, ColoredShapesRenderer, EntanglementConfig, Provenance,
};
use crate::util::float_maybe_inf;

use super::report::BandCheck;

/// Sizes and training hyperparameters for both arms. The embedded train
/// config's seed is ignored; stage seeds derive from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exp3Config {
    pub seed: u64,
    pub train_size: usize,
    pub split_size: usize,
    /// Style→size leakage of the entangled arm (the perfect arm uses 0).
    pub epsilon: f64,
    pub alpha: f64,
    pub train: TrainConfig,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Self {
            seed: 0,
            train_size: 2_000,
            split_size: 1_000,
            epsilon: 0.3,
            alpha: 0.05,
            train: TrainConfig {
                learning_rate: 1e-3,
                batch_size: 64,
                epochs: 15,
                lambda: 0.0,
                inv_pairs_per_batch: 0,
                seed: 0,
            },
        }
    }
}

/// One factor's F under each generator and the shift between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3Row {
    pub factor: String,
    #[serde(with = "float_maybe_inf")]
    pub f_perfect: f64,
    #[serde(with = "float_maybe_inf")]
    pub f_entangled: f64,
    #[serde(with = "float_maybe_inf")]
    pub delta_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3Report {
    pub config: Exp3Config,
    pub rows: Vec<Exp3Row>,
    pub accuracy_perfect: f64,
    pub accuracy_entangled: f64,
}

impl Exp3Report {
    pub fn row(&self, factor: &str) -> Option<&Exp3Row> {
        self.rows.iter().find(|r| r.factor == factor)
    }
}

fn run_arm(
    renderer: &ColoredShapesRenderer,
    cfg: &Exp3Config,
) -> Result<(crate::audit::SensitivityProfile, f64)> {
    // Seeds are shared across arms: identical factor settings, identical
    // initialization and batching. Only the rendered pixels differ.
    let train_ds = build_uniform_balanced(
        renderer,
        cfg.train_size,
        Provenance::BiasedTrain,
        rng::mix(cfg.seed, "exp3_train_data", 0),
        "exp3_train",
    )?;
    let audit_ds = build_uniform_balanced(
        renderer,
        cfg.split_size,
        Provenance::AuditVal,
        rng::mix(cfg.seed, "exp3_audit_data", 0),
        "exp3_audit",
    )?;
    let init = ModelParams::<f32>::init(ArchSpec::tiny(), rng::mix(cfg.seed, "exp3_init", 0))?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = rng::mix(cfg.seed, "exp3_train_seed", 0);
    let model = train(init, &train_ds, None, &train_cfg)?;
    let profile = run_audit(&model, &audit_ds, cfg.alpha)?;
    let accuracy = eval_accuracy(&model, &audit_ds)?;
    Ok((profile, accuracy))
}

pub fn run_exp3(cfg: &Exp3Config) -> Result<Exp3Report> {
    log::info!("exp3: perfect-generator arm");
    let perfect = ColoredShapesRenderer::perfect();
    let (profile_perfect, accuracy_perfect) = run_arm(&perfect, cfg)?;

    log::info!("exp3: entangled-generator arm (epsilon {})", cfg.epsilon);
    let entangled = ColoredShapesRenderer::new(EntanglementConfig::new(cfg.epsilon)?);
    let (profile_entangled, accuracy_entangled) = run_arm(&entangled, cfg)?;

    let rows = profile_perfect
        .factors
        .iter()
        .zip(&profile_entangled.factors)
        .map(|(p, e)| Exp3Row {
            factor: p.factor.clone(),
            f_perfect: p.f,
            f_entangled: e.f,
            delta_f: e.f - p.f,
        })
        .collect();

    Ok(Exp3Report {
        config: cfg.clone(),
        rows,
        accuracy_perfect,
        accuracy_entangled,
    })
}

/// Single-run acceptance bands for `--check`.
pub fn check_exp3(report: &Exp3Report) -> Vec<BandCheck> {
    let style = report.row("style");
    let size = report.row("size");
    vec![
        BandCheck::new(
            "style_sensitivity_rises",
            style.is_some_and(|r| r.delta_f > 0.0),
            format!(
                "dF(style) = {:+.3}",
                style.map_or(f64::NAN, |r| r.delta_f)
            ),
        ),
        BandCheck::new(
            "size_sensitivity_falls",
            size.is_some_and(|r| r.delta_f < 0.0),
            format!("dF(size) = {:+.3}", size.map_or(f64::NAN, |r| r.delta_f)),
        ),
    ]
}
