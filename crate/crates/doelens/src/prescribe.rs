//! Targeted prescription: diversity data for Type I gaps, counterfactual
//! pairs for Type II gaps, correction training, and the audit→correct
//! verification loop.

use serde::{Deserialize, Serialize};

use crate::audit::{run_audit, SensitivityProfile};
use crate::diagnose::{diagnose, GapDiagnosis, TrainHistogram};
use crate::error::{DoeError, Result};
use crate::exec;
use crate::factor_space::{two_level_projection, FactorSetting, FactorSpace};
use crate::nnet::{
    eval_accuracy, images_to_tensor, train, ModelParams, PairTensors, TrainConfig,
};
use crate::rng;
use crate::synthgen::{Dataset, LabeledImage, Provenance, Renderer};
use crate::util::{float_maybe_inf, sig4};

use rand::Rng;

/// Sample budget for one Type I factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Type1Prescription {
    pub factor_index: usize,
    pub factor: String,
    /// Deficient levels the new data must cover (subset of the factor's
    /// underrepresented levels).
    pub target_levels: Vec<usize>,
    pub budget: usize,
}

/// Pair budget for one Type II factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Type2Prescription {
    pub factor_index: usize,
    pub factor: String,
    pub pair_budget: usize,
}

/// What to generate for each diagnosed gap. Budgets may be edited before
/// generation when a manual override is wanted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrescriptionPlan {
    pub type1: Vec<Type1Prescription>,
    pub type2: Vec<Type2Prescription>,
}

impl PrescriptionPlan {
    pub fn total_type1_samples(&self) -> usize {
        self.type1.iter().map(|t| t.budget).sum()
    }

    pub fn total_pairs(&self) -> usize {
        self.type2.iter().map(|t| t.pair_budget).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_type1_samples() == 0 && self.total_pairs() == 0
    }
}

/// Splits the two budgets evenly across the factors of each gap type
/// (earlier factors absorb the remainder). An un-gapped diagnosis yields
/// an empty plan.
pub fn build_plan(
    diag: &GapDiagnosis,
    space: &FactorSpace,
    type1_budget: usize,
    type2_pair_budget: usize,
) -> Result<PrescriptionPlan> {
    if diag.factors.len() != space.len() {
        return Err(DoeError::DimensionMismatch(
            "diagnosis does not match the factor space".into(),
        ));
    }
    let split = |total: usize, n: usize, i: usize| -> usize {
        if n == 0 {
            0
        } else {
            total / n + usize::from(i < total % n)
        }
    };

    let t1: Vec<&crate::diagnose::FactorDiagnosis> = diag.type1_factors();
    let type1 = t1
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let factor_index = space
                .index_of(&f.factor)
                .expect("diagnosis factors come from the space");
            Type1Prescription {
                factor_index,
                factor: f.factor.clone(),
                target_levels: f.underrepresented_levels.clone(),
                budget: split(type1_budget, t1.len(), i),
            }
        })
        .collect();

    let t2: Vec<&crate::diagnose::FactorDiagnosis> = diag.type2_factors();
    let type2 = t2
        .iter()
        .enumerate()
        .map(|(i, f)| Type2Prescription {
            factor_index: space.index_of(&f.factor).expect("factor exists"),
            factor: f.factor.clone(),
            pair_budget: split(type2_pair_budget, t2.len(), i),
        })
        .collect();

    Ok(PrescriptionPlan { type1, type2 })
}

fn weighted_level<R: Rng>(counts: &[u64], rng: &mut R) -> usize {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return rng.random_range(0..counts.len());
    }
    let mut draw = rng.random_range(0..total);
    for (level, &c) in counts.iter().enumerate() {
        if draw < c {
            return level;
        }
        draw -= c;
    }
    counts.len() - 1
}

/// Diversity data for Type I factors: the targeted factor is uniform over
/// its deficient levels; every other factor follows the empirical training
/// marginal, which deliberately breaks any planted joint correlation.
pub fn generate_type1(
    plan: &PrescriptionPlan,
    renderer: &dyn Renderer,
    train_hist: &TrainHistogram,
    master_seed: u64,
) -> Result<Dataset> {
    if plan.total_type1_samples() == 0 {
        return Err(DoeError::EmptyInput("plan has no Type I budget".into()));
    }
    let space = renderer.space().clone();
    for t in &plan.type1 {
        if t.target_levels.is_empty() && t.budget > 0 {
            return Err(DoeError::EmptyInput(format!(
                "factor '{}' has no deficient levels to target",
                t.factor
            )));
        }
    }
    // Flatten (prescription, sample) into one index range for parallelism.
    let mut owners: Vec<usize> = Vec::with_capacity(plan.total_type1_samples());
    for (idx, t) in plan.type1.iter().enumerate() {
        owners.extend(std::iter::repeat(idx).take(t.budget));
    }

    let rendered: Vec<Result<LabeledImage>> = exec::indexed_map(owners.len(), |i| {
        let t = &plan.type1[owners[i]];
        let mut rng = rng::stream(master_seed, "type1", i as u64);
        let values: Vec<usize> = space
            .factors()
            .iter()
            .enumerate()
            .map(|(j, _)| {
                if j == t.factor_index {
                    t.target_levels[rng.random_range(0..t.target_levels.len())]
                } else {
                    weighted_level(&train_hist.counts[j], &mut rng)
                }
            })
            .collect();
        renderer.render(&FactorSetting::new(values))
    });
    let mut samples = Vec::with_capacity(rendered.len());
    for r in rendered {
        samples.push(r?);
    }
    Dataset::new(
        space,
        samples,
        Provenance::Type1Correction,
        Some(master_seed),
    )
}

/// Two images identical in every factor except one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterfactualPair {
    pub image_a: LabeledImage,
    pub image_b: LabeledImage,
    pub varied_factor: usize,
}

impl CounterfactualPair {
    /// The construction invariant: settings equal except at the varied
    /// factor, labels equal.
    pub fn holds_invariant(&self) -> bool {
        let a = &self.image_a.setting.values;
        let b = &self.image_b.setting.values;
        a.len() == b.len()
            && self.image_a.label == self.image_b.label
            && a.iter()
                .zip(b)
                .enumerate()
                .all(|(j, (x, y))| (j == self.varied_factor) != (x == y))
    }
}

/// Matched counterfactual pairs for Type II factors. The varied factor
/// spans its low/high quartile sets when it has at least four levels,
/// maximizing nuisance contrast; otherwise two distinct uniform levels.
pub fn generate_type2_pairs(
    plan: &PrescriptionPlan,
    renderer: &dyn Renderer,
    master_seed: u64,
) -> Result<Vec<CounterfactualPair>> {
    if plan.total_pairs() == 0 {
        return Err(DoeError::EmptyInput("plan has no Type II budget".into()));
    }
    let space = renderer.space().clone();
    for t in &plan.type2 {
        if space.factor(t.factor_index)?.level_count < 2 {
            return Err(DoeError::InvalidConfig(format!(
                "factor '{}' cannot vary",
                t.factor
            )));
        }
    }
    let mut owners: Vec<usize> = Vec::with_capacity(plan.total_pairs());
    for (idx, t) in plan.type2.iter().enumerate() {
        owners.extend(std::iter::repeat(idx).take(t.pair_budget));
    }

    let pairs: Vec<Result<CounterfactualPair>> = exec::indexed_map(owners.len(), |i| {
        let t = &plan.type2[owners[i]];
        let mut rng = rng::stream(master_seed, "type2", i as u64);
        let base: Vec<usize> = space
            .factors()
            .iter()
            .map(|f| rng.random_range(0..f.level_count))
            .collect();
        let levels = space.factor(t.factor_index)?.level_count;
        let (level_a, level_b) = if levels >= 4 {
            let (low, high) = two_level_projection(&space, t.factor_index)?;
            (
                low[rng.random_range(0..low.len())],
                high[rng.random_range(0..high.len())],
            )
        } else {
            let a = rng.random_range(0..levels);
            let mut b = rng.random_range(0..levels - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        };
        let mut values_a = base.clone();
        values_a[t.factor_index] = level_a;
        let mut values_b = base;
        values_b[t.factor_index] = level_b;
        Ok(CounterfactualPair {
            image_a: renderer.render(&FactorSetting::new(values_a))?,
            image_b: renderer.render(&FactorSetting::new(values_b))?,
            varied_factor: t.factor_index,
        })
    });
    pairs.into_iter().collect()
}

/// Stacks pair images into training tensors.
pub fn pairs_to_tensors(pairs: &[CounterfactualPair]) -> Result<PairTensors<f32>> {
    let a: Vec<&LabeledImage> = pairs.iter().map(|p| &p.image_a).collect();
    let b: Vec<&LabeledImage> = pairs.iter().map(|p| &p.image_b).collect();
    PairTensors::new(images_to_tensor(&a)?, images_to_tensor(&b)?)
}

/// Flattens pair images into a labeled dataset (for task-loss-only use).
pub fn pairs_to_dataset(
    pairs: &[CounterfactualPair],
    space: &FactorSpace,
    seed: Option<u64>,
) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        samples.push(p.image_a.clone());
        samples.push(p.image_b.clone());
    }
    Dataset::new(space.clone(), samples, Provenance::Type1Correction, seed)
}

/// Pair directory format: the flattened images as a dataset directory plus
/// `pairs.csv` with (index_a, index_b, varied_factor).
pub fn save_pairs(
    pairs: &[CounterfactualPair],
    space: &FactorSpace,
    dir: &std::path::Path,
) -> Result<()> {
    if pairs.is_empty() {
        return Err(DoeError::EmptyInput("pair set to save".into()));
    }
    let mut samples = Vec::with_capacity(pairs.len() * 2);
    for p in pairs {
        samples.push(p.image_a.clone());
        samples.push(p.image_b.clone());
    }
    let ds = Dataset::new(space.clone(), samples, Provenance::Probe, None)?;
    crate::synthgen::io::save_dataset(&ds, dir)?;
    let mut writer = csv::Writer::from_path(dir.join("pairs.csv"))?;
    writer.write_record(["index_a", "index_b", "varied_factor"])?;
    for (i, p) in pairs.iter().enumerate() {
        writer.write_record([
            (2 * i).to_string(),
            (2 * i + 1).to_string(),
            p.varied_factor.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_pairs(dir: &std::path::Path) -> Result<Vec<CounterfactualPair>> {
    let ds = crate::synthgen::io::load_dataset(dir)?;
    let mut reader = csv::Reader::from_path(dir.join("pairs.csv"))?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|e| DoeError::InvalidConfig(format!("pairs.csv: {e}")))
        };
        let a = parse(&record[0])?;
        let b = parse(&record[1])?;
        let varied = parse(&record[2])?;
        let samples = ds.samples();
        if a >= samples.len() || b >= samples.len() {
            return Err(DoeError::IndexOutOfRange {
                what: "pair image index",
                index: a.max(b),
                limit: samples.len(),
            });
        }
        pairs.push(CounterfactualPair {
            image_a: samples[a].clone(),
            image_b: samples[b].clone(),
            varied_factor: varied,
        });
    }
    Ok(pairs)
}

/// Fine-tunes from the given weights on real ∪ Type-I data with the
/// invariance term over the pairs. With λ = 0 this degrades to the
/// task-loss-only correction. At least one correction input must be
/// nonempty.
pub fn correct(
    params: ModelParams<f32>,
    real_data: &Dataset,
    type1_data: Option<&Dataset>,
    pairs: Option<&[CounterfactualPair]>,
    config: &TrainConfig,
) -> Result<ModelParams<f32>> {
    let have_type1 = type1_data.is_some_and(|d| !d.is_empty());
    let have_pairs = pairs.is_some_and(|p| !p.is_empty());
    if !have_type1 && !have_pairs {
        return Err(DoeError::EmptyInput(
            "correction needs Type I data or counterfactual pairs".into(),
        ));
    }
    let union = match type1_data {
        Some(t1) if !t1.is_empty() => real_data.union(t1)?,
        _ => real_data.clone(),
    };
    let pair_tensors = match pairs {
        Some(p) if !p.is_empty() && config.lambda > 0.0 => Some(pairs_to_tensors(p)?),
        _ => None,
    };
    train(params, &union, pair_tensors.as_ref(), config)
}

/// One audit round of the verification loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRound {
    pub round: usize,
    pub profile: SensitivityProfile,
    pub diagnosis: GapDiagnosis,
    pub heldout_accuracy: f64,
}

/// Ordered audit rounds, one per executed loop iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditHistory {
    pub rounds: Vec<AuditRound>,
}

/// Per-round budgets for the verification loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopBudgets {
    pub type1_samples: usize,
    pub type2_pairs: usize,
}

/// Iterates audit → diagnose → prescribe → correct. Stops early when the
/// diagnosis has no Type I/II factors, else runs exactly `max_rounds`
/// rounds (the final round audits without a further correction). Type I
/// data accumulates into the training corpus between rounds.
#[allow(clippy::too_many_arguments)]
pub fn verify_loop(
    params: ModelParams<f32>,
    real_data: &Dataset,
    audit_val: &Dataset,
    test: &Dataset,
    renderer: &dyn Renderer,
    budgets: LoopBudgets,
    max_rounds: usize,
    config: &TrainConfig,
    alpha: f64,
    delta: f64,
) -> Result<(ModelParams<f32>, AuditHistory)> {
    if max_rounds == 0 {
        return Err(DoeError::InvalidConfig("max_rounds must be >= 1".into()));
    }
    let mut model = params;
    let mut corpus = real_data.clone();
    let mut rounds: Vec<AuditRound> = Vec::new();

    for round in 0..max_rounds {
        let profile = run_audit(&model, audit_val, alpha)?;
        let hist = TrainHistogram::from_dataset(&corpus);
        let diag = diagnose(&model, audit_val, &profile, &hist, delta)?;
        let heldout_accuracy = eval_accuracy(&model, test)?;
        let has_gaps = diag.has_gaps();
        log::info!(
            "loop round {round}: heldout accuracy {heldout_accuracy:.3}, gaps: {}",
            if has_gaps { "yes" } else { "no" }
        );
        rounds.push(AuditRound {
            round,
            profile,
            diagnosis: diag.clone(),
            heldout_accuracy,
        });
        if !has_gaps || round + 1 == max_rounds {
            break;
        }

        let plan = build_plan(&diag, corpus.space(), budgets.type1_samples, budgets.type2_pairs)?;
        if plan.is_empty() {
            break;
        }
        let round_seed = rng::mix(config.seed, "loop_round", round as u64);
        let type1 = if plan.total_type1_samples() > 0 {
            Some(generate_type1(&plan, renderer, &hist, round_seed)?)
        } else {
            None
        };
        let pairs = if plan.total_pairs() > 0 {
            Some(generate_type2_pairs(&plan, renderer, round_seed)?)
        } else {
            None
        };
        model = correct(model, &corpus, type1.as_ref(), pairs.as_deref(), config)?;
        if let Some(t1) = type1 {
            corpus = corpus.union(&t1)?;
        }
    }
    Ok((model, AuditHistory { rounds }))
}

/// Per-factor change between the first and last audit rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub factor: String,
    #[serde(with = "float_maybe_inf")]
    pub f_before: f64,
    #[serde(with = "float_maybe_inf")]
    pub f_after: f64,
    #[serde(with = "float_maybe_inf")]
    pub delta_f: f64,
    #[serde(with = "float_maybe_inf")]
    pub delta_pct: f64,
    /// Sensitivity transfer marker: F increased between audits.
    pub increased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub rows: Vec<TransferRow>,
}

impl TransferReport {
    pub fn factor(&self, name: &str) -> Option<&TransferRow> {
        self.rows.iter().find(|r| r.factor == name)
    }

    pub fn text_table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>10} {:>10} {:>10} {:>10} {:>5}\n",
            "factor", "F_before", "F_after", "dF", "d%", "up"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<14} {:>10} {:>10} {:>10} {:>10} {:>5}\n",
                r.factor,
                sig4(r.f_before),
                sig4(r.f_after),
                sig4(r.delta_f),
                sig4(r.delta_pct),
                if r.increased { "^" } else { "" }
            ));
        }
        out
    }
}

/// ΔF and Δ% between the first and last profiles of a history.
pub fn sensitivity_transfer_report(history: &AuditHistory) -> Result<TransferReport> {
    if history.rounds.len() < 2 {
        return Err(DoeError::InsufficientData(
            "transfer report needs at least two audit rounds".into(),
        ));
    }
    let first = &history.rounds.first().unwrap().profile;
    let last = &history.rounds.last().unwrap().profile;
    transfer_between(first, last)
}

/// ΔF table between two profiles over the same factor list.
pub fn transfer_between(
    before: &SensitivityProfile,
    after: &SensitivityProfile,
) -> Result<TransferReport> {
    if before.factors.len() != after.factors.len() {
        return Err(DoeError::DimensionMismatch(
            "profiles cover different factor sets".into(),
        ));
    }
    let rows = before
        .factors
        .iter()
        .zip(&after.factors)
        .map(|(b, a)| {
            let delta_f = a.f - b.f;
            let delta_pct = if b.f == 0.0 {
                if a.f == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                100.0 * delta_f / b.f
            };
            TransferRow {
                factor: b.factor.clone(),
                f_before: b.f,
                f_after: a.f,
                delta_f,
                delta_pct,
                increased: a.f > b.f,
            }
        })
        .collect();
    Ok(TransferReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::FactorSensitivity;
    use crate::diagnose::{FactorDiagnosis, GapClass};
    use crate::synthgen::{dsprites_space, DspritesRenderer};

    fn diagnosis_with(classes: &[(&str, GapClass, Vec<usize>)]) -> GapDiagnosis {
        let space = dsprites_space();
        GapDiagnosis {
            factors: space
                .factors()
                .iter()
                .map(|spec| {
                    let found = classes.iter().find(|(n, _, _)| *n == spec.name);
                    let (class, under) = found
                        .map(|(_, c, u)| (*c, u.clone()))
                        .unwrap_or((GapClass::Correct, vec![]));
                    FactorDiagnosis {
                        factor: spec.name.clone(),
                        class,
                        coverage_positive: class == GapClass::TypeI,
                        shortcut_positive: class == GapClass::TypeII,
                        coverage_drop: 0.0,
                        f_statistic: 1.0,
                        significant: class == GapClass::TypeII,
                        underrepresented_levels: under,
                    }
                })
                .collect(),
        }
    }

    fn exp1_like_diagnosis() -> GapDiagnosis {
        diagnosis_with(&[
            ("orientation", GapClass::TypeI, (5..40).collect()),
            ("posX", GapClass::TypeII, vec![]),
        ])
    }

    #[test]
    fn plan_splits_budgets_and_counts_images() {
        let space = dsprites_space();
        let plan = build_plan(&exp1_like_diagnosis(), space, 2000, 500).unwrap();
        assert_eq!(plan.total_type1_samples(), 2000);
        assert_eq!(plan.total_pairs(), 500);
        // 2000 samples + 500 pairs = 3000 images.
        assert_eq!(plan.total_type1_samples() + 2 * plan.total_pairs(), 3000);
        assert_eq!(plan.type1[0].factor, "orientation");
        assert_eq!(plan.type2[0].factor, "posX");
    }

    #[test]
    fn empty_diagnosis_gives_empty_plan() {
        let space = dsprites_space();
        let plan = build_plan(&diagnosis_with(&[]), space, 2000, 500).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn two_type2_factors_split_evenly() {
        let space = dsprites_space();
        let diag = diagnosis_with(&[
            ("posX", GapClass::TypeII, vec![]),
            ("posY", GapClass::TypeII, vec![]),
        ]);
        let plan = build_plan(&diag, space, 0, 500).unwrap();
        assert_eq!(plan.type2.len(), 2);
        assert_eq!(plan.type2[0].pair_budget, 250);
        assert_eq!(plan.type2[1].pair_budget, 250);
    }

    #[test]
    fn type1_targets_deficient_levels_and_marginals() {
        let space = dsprites_space();
        let plan = build_plan(&exp1_like_diagnosis(), space, 400, 0).unwrap();
        // Training histogram with posX mass only in low levels.
        let ds = crate::synthgen::build_biased_trainset(900, 4).unwrap();
        let hist = TrainHistogram::from_dataset(&ds);
        let data = generate_type1(&plan, &DspritesRenderer, &hist, 77).unwrap();
        assert_eq!(data.len(), 400);
        for s in data.samples() {
            let orient = s.setting.level(2);
            assert!(orient >= 5 && orient < 40, "orientation {orient} not targeted");
        }
        // Non-targeted factors follow training marginals: orientation-free
        // factors stay in the training support (scale 0..5 all seen).
        let hist_t1 = data.level_histogram();
        assert!(hist_t1[1].iter().all(|&c| c > 0));
    }

    #[test]
    fn pairs_vary_exactly_one_factor_with_quartile_span() {
        let space = dsprites_space();
        let plan = build_plan(&exp1_like_diagnosis(), space, 0, 120).unwrap();
        let pairs = generate_type2_pairs(&plan, &DspritesRenderer, 13).unwrap();
        assert_eq!(pairs.len(), 120);
        let mut wide = 0usize;
        for p in &pairs {
            assert!(p.holds_invariant());
            assert_eq!(p.varied_factor, 3);
            let a = p.image_a.setting.level(3) as i64;
            let b = p.image_b.setting.level(3) as i64;
            if (a - b).abs() >= 16 {
                wide += 1;
            }
        }
        // Quartile spanning on 32 levels keeps the gap at 17+ always.
        assert!(wide as f64 / pairs.len() as f64 >= 0.9);
    }

    #[test]
    fn pair_round_trip_through_directory() {
        let space = dsprites_space();
        let plan = build_plan(&exp1_like_diagnosis(), space, 0, 6).unwrap();
        let pairs = generate_type2_pairs(&plan, &DspritesRenderer, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_pairs(&pairs, space, dir.path()).unwrap();
        let back = load_pairs(dir.path()).unwrap();
        assert_eq!(back.len(), pairs.len());
        for (a, b) in pairs.iter().zip(&back) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transfer_report_flags_increases_only() {
        let mk = |f_vals: &[f64]| SensitivityProfile {
            alpha: 0.05,
            factors: f_vals
                .iter()
                .enumerate()
                .map(|(i, &f)| FactorSensitivity {
                    factor: format!("f{i}"),
                    f,
                    df_between: 1,
                    df_within: 10,
                    p_raw: 0.5,
                    significant: false,
                    degenerate: false,
                    testable: true,
                })
                .collect(),
        };
        let report = transfer_between(&mk(&[5.8, 45.9, 2.1]), &mk(&[26.3, 20.3, 2.1])).unwrap();
        let scale = &report.rows[0];
        assert!(scale.increased);
        assert!((scale.delta_pct - 353.4).abs() < 1.0);
        assert!(!report.rows[1].increased);
        // Unchanged factor: zero delta, not flagged.
        assert_eq!(report.rows[2].delta_f, 0.0);
        assert!(!report.rows[2].increased);
    }

    #[test]
    fn transfer_needs_two_rounds() {
        let history = AuditHistory { rounds: vec![] };
        assert!(sensitivity_transfer_report(&history).is_err());
    }

    #[test]
    fn correct_requires_some_input() {
        let params =
            ModelParams::<f32>::init(crate::nnet::ArchSpec::conv4(0.125), 1).unwrap();
        let real = crate::synthgen::build_biased_trainset(30, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 16,
            ..TrainConfig::default()
        };
        assert!(correct(params, &real, None, None, &cfg).is_err());
    }
}
