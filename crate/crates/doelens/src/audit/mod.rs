//! ANOVA-based sensitivity audit of a trained model.
//!
//! The audit passes a dataset through the model in eval mode, records the
//! per-sample task loss, runs a one-way ANOVA per factor over the grouped
//! losses, and applies a Holm–Bonferroni correction across the factor
//! family. The output is a per-factor sensitivity profile.

pub mod anova;
pub mod fdist;
pub mod holm;

use serde::{Deserialize, Serialize};

pub use anova::{anova_one_way, AnovaResult};
pub use fdist::{betainc, f_cdf, f_sf, ln_gamma};
pub use holm::{holm_bonferroni, holm_thresholds};

use crate::error::{DoeError, Result};
use crate::exec;
use crate::factor_space::{FactorSetting, FactorSpace};
use crate::nnet::ModelParams;
use crate::synthgen::Dataset;
use crate::util::{float_maybe_inf, sig4};

/// Per-sample losses paired with the settings that produced them.
#[derive(Debug, Clone)]
pub struct LossTable {
    space: FactorSpace,
    losses: Vec<f64>,
    settings: Vec<FactorSetting>,
}

impl LossTable {
    pub fn new(space: FactorSpace, rows: Vec<(f64, FactorSetting)>) -> Result<Self> {
        let mut losses = Vec::with_capacity(rows.len());
        let mut settings = Vec::with_capacity(rows.len());
        for (loss, setting) in rows {
            if !loss.is_finite() {
                return Err(DoeError::NonFinite("loss table entry".into()));
            }
            space.check_setting(&setting)?;
            losses.push(loss);
            settings.push(setting);
        }
        Ok(Self {
            space,
            losses,
            settings,
        })
    }

    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &FactorSetting)> {
        self.losses.iter().copied().zip(self.settings.iter())
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Number of distinct levels of `factor_index` present in the table.
    pub fn observed_levels(&self, factor_index: usize) -> usize {
        let level_count = self.space.factors()[factor_index].level_count;
        let mut seen = vec![false; level_count];
        for s in &self.settings {
            seen[s.level(factor_index)] = true;
        }
        seen.iter().filter(|&&b| b).count()
    }
}

/// One factor's row in a sensitivity profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSensitivity {
    pub factor: String,
    #[serde(with = "float_maybe_inf")]
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_raw: f64,
    /// Holm–Bonferroni decision at the profile's alpha.
    pub significant: bool,
    pub degenerate: bool,
    /// False when the factor had fewer than two observed levels and was
    /// excluded from the Holm family.
    pub testable: bool,
}

/// Per-factor F statistics with Holm-adjusted significance decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityProfile {
    pub alpha: f64,
    pub factors: Vec<FactorSensitivity>,
}

impl SensitivityProfile {
    pub fn factor(&self, name: &str) -> Option<&FactorSensitivity> {
        self.factors.iter().find(|f| f.factor == name)
    }

    /// Star notation for one row: raw-p thresholds gated by the Holm
    /// decision, `n.s.` otherwise.
    pub fn stars(entry: &FactorSensitivity) -> &'static str {
        if !entry.testable {
            return "-";
        }
        if !entry.significant {
            return "n.s.";
        }
        if entry.p_raw <= 0.001 {
            "***"
        } else if entry.p_raw <= 0.01 {
            "**"
        } else {
            "*"
        }
    }

    /// Aligned text table mirroring the report layout.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>10} {:>6} {:>7} {:>12} {:>6}\n",
            "factor", "F", "df_b", "df_w", "p_raw", "sig"
        ));
        for e in &self.factors {
            out.push_str(&format!(
                "{:<14} {:>10} {:>6} {:>7} {:>12} {:>6}\n",
                e.factor,
                sig4(e.f),
                e.df_between,
                e.df_within,
                sig4(e.p_raw),
                Self::stars(e)
            ));
        }
        out
    }
}

/// Eval-mode per-sample cross-entropy over a dataset.
pub fn per_sample_losses(params: &ModelParams<f32>, data: &Dataset) -> Result<LossTable> {
    if data.is_empty() {
        return Err(DoeError::EmptyInput("dataset for loss table".into()));
    }
    let losses = crate::nnet::eval_per_sample_losses(params, data)?;
    let rows = losses
        .into_iter()
        .zip(data.samples().iter().map(|s| s.setting.clone()))
        .collect();
    LossTable::new(data.space().clone(), rows)
}

/// Per-factor ANOVA over one loss table, Holm-corrected across the factor
/// family. Factors with a single observed level are marked untestable and
/// excluded from the family.
pub fn audit_table(table: &LossTable, alpha: f64) -> Result<SensitivityProfile> {
    let k = table.space().len();
    let per_factor: Vec<Result<Option<AnovaResult>>> = exec::indexed_map(k, |j| {
        if table.observed_levels(j) < 2 {
            Ok(None)
        } else {
            anova_one_way(table, j).map(Some)
        }
    });

    let mut results = Vec::with_capacity(k);
    for r in per_factor {
        results.push(r?);
    }

    let family: Vec<(usize, f64)> = results
        .iter()
        .enumerate()
        .filter_map(|(j, r)| r.as_ref().map(|a| (j, a.p_raw)))
        .collect();
    let flags = holm_bonferroni(
        &family.iter().map(|&(_, p)| p).collect::<Vec<_>>(),
        alpha,
    )?;
    let mut significant = vec![false; k];
    for ((j, _), flag) in family.iter().zip(flags) {
        significant[*j] = flag;
    }

    let factors = table
        .space()
        .factors()
        .iter()
        .zip(results)
        .zip(significant)
        .map(|((spec, result), significant)| match result {
            Some(a) => FactorSensitivity {
                factor: spec.name.clone(),
                f: a.f,
                df_between: a.df_between,
                df_within: a.df_within,
                p_raw: a.p_raw,
                significant,
                degenerate: a.degenerate,
                testable: true,
            },
            None => FactorSensitivity {
                factor: spec.name.clone(),
                f: 0.0,
                df_between: 0,
                df_within: 0,
                p_raw: 1.0,
                significant: false,
                degenerate: false,
                testable: false,
            },
        })
        .collect();

    Ok(SensitivityProfile { alpha, factors })
}

/// Full audit: eval-mode losses, per-factor ANOVA, Holm correction.
pub fn run_audit(
    params: &ModelParams<f32>,
    data: &Dataset,
    alpha: f64,
) -> Result<SensitivityProfile> {
    let table = per_sample_losses(params, data)?;
    audit_table(&table, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_space::{FactorRole, FactorSpec};
    use proptest::prelude::*;

    fn table_from(levels: &[usize], rows: Vec<(f64, Vec<usize>)>) -> LossTable {
        let factors = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| FactorSpec::new(format!("f{i}"), FactorRole::Nuisance, l))
            .collect();
        let space = FactorSpace::new(factors).unwrap();
        LossTable::new(
            space,
            rows.into_iter()
                .map(|(l, v)| (l, FactorSetting::new(v)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_losses_yield_no_significance() {
        let rows = (0..40).map(|i| (0.5, vec![i % 2, i % 4])).collect();
        let table = table_from(&[2, 4], rows);
        let profile = audit_table(&table, 0.05).unwrap();
        for f in &profile.factors {
            assert_eq!(f.f, 0.0);
            assert!(!f.significant);
            assert!(f.testable);
        }
    }

    #[test]
    fn single_observed_level_marked_untestable() {
        let rows = (0..30)
            .map(|i| ((i % 3) as f64 + 0.1 * i as f64, vec![i % 3, 1]))
            .collect();
        let table = table_from(&[3, 4], rows);
        let profile = audit_table(&table, 0.05).unwrap();
        assert!(profile.factors[0].testable);
        assert!(!profile.factors[1].testable);
        assert!(!profile.factors[1].significant);
    }

    #[test]
    fn dependent_factor_flagged_independent_factor_not() {
        // Loss strongly depends on factor 0, not on factor 1.
        let mut rows = Vec::new();
        for i in 0..200usize {
            let a = i % 2;
            let b = (i / 2) % 4;
            let wiggle = 0.01 * ((i * 37 % 11) as f64 - 5.0);
            rows.push((a as f64 * 2.0 + wiggle, vec![a, b]));
        }
        let table = table_from(&[2, 4], rows);
        let profile = audit_table(&table, 0.05).unwrap();
        assert!(profile.factors[0].significant);
        assert!(!profile.factors[1].significant);
    }

    #[test]
    fn loss_table_rejects_nonfinite_and_bad_settings() {
        let space =
            FactorSpace::new(vec![FactorSpec::new("a", FactorRole::Nuisance, 2)]).unwrap();
        assert!(LossTable::new(
            space.clone(),
            vec![(f64::NAN, FactorSetting::new(vec![0]))]
        )
        .is_err());
        assert!(LossTable::new(space, vec![(1.0, FactorSetting::new(vec![2]))]).is_err());
    }

    #[test]
    fn stars_follow_raw_p_gated_by_holm() {
        let mk = |p, sig| FactorSensitivity {
            factor: "x".into(),
            f: 1.0,
            df_between: 1,
            df_within: 10,
            p_raw: p,
            significant: sig,
            degenerate: false,
            testable: true,
        };
        assert_eq!(SensitivityProfile::stars(&mk(0.0005, true)), "***");
        assert_eq!(SensitivityProfile::stars(&mk(0.005, true)), "**");
        assert_eq!(SensitivityProfile::stars(&mk(0.03, true)), "*");
        assert_eq!(SensitivityProfile::stars(&mk(0.03, false)), "n.s.");
    }

    proptest! {
        /// F is invariant under adding a constant to all losses and under
        /// positive scaling of all losses.
        #[test]
        fn f_invariant_under_affine_loss_maps(
            shift in -5.0f64..5.0,
            scale in 0.1f64..10.0,
            seed in 0u64..1000,
        ) {
            let mut state = seed.wrapping_mul(2654435761).wrapping_add(1);
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as f64) / (u32::MAX as f64)
            };
            let rows: Vec<(f64, Vec<usize>)> =
                (0..24).map(|i| (next() + (i % 3) as f64 * 0.3, vec![i % 3])).collect();
            let base = table_from(&[3], rows.clone());
            let mapped = table_from(
                &[3],
                rows.iter().map(|(l, v)| (l * scale + shift, v.clone())).collect(),
            );
            let a = anova_one_way(&base, 0).unwrap();
            let b = anova_one_way(&mapped, 0).unwrap();
            prop_assert!((a.f - b.f).abs() <= 1e-9 * a.f.abs().max(1.0));
        }
    }
}
