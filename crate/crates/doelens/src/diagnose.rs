//! Gap diagnosis: the coverage test, the shortcut test, and the
//! deterministic priority rule that classifies every factor.
//!
//! A level is underrepresented when its training share falls below
//! `1 / (2 · level_count)` (unseen levels count at share zero). The
//! coverage test is positive when underrepresented levels exist and the
//! stratified accuracy drop on them reaches `delta`. The shortcut test is
//! positive for nuisance factors with Holm-significant loss dependence.
//! Priority: coverage-positive → Type I; else shortcut-positive →
//! Type II; else Correct (semantic factors report as Semantic).

use serde::{Deserialize, Serialize};

use crate::audit::SensitivityProfile;
use crate::error::{DoeError, Result};
use crate::factor_space::{FactorRole, FactorSpace};
use crate::nnet::{eval_predictions, ModelParams};
use crate::synthgen::Dataset;

/// Default stratified accuracy drop that counts as a coverage failure.
pub const DEFAULT_COVERAGE_DELTA: f64 = 0.10;

/// Per-factor level counts observed in a training set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainHistogram {
    pub counts: Vec<Vec<u64>>,
}

impl TrainHistogram {
    pub fn from_dataset(data: &Dataset) -> Self {
        Self {
            counts: data.level_histogram(),
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        Self { counts }
    }

    fn check_against(&self, space: &FactorSpace) -> Result<()> {
        if self.counts.len() != space.len() {
            return Err(DoeError::DimensionMismatch(format!(
                "histogram covers {} factors, space has {}",
                self.counts.len(),
                space.len()
            )));
        }
        for (c, f) in self.counts.iter().zip(space.factors()) {
            if c.len() != f.level_count {
                return Err(DoeError::DimensionMismatch(format!(
                    "histogram for '{}' has {} levels, expected {}",
                    f.name,
                    c.len(),
                    f.level_count
                )));
            }
        }
        Ok(())
    }
}

/// Stratified-accuracy evidence for one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCoverage {
    pub factor: String,
    /// Accuracy per level on the audit-validation split (None where the
    /// split has no samples at that level).
    pub per_level_accuracy: Vec<Option<f64>>,
    /// Share of training mass per level.
    pub train_share: Vec<f64>,
    pub underrepresented: Vec<usize>,
    pub covered_accuracy: f64,
    pub uncovered_accuracy: Option<f64>,
    /// covered_accuracy − uncovered_accuracy (0 when nothing is
    /// underrepresented).
    pub drop: f64,
    pub positive: bool,
}

/// Coverage evidence over all factors, plus the threshold used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEvidence {
    pub delta: f64,
    pub factors: Vec<FactorCoverage>,
}

impl CoverageEvidence {
    pub fn factor(&self, name: &str) -> Option<&FactorCoverage> {
        self.factors.iter().find(|f| f.factor == name)
    }
}

/// Runs the stratified coverage test on an audit-validation split.
pub fn coverage_test(
    params: &ModelParams<f32>,
    audit_val: &Dataset,
    train_hist: &TrainHistogram,
    delta: f64,
) -> Result<CoverageEvidence> {
    if audit_val.is_empty() {
        return Err(DoeError::EmptyInput("audit-validation split".into()));
    }
    let space = audit_val.space();
    train_hist.check_against(space)?;

    let preds = eval_predictions(params, audit_val)?;
    let correct: Vec<bool> = preds
        .iter()
        .zip(audit_val.samples())
        .map(|(p, s)| *p == s.label)
        .collect();

    let factors = space
        .factors()
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let levels = spec.level_count;
            let total: u64 = train_hist.counts[j].iter().sum();
            let train_share: Vec<f64> = train_hist.counts[j]
                .iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect();
            let threshold = 1.0 / (2.0 * levels as f64);
            let underrepresented: Vec<usize> = (0..levels)
                .filter(|&l| train_share[l] < threshold)
                .collect();

            let mut hits = vec![0u64; levels];
            let mut seen = vec![0u64; levels];
            for (sample, &ok) in audit_val.samples().iter().zip(&correct) {
                let level = sample.setting.level(j);
                seen[level] += 1;
                if ok {
                    hits[level] += 1;
                }
            }
            let per_level_accuracy: Vec<Option<f64>> = (0..levels)
                .map(|l| (seen[l] > 0).then(|| hits[l] as f64 / seen[l] as f64))
                .collect();

            let acc_over = |pick_under: bool| -> Option<f64> {
                let mut h = 0u64;
                let mut n = 0u64;
                for l in 0..levels {
                    if underrepresented.contains(&l) == pick_under {
                        h += hits[l];
                        n += seen[l];
                    }
                }
                (n > 0).then(|| h as f64 / n as f64)
            };
            let covered_accuracy = acc_over(false).unwrap_or(0.0);
            let uncovered_accuracy = if underrepresented.is_empty() {
                None
            } else {
                acc_over(true)
            };
            let drop = uncovered_accuracy.map_or(0.0, |u| covered_accuracy - u);
            let positive = uncovered_accuracy.is_some() && drop >= delta;

            FactorCoverage {
                factor: spec.name.clone(),
                per_level_accuracy,
                train_share,
                underrepresented,
                covered_accuracy,
                uncovered_accuracy,
                drop,
                positive,
            }
        })
        .collect();

    Ok(CoverageEvidence { delta, factors })
}

/// Shortcut test: nuisance role AND Holm-significant dependence.
pub fn shortcut_test(profile: &SensitivityProfile, space: &FactorSpace) -> Result<Vec<bool>> {
    if profile.factors.len() != space.len() {
        return Err(DoeError::DimensionMismatch(format!(
            "profile covers {} factors, space has {}",
            profile.factors.len(),
            space.len()
        )));
    }
    Ok(profile
        .factors
        .iter()
        .zip(space.factors())
        .map(|(entry, spec)| spec.role == FactorRole::Nuisance && entry.significant)
        .collect())
}

/// Final classification of one factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapClass {
    TypeI,
    TypeII,
    Correct,
    Semantic,
}

impl std::fmt::Display for GapClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GapClass::TypeI => "Type I",
            GapClass::TypeII => "Type II",
            GapClass::Correct => "Correct",
            GapClass::Semantic => "Semantic",
        };
        write!(f, "{name}")
    }
}

/// One factor's diagnosis with its supporting evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnosis {
    pub factor: String,
    pub class: GapClass,
    pub coverage_positive: bool,
    pub shortcut_positive: bool,
    pub coverage_drop: f64,
    #[serde(with = "crate::util::float_maybe_inf")]
    pub f_statistic: f64,
    pub significant: bool,
    /// Levels the prescription should target for Type I factors.
    pub underrepresented_levels: Vec<usize>,
}

/// Per-factor gap classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDiagnosis {
    pub factors: Vec<FactorDiagnosis>,
}

impl GapDiagnosis {
    pub fn factor(&self, name: &str) -> Option<&FactorDiagnosis> {
        self.factors.iter().find(|f| f.factor == name)
    }

    pub fn type1_factors(&self) -> Vec<&FactorDiagnosis> {
        self.factors
            .iter()
            .filter(|f| f.class == GapClass::TypeI)
            .collect()
    }

    pub fn type2_factors(&self) -> Vec<&FactorDiagnosis> {
        self.factors
            .iter()
            .filter(|f| f.class == GapClass::TypeII)
            .collect()
    }

    pub fn has_gaps(&self) -> bool {
        self.factors
            .iter()
            .any(|f| matches!(f.class, GapClass::TypeI | GapClass::TypeII))
    }
}

/// Applies the priority rule per factor: Type I beats Type II beats
/// Correct; semantic factors are labeled Semantic unless coverage fails.
pub fn classify(
    coverage: &CoverageEvidence,
    shortcut_flags: &[bool],
    profile: &SensitivityProfile,
    space: &FactorSpace,
) -> Result<GapDiagnosis> {
    let k = space.len();
    if coverage.factors.len() != k || shortcut_flags.len() != k || profile.factors.len() != k {
        return Err(DoeError::DimensionMismatch(
            "coverage, shortcut, and profile inputs must cover the same space".into(),
        ));
    }
    let factors = (0..k)
        .map(|j| {
            let spec = &space.factors()[j];
            let cov = &coverage.factors[j];
            let shortcut = shortcut_flags[j];
            let class = if cov.positive {
                GapClass::TypeI
            } else if shortcut {
                GapClass::TypeII
            } else if spec.role == FactorRole::Semantic {
                GapClass::Semantic
            } else {
                GapClass::Correct
            };
            FactorDiagnosis {
                factor: spec.name.clone(),
                class,
                coverage_positive: cov.positive,
                shortcut_positive: shortcut,
                coverage_drop: cov.drop,
                f_statistic: profile.factors[j].f,
                significant: profile.factors[j].significant,
                underrepresented_levels: cov.underrepresented.clone(),
            }
        })
        .collect();
    Ok(GapDiagnosis { factors })
}

/// Convenience wrapper: coverage test + shortcut test + classification.
pub fn diagnose(
    params: &ModelParams<f32>,
    audit_val: &Dataset,
    profile: &SensitivityProfile,
    train_hist: &TrainHistogram,
    delta: f64,
) -> Result<GapDiagnosis> {
    let coverage = coverage_test(params, audit_val, train_hist, delta)?;
    let shortcut = shortcut_test(profile, audit_val.space())?;
    classify(&coverage, &shortcut, profile, audit_val.space())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::FactorSensitivity;
    use crate::factor_space::{FactorRole, FactorSpec};

    fn two_factor_space() -> FactorSpace {
        FactorSpace::new(vec![
            FactorSpec::new("class", FactorRole::Semantic, 3),
            FactorSpec::new("nuis", FactorRole::Nuisance, 4),
        ])
        .unwrap()
    }

    fn profile_with(p_and_sig: &[(f64, bool)]) -> SensitivityProfile {
        SensitivityProfile {
            alpha: 0.05,
            factors: p_and_sig
                .iter()
                .enumerate()
                .map(|(i, &(p, sig))| FactorSensitivity {
                    factor: if i == 0 { "class".into() } else { "nuis".into() },
                    f: 5.0,
                    df_between: 1,
                    df_within: 10,
                    p_raw: p,
                    significant: sig,
                    degenerate: false,
                    testable: true,
                })
                .collect(),
        }
    }

    fn coverage_with(positive: &[bool]) -> CoverageEvidence {
        CoverageEvidence {
            delta: 0.1,
            factors: positive
                .iter()
                .enumerate()
                .map(|(i, &p)| FactorCoverage {
                    factor: if i == 0 { "class".into() } else { "nuis".into() },
                    per_level_accuracy: vec![],
                    train_share: vec![],
                    underrepresented: if p { vec![0] } else { vec![] },
                    covered_accuracy: 0.9,
                    uncovered_accuracy: p.then_some(0.4),
                    drop: if p { 0.5 } else { 0.0 },
                    positive: p,
                })
                .collect(),
        }
    }

    #[test]
    fn priority_rule_quadrants() {
        let space = two_factor_space();
        let profile = profile_with(&[(0.5, false), (0.0001, true)]);

        // coverage+ shortcut+ → Type I.
        let d = classify(&coverage_with(&[false, true]), &[false, true], &profile, &space)
            .unwrap();
        assert_eq!(d.factor("nuis").unwrap().class, GapClass::TypeI);

        // coverage− shortcut+ → Type II.
        let d = classify(&coverage_with(&[false, false]), &[false, true], &profile, &space)
            .unwrap();
        assert_eq!(d.factor("nuis").unwrap().class, GapClass::TypeII);

        // coverage− shortcut− → Correct (nuisance) / Semantic (semantic).
        let d = classify(&coverage_with(&[false, false]), &[false, false], &profile, &space)
            .unwrap();
        assert_eq!(d.factor("nuis").unwrap().class, GapClass::Correct);
        assert_eq!(d.factor("class").unwrap().class, GapClass::Semantic);

        // Semantic factor with a coverage failure still becomes Type I.
        let d = classify(&coverage_with(&[true, false]), &[false, false], &profile, &space)
            .unwrap();
        assert_eq!(d.factor("class").unwrap().class, GapClass::TypeI);
    }

    #[test]
    fn shortcut_gate_requires_nuisance_role() {
        let space = two_factor_space();
        // Both factors Holm-significant; only the nuisance one tests positive.
        let profile = profile_with(&[(0.0001, true), (0.0001, true)]);
        let flags = shortcut_test(&profile, &space).unwrap();
        assert_eq!(flags, vec![false, true]);

        let relaxed = profile_with(&[(0.0001, true), (0.9, false)]);
        let flags = shortcut_test(&relaxed, &space).unwrap();
        assert_eq!(flags, vec![false, false]);
    }

    #[test]
    fn classification_is_total_and_evidence_consistent() {
        let space = two_factor_space();
        let profile = profile_with(&[(0.5, false), (0.001, true)]);
        let d = classify(&coverage_with(&[true, true]), &[false, true], &profile, &space)
            .unwrap();
        assert_eq!(d.factors.len(), space.len());
        for f in &d.factors {
            assert_eq!(f.coverage_positive, !f.underrepresented_levels.is_empty());
        }
        assert!(d.has_gaps());
        assert_eq!(d.type1_factors().len(), 2);
        assert!(d.type2_factors().is_empty());
    }

    #[test]
    fn histogram_mismatch_rejected() {
        let space = two_factor_space();
        let hist = TrainHistogram::from_counts(vec![vec![1, 1, 1]]);
        assert!(hist.check_against(&space).is_err());
        let hist = TrainHistogram::from_counts(vec![vec![1, 1, 1], vec![1, 1]]);
        assert!(hist.check_against(&space).is_err());
    }
}
