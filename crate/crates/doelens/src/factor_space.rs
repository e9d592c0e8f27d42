//! Controllable factor vocabulary shared by designs, generators, audits,
//! and prescriptions.
//!
//! A factor is a named discrete variable with `level_count` levels indexed
//! `0..level_count`. Semantic factors determine the task label; nuisance
//! factors are variation the task should be invariant to. Levels are plain
//! contiguous integers; human-readable labels are metadata only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DoeError, Result};

/// Whether a factor carries the label or is nuisance variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorRole {
    Semantic,
    Nuisance,
}

/// One named discrete factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub role: FactorRole,
    #[serde(rename = "levels")]
    pub level_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_labels: Option<Vec<String>>,
}

impl FactorSpec {
    pub fn new(name: impl Into<String>, role: FactorRole, level_count: usize) -> Self {
        Self {
            name: name.into(),
            role,
            level_count,
            level_labels: None,
        }
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        self.level_labels = Some(labels.iter().map(|s| s.to_string()).collect());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(DoeError::InvalidFactorSpace(
                "factor name must be nonempty".into(),
            ));
        }
        if self.level_count < 2 {
            return Err(DoeError::InvalidFactorSpace(format!(
                "factor '{}' must have at least 2 levels, got {}",
                self.name, self.level_count
            )));
        }
        if let Some(labels) = &self.level_labels {
            if labels.len() != self.level_count {
                return Err(DoeError::InvalidFactorSpace(format!(
                    "factor '{}' has {} labels for {} levels",
                    self.name,
                    labels.len(),
                    self.level_count
                )));
            }
        }
        Ok(())
    }
}

/// Ordered collection of factors describing one generator's controls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FactorSpaceRepr", into = "FactorSpaceRepr")]
pub struct FactorSpace {
    factors: Vec<FactorSpec>,
}

/// Raw serde shape; conversion enforces the invariants on load.
#[derive(Serialize, Deserialize)]
struct FactorSpaceRepr {
    factors: Vec<FactorSpec>,
}

impl TryFrom<FactorSpaceRepr> for FactorSpace {
    type Error = DoeError;
    fn try_from(repr: FactorSpaceRepr) -> Result<Self> {
        FactorSpace::new(repr.factors)
    }
}

impl From<FactorSpace> for FactorSpaceRepr {
    fn from(space: FactorSpace) -> Self {
        FactorSpaceRepr {
            factors: space.factors,
        }
    }
}

impl FactorSpace {
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(DoeError::InvalidFactorSpace(
                "a factor space needs at least one factor".into(),
            ));
        }
        for spec in &factors {
            spec.validate()?;
        }
        for (i, a) in factors.iter().enumerate() {
            for b in factors.iter().skip(i + 1) {
                if a.name == b.name {
                    return Err(DoeError::InvalidFactorSpace(format!(
                        "duplicate factor name '{}'",
                        a.name
                    )));
                }
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factor(&self, index: usize) -> Result<&FactorSpec> {
        self.factors.get(index).ok_or(DoeError::IndexOutOfRange {
            what: "factor index",
            index,
            limit: self.factors.len(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    /// Index of the first semantic factor, the one that defines the label.
    pub fn semantic_index(&self) -> Option<usize> {
        self.factors
            .iter()
            .position(|f| f.role == FactorRole::Semantic)
    }

    /// Number of distinct settings in the full factor lattice.
    pub fn setting_pool_size(&self) -> u128 {
        self.factors
            .iter()
            .map(|f| f.level_count as u128)
            .product()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validates that a setting belongs to this space.
    pub fn check_setting(&self, setting: &FactorSetting) -> Result<()> {
        if setting.values.len() != self.factors.len() {
            return Err(DoeError::DimensionMismatch(format!(
                "setting has {} values for a {}-factor space",
                setting.values.len(),
                self.factors.len()
            )));
        }
        for (i, (&v, spec)) in setting.values.iter().zip(&self.factors).enumerate() {
            if v >= spec.level_count {
                return Err(DoeError::IndexOutOfRange {
                    what: "factor level",
                    index: v,
                    limit: self.factors[i].level_count,
                });
            }
        }
        Ok(())
    }
}

/// A concrete assignment of one level per factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorSetting {
    pub values: Vec<usize>,
}

impl FactorSetting {
    pub fn new(values: Vec<usize>) -> Self {
        Self { values }
    }

    pub fn level(&self, factor_index: usize) -> usize {
        self.values[factor_index]
    }
}

/// The two-level projection of a multi-level factor: the first and last
/// quartiles of its level range. Quartile size is `max(1, levels / 4)`,
/// which degrades to single levels for small factors.
pub fn two_level_projection(
    space: &FactorSpace,
    factor_index: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let spec = space.factor(factor_index)?;
    let q = (spec.level_count / 4).max(1);
    let low = (0..q).collect();
    let high = (spec.level_count - q..spec.level_count).collect();
    Ok((low, high))
}

/// Draws a setting with the given factors fixed and the rest uniform.
pub fn sample_setting<R: Rng>(
    space: &FactorSpace,
    fixed: &[(usize, usize)],
    rng: &mut R,
) -> Result<FactorSetting> {
    for &(index, level) in fixed {
        let spec = space.factor(index)?;
        if level >= spec.level_count {
            return Err(DoeError::IndexOutOfRange {
                what: "fixed factor level",
                index: level,
                limit: spec.level_count,
            });
        }
    }
    let values = space
        .factors
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            fixed
                .iter()
                .find(|&&(fi, _)| fi == i)
                .map(|&(_, level)| level)
                .unwrap_or_else(|| rng.random_range(0..spec.level_count))
        })
        .collect();
    Ok(FactorSetting::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn space_with_levels(levels: &[usize]) -> FactorSpace {
        let factors = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let role = if i == 0 {
                    FactorRole::Semantic
                } else {
                    FactorRole::Nuisance
                };
                FactorSpec::new(format!("f{i}"), role, l)
            })
            .collect();
        FactorSpace::new(factors).unwrap()
    }

    #[test]
    fn projection_matches_documented_quartiles() {
        let space = space_with_levels(&[3, 40]);
        let (low, high) = two_level_projection(&space, 1).unwrap();
        assert_eq!(low, (0..10).collect::<Vec<_>>());
        assert_eq!(high, (30..40).collect::<Vec<_>>());
    }

    #[test]
    fn projection_of_binary_factor_is_the_levels_themselves() {
        let space = space_with_levels(&[2, 2]);
        let (low, high) = two_level_projection(&space, 0).unwrap();
        assert_eq!(low, vec![0]);
        assert_eq!(high, vec![1]);
    }

    #[test]
    fn projection_of_six_levels_takes_one_each() {
        let space = space_with_levels(&[3, 6]);
        let (low, high) = two_level_projection(&space, 1).unwrap();
        assert_eq!(low, vec![0]);
        assert_eq!(high, vec![5]);
    }

    #[test]
    fn projection_rejects_bad_index() {
        let space = space_with_levels(&[3]);
        assert!(two_level_projection(&space, 1).is_err());
    }

    #[test]
    fn sample_setting_respects_fixed_values() {
        let space = space_with_levels(&[3, 32, 5]);
        let mut rng = stream(1, "test", 0);
        for _ in 0..50 {
            let s = sample_setting(&space, &[(1, 7)], &mut rng).unwrap();
            assert_eq!(s.level(1), 7);
            space.check_setting(&s).unwrap();
        }
    }

    #[test]
    fn sample_setting_all_fixed_is_identity() {
        let space = space_with_levels(&[3, 4]);
        let mut rng = stream(1, "test", 1);
        let s = sample_setting(&space, &[(0, 2), (1, 3)], &mut rng).unwrap();
        assert_eq!(s.values, vec![2, 3]);
    }

    #[test]
    fn sample_setting_rejects_out_of_range_fix() {
        let space = space_with_levels(&[3]);
        let mut rng = stream(1, "test", 2);
        assert!(sample_setting(&space, &[(0, 3)], &mut rng).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let specs = vec![
            FactorSpec::new("a", FactorRole::Semantic, 2),
            FactorSpec::new("a", FactorRole::Nuisance, 2),
        ];
        assert!(FactorSpace::new(specs).is_err());
    }

    #[test]
    fn single_level_factor_rejected() {
        let specs = vec![FactorSpec::new("a", FactorRole::Semantic, 1)];
        assert!(FactorSpace::new(specs).is_err());
    }

    #[test]
    fn json_round_trip_is_identity() {
        let space = space_with_levels(&[3, 6, 40]);
        let text = space.to_json().unwrap();
        let back = FactorSpace::from_json(&text).unwrap();
        assert_eq!(space, back);
    }

    #[test]
    fn json_load_enforces_invariants() {
        let bad = r#"{"factors":[{"name":"a","role":"semantic","levels":1}]}"#;
        assert!(FactorSpace::from_json(bad).is_err());
    }

    proptest! {
        #[test]
        fn projection_sets_disjoint_and_bounded(levels in 2usize..200) {
            let space = space_with_levels(&[2, levels]);
            let (low, high) = two_level_projection(&space, 1).unwrap();
            prop_assert!(!low.is_empty() && !high.is_empty());
            prop_assert!(low.iter().all(|l| !high.contains(l)));
            prop_assert!(low.len() + high.len() <= levels);
            prop_assert!(high.iter().all(|&h| h < levels));
        }
    }
}
