//! Procedural image generators and dataset construction.
//!
//! Two renderers are provided: a 64×64 grayscale sprite renderer (square,
//! ellipse, heart over shape/scale/orientation/posX/posY) and a 64×64 RGB
//! colored-shapes renderer whose style factor can be configured to leak
//! into rendered size (an entangled generator). Rendering is a pure
//! function of the factor setting: center-of-pixel coverage tests, no
//! anti-aliasing, no hidden randomness.
//!
//! Dataset builders derive a seed per sample index, so parallel and
//! sequential builds produce bit-identical datasets.

pub mod colored;
pub mod dsprites;
pub mod io;

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use colored::{colored_space, render_colored_shape, ColoredShapesRenderer};
pub use dsprites::{dsprites_space, render_dsprites_like, DspritesRenderer};

use crate::error::{DoeError, Result};
use crate::exec;
use crate::factor_space::{FactorSetting, FactorSpace};
use crate::rng;

/// Where a dataset came from in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BiasedTrain,
    AuditVal,
    FinalTest,
    Type1Correction,
    Probe,
}

/// A rendered image with its label and the setting that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pub pixels: Vec<u8>,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub label: usize,
    pub setting: FactorSetting,
}

/// Degree of style→size leakage in the colored-shapes generator.
/// `epsilon = 0` is the perfect generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementConfig {
    pub epsilon: f64,
}

impl EntanglementConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(DoeError::InvalidConfig(format!(
                "entanglement epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    pub fn perfect() -> Self {
        Self { epsilon: 0.0 }
    }
}

/// A deterministic image generator over a fixed factor space.
pub trait Renderer: Sync {
    fn space(&self) -> &FactorSpace;
    fn render(&self, setting: &FactorSetting) -> Result<LabeledImage>;
}

/// A collection of rendered samples sharing one factor space.
#[derive(Debug, Clone)]
pub struct Dataset {
    space: FactorSpace,
    samples: Vec<LabeledImage>,
    provenance: Provenance,
    seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        space: FactorSpace,
        samples: Vec<LabeledImage>,
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Self> {
        let semantic = space.semantic_index();
        for sample in &samples {
            space.check_setting(&sample.setting)?;
            if let Some(si) = semantic {
                if sample.label != sample.setting.level(si) {
                    return Err(DoeError::InvalidConfig(format!(
                        "sample label {} disagrees with semantic level {}",
                        sample.label,
                        sample.setting.level(si)
                    )));
                }
            }
        }
        Ok(Self {
            space,
            samples,
            provenance,
            seed,
        })
    }

    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn samples(&self) -> &[LabeledImage] {
        &self.samples
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct setting tuples present in the dataset.
    pub fn setting_keys(&self) -> HashSet<Vec<usize>> {
        self.samples
            .iter()
            .map(|s| s.setting.values.clone())
            .collect()
    }

    /// Per-factor level occupancy counts.
    pub fn level_histogram(&self) -> Vec<Vec<u64>> {
        let mut hist: Vec<Vec<u64>> = self
            .space
            .factors()
            .iter()
            .map(|f| vec![0; f.level_count])
            .collect();
        for s in &self.samples {
            for (j, &v) in s.setting.values.iter().enumerate() {
                hist[j][v] += 1;
            }
        }
        hist
    }

    /// Number of samples per class (semantic factor level).
    pub fn class_counts(&self) -> Vec<u64> {
        let si = match self.space.semantic_index() {
            Some(i) => i,
            None => return Vec::new(),
        };
        let mut counts = vec![0u64; self.space.factors()[si].level_count];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Concatenates datasets over the same space. Provenance and seed of
    /// the first argument are kept.
    pub fn union(&self, other: &Dataset) -> Result<Dataset> {
        if self.space != other.space {
            return Err(DoeError::DimensionMismatch(
                "cannot union datasets over different factor spaces".into(),
            ));
        }
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Dataset::new(self.space.clone(), samples, self.provenance, self.seed)
    }

    /// Renders a dataset from explicit settings (e.g. a realized design).
    pub fn render_from_settings(
        renderer: &dyn Renderer,
        settings: &[FactorSetting],
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Dataset> {
        let rendered: Vec<Result<LabeledImage>> =
            exec::indexed_map(settings.len(), |i| renderer.render(&settings[i]));
        let mut samples = Vec::with_capacity(rendered.len());
        for r in rendered {
            samples.push(r?);
        }
        Dataset::new(renderer.space().clone(), samples, provenance, seed)
    }
}

/// Sprite training set with the planted deficiencies: shape determines a
/// posX band (0→[0,10], 1→[11,21], 2→[22,31]) and orientation is
/// restricted to [0,4]; remaining factors are uniform; classes balanced to
/// within one sample.
pub fn build_biased_trainset(n: usize, master_seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(DoeError::EmptyInput("biased trainset size".into()));
    }
    let renderer = DspritesRenderer;
    let space = renderer.space().clone();
    let rendered: Vec<Result<LabeledImage>> = exec::indexed_map(n, |i| {
        let mut rng = rng::stream(master_seed, "biased_train", i as u64);
        let shape = i % 3;
        let (lo, hi) = POSX_BANDS[shape];
        let setting = FactorSetting::new(vec![
            shape,
            rng.random_range(0..6),
            rng.random_range(0..=4),
            rng.random_range(lo..=hi),
            rng.random_range(0..32),
        ]);
        renderer.render(&setting)
    });
    let mut samples = Vec::with_capacity(n);
    for r in rendered {
        samples.push(r?);
    }
    Dataset::new(space, samples, Provenance::BiasedTrain, Some(master_seed))
}

/// posX ranges (inclusive) enforced per shape class in the biased set.
pub const POSX_BANDS: [(usize, usize); 3] = [(0, 10), (11, 21), (22, 31)];

/// Highest orientation level present in the biased training set.
pub const BIASED_MAX_ORIENTATION: usize = 4;

/// Two class-balanced, uniformly sampled datasets that share no setting
/// tuple: an audit-validation split and a final test split.
pub fn build_balanced_splits(
    renderer: &dyn Renderer,
    n_each: usize,
    master_seed: u64,
) -> Result<(Dataset, Dataset)> {
    if n_each == 0 {
        return Err(DoeError::EmptyInput("balanced split size".into()));
    }
    let space = renderer.space().clone();
    if 2 * n_each as u128 > space.setting_pool_size() {
        return Err(DoeError::PoolExhausted(format!(
            "2×{n_each} samples requested from a pool of {} distinct settings",
            space.setting_pool_size()
        )));
    }

    let audit_val = build_uniform_balanced(
        renderer,
        n_each,
        Provenance::AuditVal,
        master_seed,
        "audit_val",
    )?;
    let taken = audit_val.setting_keys();

    let semantic = space.semantic_index().ok_or_else(|| {
        DoeError::InvalidFactorSpace("balanced splits need a semantic factor".into())
    })?;
    let classes = space.factors()[semantic].level_count;
    let rendered: Vec<Result<LabeledImage>> = exec::indexed_map(n_each, |i| {
        let mut rng = rng::stream(master_seed, "final_test", i as u64);
        let class = i % classes;
        for _attempt in 0..10_000 {
            let setting = uniform_setting_with_class(&space, semantic, class, &mut rng);
            if !taken.contains(&setting.values) {
                return renderer.render(&setting);
            }
        }
        Err(DoeError::PoolExhausted(format!(
            "could not find a test setting disjoint from the audit split for sample {i}"
        )))
    });
    let mut samples = Vec::with_capacity(n_each);
    for r in rendered {
        samples.push(r?);
    }
    let final_test = Dataset::new(space, samples, Provenance::FinalTest, Some(master_seed))?;
    Ok((audit_val, final_test))
}

/// Uniformly sampled dataset with balanced classes.
pub fn build_uniform_balanced(
    renderer: &dyn Renderer,
    n: usize,
    provenance: Provenance,
    master_seed: u64,
    tag: &str,
) -> Result<Dataset> {
    if n == 0 {
        return Err(DoeError::EmptyInput("dataset size".into()));
    }
    let space = renderer.space().clone();
    let semantic = space.semantic_index().ok_or_else(|| {
        DoeError::InvalidFactorSpace("balanced sampling needs a semantic factor".into())
    })?;
    let classes = space.factors()[semantic].level_count;
    let rendered: Vec<Result<LabeledImage>> = exec::indexed_map(n, |i| {
        let mut rng = rng::stream(master_seed, tag, i as u64);
        let setting = uniform_setting_with_class(&space, semantic, i % classes, &mut rng);
        renderer.render(&setting)
    });
    let mut samples = Vec::with_capacity(n);
    for r in rendered {
        samples.push(r?);
    }
    Dataset::new(space, samples, provenance, Some(master_seed))
}

fn uniform_setting_with_class<R: Rng>(
    space: &FactorSpace,
    semantic: usize,
    class: usize,
    rng: &mut R,
) -> FactorSetting {
    let values = space
        .factors()
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            if j == semantic {
                class
            } else {
                rng.random_range(0..spec.level_count)
            }
        })
        .collect();
    FactorSetting::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_trainset_respects_bands_and_balance() {
        let ds = build_biased_trainset(601, 42).unwrap();
        assert_eq!(ds.len(), 601);
        let counts = ds.class_counts();
        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();
        assert!(max - min <= 1, "class counts {counts:?}");
        for s in ds.samples() {
            let (lo, hi) = POSX_BANDS[s.label];
            let posx = s.setting.level(3);
            assert!(posx >= lo && posx <= hi);
            assert!(s.setting.level(2) <= BIASED_MAX_ORIENTATION);
        }
    }

    #[test]
    fn biased_trainset_posx_means_and_orientation_cap() {
        let ds = build_biased_trainset(9000, 7).unwrap();
        let mut sums = [0f64; 3];
        let mut counts = [0f64; 3];
        let mut max_orient = 0usize;
        for s in ds.samples() {
            sums[s.label] += s.setting.level(3) as f64;
            counts[s.label] += 1.0;
            max_orient = max_orient.max(s.setting.level(2));
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
        assert!((means[0] - 5.0).abs() < 0.3, "means {means:?}");
        assert!((means[1] - 16.0).abs() < 0.3, "means {means:?}");
        assert!((means[2] - 26.5).abs() < 0.3, "means {means:?}");
        assert_eq!(max_orient, 4);
    }

    #[test]
    fn balanced_splits_are_disjoint_and_balanced() {
        let (a, b) = build_balanced_splits(&DspritesRenderer, 900, 11).unwrap();
        assert_eq!(a.len(), 900);
        assert_eq!(b.len(), 900);
        let ka = a.setting_keys();
        let kb = b.setting_keys();
        assert!(ka.is_disjoint(&kb));
        for ds in [&a, &b] {
            let counts = ds.class_counts();
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn balanced_split_rejects_oversized_requests() {
        // A tiny space: 2 classes × 2 levels = 8 distinct settings.
        use crate::factor_space::{FactorRole, FactorSpec};
        struct TinyRenderer(FactorSpace);
        impl Renderer for TinyRenderer {
            fn space(&self) -> &FactorSpace {
                &self.0
            }
            fn render(&self, setting: &FactorSetting) -> Result<LabeledImage> {
                Ok(LabeledImage {
                    pixels: vec![0u8; 4],
                    height: 2,
                    width: 2,
                    channels: 1,
                    label: setting.level(0),
                    setting: setting.clone(),
                })
            }
        }
        let space = FactorSpace::new(vec![
            FactorSpec::new("c", FactorRole::Semantic, 2),
            FactorSpec::new("n", FactorRole::Nuisance, 2),
            FactorSpec::new("m", FactorRole::Nuisance, 2),
        ])
        .unwrap();
        assert!(build_balanced_splits(&TinyRenderer(space), 100, 0).is_err());
    }

    #[test]
    fn parallel_and_sequential_builds_identical() {
        let par = build_biased_trainset(300, 5).unwrap();
        crate::exec::force_sequential(true);
        let seq = build_biased_trainset(300, 5).unwrap();
        crate::exec::force_sequential(false);
        for (a, b) in par.samples().iter().zip(seq.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn uniform_marginals_pass_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let ds = build_uniform_balanced(&DspritesRenderer, 10_000, Provenance::Probe, 3, "chk")
            .unwrap();
        let hist = ds.level_histogram();
        // Nuisance factors (indices 1..5) should be uniform at alpha=0.01.
        for (j, factor) in ds.space().factors().iter().enumerate().skip(1) {
            let expected = ds.len() as f64 / factor.level_count as f64;
            let stat: f64 = hist[j]
                .iter()
                .map(|&c| {
                    let d = c as f64 - expected;
                    d * d / expected
                })
                .sum();
            let dist = ChiSquared::new((factor.level_count - 1) as f64).unwrap();
            let critical = dist.inverse_cdf(0.99);
            assert!(
                stat < critical,
                "factor {j} chi2 {stat:.1} >= {critical:.1}"
            );
        }
    }
}
