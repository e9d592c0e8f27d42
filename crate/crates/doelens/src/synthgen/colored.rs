//! A 64×64 RGB colored-shapes renderer with a configurable style→size
//! leak (the entangled generator).
//!
//! Factors: shape (square / circle / triangle), color, size, style,
//! position. Base sizes are 8/12/16 px (radius or half-side); the style
//! factor multiplies the rendered size by 1, (1+ε), or (1−0.7ε) for
//! clean / rough / sketchy. Styles also change stroke texture: rough
//! perturbs the outline with setting-seeded jitter, sketchy draws a dashed
//! outline over a partial fill. With ε = 0 the generator is perfectly
//! factorized.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use super::{EntanglementConfig, LabeledImage, Renderer};
use crate::error::{DoeError, Result};
use crate::factor_space::{FactorRole, FactorSetting, FactorSpace, FactorSpec};
use crate::rng;

pub const IMAGE_SIZE: usize = 64;
pub const POSITION_LEVELS: usize = 9;

const BASE_HALF: [f64; 3] = [8.0, 12.0, 16.0];
const PALETTE: [[u8; 3]; 3] = [[225, 56, 48], [58, 196, 86], [52, 110, 235]];

/// shape(3) / color(3) / size(3) / style(3) / position(9).
pub fn colored_space() -> &'static FactorSpace {
    static SPACE: OnceLock<FactorSpace> = OnceLock::new();
    SPACE.get_or_init(|| {
        FactorSpace::new(vec![
            FactorSpec::new("shape", FactorRole::Semantic, 3)
                .with_labels(&["square", "circle", "triangle"]),
            FactorSpec::new("color", FactorRole::Nuisance, 3).with_labels(&[
                "red", "green", "blue",
            ]),
            FactorSpec::new("size", FactorRole::Nuisance, 3)
                .with_labels(&["small", "medium", "large"]),
            FactorSpec::new("style", FactorRole::Nuisance, 3)
                .with_labels(&["clean", "rough", "sketchy"]),
            FactorSpec::new("position", FactorRole::Nuisance, POSITION_LEVELS),
        ])
        .expect("static space is valid")
    })
}

/// Colored-shapes generator; `cfg.epsilon` controls style→size leakage.
pub struct ColoredShapesRenderer {
    pub cfg: EntanglementConfig,
}

impl ColoredShapesRenderer {
    pub fn new(cfg: EntanglementConfig) -> Self {
        Self { cfg }
    }

    pub fn perfect() -> Self {
        Self::new(EntanglementConfig::perfect())
    }
}

impl Renderer for ColoredShapesRenderer {
    fn space(&self) -> &FactorSpace {
        colored_space()
    }

    fn render(&self, setting: &FactorSetting) -> Result<LabeledImage> {
        render_colored_shape(setting, &self.cfg)
    }
}

/// Rendered size in pixels (radius / half-side) for a size and style level.
pub fn rendered_half(size_level: usize, style_level: usize, epsilon: f64) -> f64 {
    let mult = match style_level {
        0 => 1.0,
        1 => 1.0 + epsilon,
        _ => 1.0 - 0.7 * epsilon,
    };
    BASE_HALF[size_level] * mult
}

pub fn render_colored_shape(
    setting: &FactorSetting,
    cfg: &EntanglementConfig,
) -> Result<LabeledImage> {
    let space = colored_space();
    space.check_setting(setting).map_err(|_| {
        DoeError::DimensionMismatch(format!(
            "setting {:?} does not belong to the colored-shapes space",
            setting.values
        ))
    })?;

    let shape = setting.level(0);
    let color = setting.level(1);
    let size = setting.level(2);
    let style = setting.level(3);
    let position = setting.level(4);

    let half = rendered_half(size, style, cfg.epsilon);
    let (cx, cy) = position_center(position, POSITION_LEVELS);

    // Jitter phases depend on the setting only, never on epsilon, so the
    // perfect and entangled generators share textures at equal settings.
    let phase_seed = setting_hash(setting);
    let phi1 = unit(rng::mix(phase_seed, "jitter", 1)) * TAU;
    let phi2 = unit(rng::mix(phase_seed, "jitter", 2)) * TAU;

    let rgb = PALETTE[color];
    let mut pixels = vec![0u8; IMAGE_SIZE * IMAGE_SIZE * 3];
    for py in 0..IMAGE_SIZE {
        for px in 0..IMAGE_SIZE {
            let dx = px as f64 + 0.5 - cx;
            let dy = py as f64 + 0.5 - cy;
            let on = match style {
                0 => shape_contains(shape, dx, dy, half),
                1 => {
                    let theta = dy.atan2(dx);
                    let rho = 1.0 + 0.07 * (6.0 * theta + phi1).sin()
                        + 0.05 * (11.0 * theta + phi2).sin();
                    shape_contains(shape, dx / rho, dy / rho, half)
                }
                _ => {
                    let outer = shape_contains(shape, dx, dy, half);
                    let inner = shape_contains(shape, dx, dy, half * 0.82);
                    if inner {
                        // Partial fill: drop every third diagonal line.
                        (px + py) % 3 != 0
                    } else if outer {
                        // Dashed outline: two dashes on, one off.
                        let theta = dy.atan2(dx);
                        let bucket = ((theta / TAU + 0.5) * 24.0).floor() as i64;
                        bucket.rem_euclid(3) != 2
                    } else {
                        false
                    }
                }
            };
            if on {
                let at = (py * IMAGE_SIZE + px) * 3;
                pixels[at..at + 3].copy_from_slice(&rgb);
            }
        }
    }

    Ok(LabeledImage {
        pixels,
        height: IMAGE_SIZE,
        width: IMAGE_SIZE,
        channels: 3,
        label: shape,
        setting: setting.clone(),
    })
}

/// Position levels arranged on a g×g grid with centers spaced across
/// [22, 42] so the largest rendered shape fits the canvas.
fn position_center(level: usize, levels: usize) -> (f64, f64) {
    let g = (levels as f64).sqrt().ceil() as usize;
    let coord = |idx: usize| {
        if g == 1 {
            32.0
        } else {
            22.0 + 20.0 * idx as f64 / (g - 1) as f64
        }
    };
    (coord(level % g), coord(level / g))
}

fn shape_contains(shape: usize, dx: f64, dy: f64, half: f64) -> bool {
    match shape {
        0 => dx.abs() <= half && dy.abs() <= half,
        1 => dx * dx + dy * dy <= half * half,
        _ => triangle_contains(dx, dy, half),
    }
}

/// Equilateral triangle, apex up, circumradius `half`.
fn triangle_contains(dx: f64, dy: f64, half: f64) -> bool {
    let v = [
        (0.0, -half),
        (half * 0.866_025_403_784_438_6, half * 0.5),
        (-half * 0.866_025_403_784_438_6, half * 0.5),
    ];
    let mut sign = 0i8;
    for i in 0..3 {
        let (x1, y1) = v[i];
        let (x2, y2) = v[(i + 1) % 3];
        let cross = (x2 - x1) * (dy - y1) - (y2 - y1) * (dx - x1);
        let s = if cross >= 0.0 { 1 } else { -1 };
        if sign == 0 {
            sign = s;
        } else if sign != s {
            return false;
        }
    }
    true
}

fn setting_hash(setting: &FactorSetting) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in &setting.values {
        h ^= v as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setting(values: [usize; 5]) -> FactorSetting {
        FactorSetting::new(values.to_vec())
    }

    fn foreground_count(img: &LabeledImage) -> usize {
        img.pixels.chunks(3).filter(|c| c.iter().any(|&v| v > 0)).count()
    }

    #[test]
    fn epsilon_zero_means_base_size_for_all_styles() {
        for style in 0..3 {
            assert_eq!(rendered_half(1, style, 0.0), 12.0);
        }
    }

    #[test]
    fn leakage_matches_documented_multipliers() {
        assert!((rendered_half(1, 1, 0.3) - 15.6).abs() < 1e-12);
        assert!((rendered_half(1, 2, 0.3) - 9.48).abs() < 1e-12);
    }

    #[test]
    fn rough_vs_clean_pixel_count_scales_with_squared_multiplier() {
        // Centered square, medium size.
        let clean = render_colored_shape(&setting([0, 0, 1, 0, 4]), &EntanglementConfig::perfect())
            .unwrap();
        let rough =
            render_colored_shape(&setting([0, 0, 1, 1, 4]), &EntanglementConfig::new(0.3).unwrap())
                .unwrap();
        let ratio = foreground_count(&rough) as f64 / foreground_count(&clean) as f64;
        assert!(
            (ratio - 1.69).abs() / 1.69 < 0.10,
            "area ratio {ratio:.3} not within 10% of 1.69"
        );
    }

    #[test]
    fn perfect_and_entangled_agree_on_clean_style() {
        let s = setting([2, 1, 2, 0, 7]);
        let a = render_colored_shape(&s, &EntanglementConfig::perfect()).unwrap();
        let b = render_colored_shape(&s, &EntanglementConfig::new(0.3).unwrap()).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn entangled_differs_from_perfect_on_styled_settings() {
        for style in [1usize, 2] {
            let s = setting([0, 0, 1, style, 4]);
            let a = render_colored_shape(&s, &EntanglementConfig::perfect()).unwrap();
            let b = render_colored_shape(&s, &EntanglementConfig::new(0.3).unwrap()).unwrap();
            assert_ne!(a.pixels, b.pixels, "style {style}");
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn rendering_is_deterministic_and_labeled_by_shape() {
        for shape in 0..3 {
            let s = setting([shape, 2, 1, 1, 3]);
            let cfg = EntanglementConfig::new(0.3).unwrap();
            let a = render_colored_shape(&s, &cfg).unwrap();
            let b = render_colored_shape(&s, &cfg).unwrap();
            assert_eq!(a.pixels, b.pixels);
            assert_eq!(a.label, shape);
        }
    }

    #[test]
    fn styles_are_visually_distinct() {
        let cfg = EntanglementConfig::perfect();
        let imgs: Vec<_> = (0..3)
            .map(|style| render_colored_shape(&setting([1, 0, 2, style, 4]), &cfg).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                let diff = imgs[a]
                    .pixels
                    .iter()
                    .zip(&imgs[b].pixels)
                    .filter(|(x, y)| x != y)
                    .count();
                assert!(diff > 100, "styles {a} and {b} differ by {diff} subpixels");
            }
        }
    }

    #[test]
    fn positions_cover_distinct_centers() {
        let cfg = EntanglementConfig::perfect();
        let mut boxes = Vec::new();
        for p in 0..POSITION_LEVELS {
            let img = render_colored_shape(&setting([1, 0, 0, 0, p]), &cfg).unwrap();
            let mut min_x = usize::MAX;
            let mut min_y = usize::MAX;
            for y in 0..IMAGE_SIZE {
                for x in 0..IMAGE_SIZE {
                    if img.pixels[(y * IMAGE_SIZE + x) * 3] > 0 {
                        min_x = min_x.min(x);
                        min_y = min_y.min(y);
                    }
                }
            }
            boxes.push((min_x, min_y));
        }
        let distinct: std::collections::HashSet<_> = boxes.iter().collect();
        assert_eq!(distinct.len(), POSITION_LEVELS);
    }

    #[test]
    fn rejects_wrong_space() {
        let cfg = EntanglementConfig::perfect();
        assert!(render_colored_shape(&FactorSetting::new(vec![0, 0]), &cfg).is_err());
        assert!(render_colored_shape(&setting([0, 0, 3, 0, 0]), &cfg).is_err());
    }
}
