//! A 64×64 grayscale sprite renderer over the five classic factors:
//! shape (square / ellipse / heart), scale, orientation, posX, posY.
//!
//! Rasterization is a center-of-pixel coverage test with no anti-aliasing,
//! so identical settings always produce bit-identical buffers.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use super::{LabeledImage, Renderer};
use crate::error::{DoeError, Result};
use crate::factor_space::{FactorRole, FactorSetting, FactorSpace, FactorSpec};

pub const IMAGE_SIZE: usize = 64;

/// shape(3) / scale(6) / orientation(40) / posX(32) / posY(32).
pub fn dsprites_space() -> &'static FactorSpace {
    static SPACE: OnceLock<FactorSpace> = OnceLock::new();
    SPACE.get_or_init(|| {
        FactorSpace::new(vec![
            FactorSpec::new("shape", FactorRole::Semantic, 3)
                .with_labels(&["square", "ellipse", "heart"]),
            FactorSpec::new("scale", FactorRole::Nuisance, 6),
            FactorSpec::new("orientation", FactorRole::Nuisance, 40),
            FactorSpec::new("posX", FactorRole::Nuisance, 32),
            FactorSpec::new("posY", FactorRole::Nuisance, 32),
        ])
        .expect("static space is valid")
    })
}

/// Deterministic sprite renderer.
pub struct DspritesRenderer;

impl Renderer for DspritesRenderer {
    fn space(&self) -> &FactorSpace {
        dsprites_space()
    }

    fn render(&self, setting: &FactorSetting) -> Result<LabeledImage> {
        render_dsprites_like(setting)
    }
}

/// Renders one sprite. The bounding-box extent spans 16..32 px over the six
/// scale levels; position levels map the sprite center to [16, 48] so every
/// scale fits the canvas; orientation levels cover a full turn.
pub fn render_dsprites_like(setting: &FactorSetting) -> Result<LabeledImage> {
    let space = dsprites_space();
    space.check_setting(setting).map_err(|_| {
        DoeError::DimensionMismatch(format!(
            "setting {:?} does not belong to the sprite space",
            setting.values
        ))
    })?;

    let shape = setting.level(0);
    let scale = setting.level(1);
    let orientation = setting.level(2);
    let pos_x = setting.level(3);
    let pos_y = setting.level(4);

    let extent = 16.0 + 16.0 * scale as f64 / 5.0;
    let half = extent / 2.0;
    let angle = orientation as f64 * TAU / 40.0;
    let (sin, cos) = angle.sin_cos();
    let cx = 16.0 + 32.0 * pos_x as f64 / 31.0;
    let cy = 16.0 + 32.0 * pos_y as f64 / 31.0;

    let mut pixels = vec![0u8; IMAGE_SIZE * IMAGE_SIZE];
    for py in 0..IMAGE_SIZE {
        for px in 0..IMAGE_SIZE {
            let dx = px as f64 + 0.5 - cx;
            let dy = py as f64 + 0.5 - cy;
            // Rotate into the shape frame.
            let qx = dx * cos + dy * sin;
            let qy = -dx * sin + dy * cos;
            let inside = match shape {
                0 => qx.abs() <= half && qy.abs() <= half,
                1 => {
                    let a = half;
                    let b = half * 0.6;
                    (qx / a).powi(2) + (qy / b).powi(2) <= 1.0
                }
                _ => heart_contains(qx, qy, half),
            };
            if inside {
                pixels[py * IMAGE_SIZE + px] = 255;
            }
        }
    }

    Ok(LabeledImage {
        pixels,
        height: IMAGE_SIZE,
        width: IMAGE_SIZE,
        channels: 1,
        label: shape,
        setting: setting.clone(),
    })
}

/// Point-in-heart test for the implicit sextic (x²+y²−1)³ − x²y³ ≤ 0,
/// scaled so the curve roughly fills the shape's bounding box. Image y
/// grows downward, so it is flipped to keep the lobes up.
fn heart_contains(qx: f64, qy: f64, half: f64) -> bool {
    let s = half / 1.2;
    let x = qx / s;
    let y = -qy / s;
    let r = x * x + y * y - 1.0;
    r * r * r - x * x * y * y * y <= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_space::FactorSetting;

    fn setting(values: [usize; 5]) -> FactorSetting {
        FactorSetting::new(values.to_vec())
    }

    fn foreground(img: &LabeledImage) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..img.height {
            for x in 0..img.width {
                if img.pixels[y * img.width + x] > 0 {
                    out.push((x, y));
                }
            }
        }
        out
    }

    #[test]
    fn top_left_small_square_stays_in_top_left() {
        let img = render_dsprites_like(&setting([0, 0, 0, 0, 0])).unwrap();
        let fg = foreground(&img);
        assert!(!fg.is_empty());
        for (x, y) in fg {
            assert!(x < 32 && y < 32, "pixel ({x},{y}) escaped the quadrant");
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = setting([2, 3, 17, 12, 25]);
        let a = render_dsprites_like(&s).unwrap();
        let b = render_dsprites_like(&s).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn label_tracks_shape_level() {
        for shape in 0..3 {
            let img = render_dsprites_like(&setting([shape, 2, 5, 10, 10])).unwrap();
            assert_eq!(img.label, shape);
        }
    }

    #[test]
    fn all_shapes_render_moderate_foreground() {
        for shape in 0..3 {
            for scale in [0, 5] {
                let img = render_dsprites_like(&setting([shape, scale, 0, 15, 15])).unwrap();
                let count = foreground(&img).len();
                assert!(
                    count > 80 && count < 1600,
                    "shape {shape} scale {scale}: {count} px"
                );
            }
        }
    }

    #[test]
    fn scale_levels_grow_monotonically() {
        let mut prev = 0;
        for scale in 0..6 {
            let img = render_dsprites_like(&setting([0, scale, 0, 15, 15])).unwrap();
            let count = foreground(&img).len();
            assert!(count > prev, "scale {scale}: {count} <= {prev}");
            prev = count;
        }
    }

    #[test]
    fn half_turn_matches_point_reflection() {
        // Center at posX=posY=0 is (16,16): 2*cx is integral, so a half
        // turn about the shape center maps pixel (x,y) to (31-x, 31-y).
        for shape in 0..3 {
            for orientation in [0usize, 7, 13] {
                let a =
                    render_dsprites_like(&setting([shape, 1, orientation, 0, 0])).unwrap();
                let b = render_dsprites_like(&setting([shape, 1, orientation + 20, 0, 0]))
                    .unwrap();
                let mut agree = 0usize;
                let mut total = 0usize;
                for y in 0..IMAGE_SIZE {
                    for x in 0..IMAGE_SIZE {
                        let rx = 31usize.wrapping_sub(x);
                        let ry = 31usize.wrapping_sub(y);
                        let rotated = if rx < IMAGE_SIZE && ry < IMAGE_SIZE {
                            a.pixels[ry * IMAGE_SIZE + rx]
                        } else {
                            0
                        };
                        let direct = b.pixels[y * IMAGE_SIZE + x];
                        if direct > 0 || rotated > 0 {
                            total += 1;
                            if direct == rotated {
                                agree += 1;
                            }
                        }
                    }
                }
                assert!(total > 0);
                let ratio = agree as f64 / total as f64;
                assert!(
                    ratio >= 0.95,
                    "shape {shape} orientation {orientation}: agreement {ratio:.3}"
                );
            }
        }
    }

    #[test]
    fn rejects_settings_from_the_wrong_space() {
        assert!(render_dsprites_like(&FactorSetting::new(vec![0, 0, 0])).is_err());
        assert!(render_dsprites_like(&setting([0, 0, 40, 0, 0])).is_err());
    }

    #[test]
    fn shapes_are_pairwise_distinguishable() {
        let imgs: Vec<_> = (0..3)
            .map(|s| render_dsprites_like(&setting([s, 4, 0, 15, 15])).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                let diff = imgs[a]
                    .pixels
                    .iter()
                    .zip(&imgs[b].pixels)
                    .filter(|(x, y)| x != y)
                    .count();
                assert!(diff > 50, "shapes {a} and {b} differ by only {diff} px");
            }
        }
    }
}
