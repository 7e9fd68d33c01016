//! Color rendering of SSIM and component maps.
//!
//! `[0, 1]` is a gray ramp from black to white. Negative values run from
//! green just below zero to red at −1. Pixels without a value are drawn in a
//! sentinel blue that the ramp never produces.

use serde::Serialize;

use crate::image::quantize_u8;
use crate::{Error, Map, Result};

pub const SENTINEL: [f64; 3] = [0.0, 0.0, 1.0];
pub const GREEN: [f64; 3] = [0.0, 1.0, 0.0];
pub const RED: [f64; 3] = [1.0, 0.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendAnchor {
    pub value: f64,
    pub rgb: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Legend {
    pub anchors: Vec<LegendAnchor>,
    pub undefined: [f64; 3],
    pub negative_interpolation: &'static str,
}

impl Default for Legend {
    fn default() -> Self {
        let anchor = |value, rgb| LegendAnchor { value, rgb };
        Self {
            anchors: vec![
                anchor(-1.0, RED),
                anchor(-f64::EPSILON, GREEN),
                anchor(0.0, [0.0; 3]),
                anchor(1.0, [1.0; 3]),
            ],
            undefined: SENTINEL,
            negative_interpolation: "linear-rgb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
    pub legend: Legend,
}

impl Heatmap {
    /// Interleaved 8-bit RGB, rounded half-up.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|px| px.map(quantize_u8))
            .collect()
    }

    pub fn chromatic_count(&self) -> usize {
        self.pixels
            .iter()
            .filter(|[r, g, b]| r != g || g != b)
            .count()
    }
}

/// Color for a single value; `None` for the sentinel.
pub fn color_of(value: Option<f64>) -> [f64; 3] {
    match value {
        None => SENTINEL,
        Some(v) if v >= 0.0 => [v; 3],
        Some(v) => {
            let t = -v;
            [t, 1.0 - t, 0.0]
        }
    }
}

/// Maps each pixel to a color. NaN or masked pixels get the sentinel;
/// defined values must lie in `[−1, 1]`.
pub fn render(map: &Map, undefined: Option<&[bool]>) -> Result<Heatmap> {
    if let Some(mask) = undefined {
        if mask.len() != map.len() {
            return Err(Error::DataLength {
                width: map.width,
                height: map.height,
                len: mask.len(),
            });
        }
    }
    let pixels = map
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let masked = undefined.is_some_and(|m| m[i]) || v.is_nan();
            if masked {
                return Ok(color_of(None));
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::ValueOutOfRange {
                    x: i % map.width,
                    y: i / map.width,
                    value: v,
                });
            }
            Ok(color_of(Some(v)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        width: map.width,
        height: map.height,
        pixels,
        legend: Legend::default(),
    })
}

/// Recovers the value of an achromatic 8-bit pixel.
pub fn gray_level_to_value(level: u8) -> f64 {
    f64::from(level) / 255.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn anchors() {
        assert_eq!(color_of(Some(1.0)), [1.0; 3]);
        assert_eq!(color_of(Some(0.0)), [0.0; 3]);
        assert_eq!(color_of(Some(-1.0)), RED);
        assert!(dist(color_of(Some(-0.001)), GREEN) <= 0.01);
        assert_eq!(color_of(None), SENTINEL);
    }

    #[test]
    fn anchor_set_is_injective() {
        let colors: Vec<_> = [-1.0, -0.5, 0.0, 0.5, 1.0]
            .map(|v| color_of(Some(v)))
            .to_vec();
        for i in 0..colors.len() {
            for j in i + 1..colors.len() {
                assert_ne!(colors[i], colors[j]);
            }
        }
    }

    #[test]
    fn sentinel_is_off_ramp() {
        for i in -1000..=1000 {
            assert_ne!(color_of(Some(i as f64 / 1000.0)), SENTINEL);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let m = Map::new(2, 1, vec![0.5, 1.2]).unwrap();
        assert_eq!(
            render(&m, None),
            Err(Error::ValueOutOfRange {
                x: 1,
                y: 0,
                value: 1.2
            })
        );
        // Masked pixels are not range-checked.
        assert!(render(&m, Some(&[false, true])).is_ok());
    }

    #[test]
    fn gray_branch_inverts_at_eight_bits() {
        for level in 0..=255u8 {
            let v = f64::from(level) / 255.0;
            let h = render(&Map::filled(1, 1, v), None).unwrap();
            let rgb = h.to_rgb8();
            assert_eq!(rgb, vec![level; 3]);
            assert_eq!(gray_level_to_value(rgb[0]), v);
        }
    }

    #[test]
    fn nan_renders_sentinel() {
        let h = render(&Map::new(2, 1, vec![f64::NAN, 0.2]).unwrap(), None).unwrap();
        assert_eq!(h.pixels[0], SENTINEL);
        assert_eq!(h.chromatic_count(), 1);
    }
}
