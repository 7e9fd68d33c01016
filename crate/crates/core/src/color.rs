//! Color-to-grayscale reduction and channel-weighted YCbCr SSIM.
//!
//! Inputs are taken as sRGB-encoded values in `[0, 1]` and used as is; no
//! linearization is applied.

use serde::Serialize;

use crate::image::quantize_u8;
use crate::{compare, ComparisonReport, Error, GrayImage, Result, SsimParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                len: data.len(),
            });
        }
        for (i, px) in data.iter().enumerate() {
            let (x, y) = (i % width, i / width);
            for &v in px {
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { x, y });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::SampleOutOfRange {
                        x,
                        y,
                        value: v,
                        max: 1.0,
                    });
                }
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn from_u8(width: usize, height: usize, rgb: &[u8]) -> Result<Self> {
        let data = rgb
            .chunks_exact(3)
            .map(|p| [p[0], p[1], p[2]].map(|v| f64::from(v) / 255.0))
            .collect();
        Self::new(width, height, data)
    }

    /// Neutral color image with `r = g = b` equal to the gray value.
    pub fn from_gray(gray: &GrayImage) -> Result<Self> {
        Self::new(
            gray.width(),
            gray.height(),
            gray.data().iter().map(|&v| [v; 3]).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|px| px.map(quantize_u8))
            .collect()
    }

    fn channel(&self, f: impl Fn([f64; 3]) -> f64) -> Result<GrayImage> {
        GrayImage::new(
            self.width,
            self.height,
            self.data.iter().map(|&px| f(px)).collect(),
        )
    }
}

/// Luma weights for a color-to-gray reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrayCoefficients {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl GrayCoefficients {
    /// Weights with a green coefficient of 0.5810.
    pub const GREEN_0581: Self = Self {
        r: 0.2989,
        g: 0.5810,
        b: 0.1140,
    };
    /// Rec. 601 weights as used by common `rgb2gray` routines.
    pub const REC601: Self = Self {
        r: 0.2989,
        g: 0.5870,
        b: 0.1140,
    };

    pub fn apply(&self, [r, g, b]: [f64; 3]) -> f64 {
        self.r * r + self.g * g + self.b * b
    }
}

impl Default for GrayCoefficients {
    fn default() -> Self {
        Self::REC601
    }
}

/// `Y = cr·r + cg·g + cb·b`, clamped to `[0, 1]`. With `quantize` the result
/// is rounded half-up to the nearest 8-bit level, as an 8-bit `rgb2gray`
/// pipeline would.
pub fn rgb_to_gray(img: &RgbImage, coeffs: GrayCoefficients, quantize: bool) -> Result<GrayImage> {
    if coeffs.r < 0.0 || coeffs.g < 0.0 || coeffs.b < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gray coefficients must be non-negative, got {coeffs:?}"
        )));
    }
    img.channel(|px| {
        let y = coeffs.apply(px).clamp(0.0, 1.0);
        if quantize {
            f64::from(quantize_u8(y)) / 255.0
        } else {
            y
        }
    })
}

/// Full-range BT.601 YCbCr with chroma offset into `[0, 1]`.
pub fn to_ycbcr([r, g, b]: [f64; 3]) -> [f64; 3] {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 0.5 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 0.5 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [y, cb, cr].map(|v| v.clamp(0.0, 1.0))
}

pub const YCBCR_WEIGHTS: [f64; 3] = [0.8, 0.1, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct YcbcrComparison {
    /// `0.8·SSIM_Y + 0.1·SSIM_Cr + 0.1·SSIM_Cb`.
    pub weighted: f64,
    pub y: ComparisonReport,
    pub cr: ComparisonReport,
    pub cb: ComparisonReport,
}

/// Runs the comparison separately on Y, Cr and Cb and mixes the pooled
/// scores with weights 0.8 / 0.1 / 0.1.
pub fn weighted_ycbcr_ssim(
    a: &RgbImage,
    b: &RgbImage,
    params: &SsimParams,
) -> Result<YcbcrComparison> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    let scale = params.dynamic_range;
    let plane = |img: &RgbImage, k: usize| img.channel(|px| to_ycbcr(px)[k])?.scaled(scale);
    let run = |k: usize| compare(&plane(a, k)?, &plane(b, k)?, params);
    let (y, cb, cr) = (run(0)?, run(1)?, run(2)?);
    let [wy, wcr, wcb] = YCBCR_WEIGHTS;
    Ok(YcbcrComparison {
        weighted: wy * y.mssim + wcr * cr.mssim + wcb * cb.mssim,
        y,
        cr,
        cb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl Channel {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    pub rgb: [f64; 3],
    pub mssim: f64,
    pub iterations: usize,
}

pub const PROBE_TOLERANCE: f64 = 5e-4;
const PROBE_SIZE: usize = 16;

fn gray_path_against_white(rgb: [f64; 3], coeffs: GrayCoefficients) -> Result<f64> {
    let white = RgbImage::constant(PROBE_SIZE, PROBE_SIZE, [1.0; 3])?;
    let probe = RgbImage::constant(PROBE_SIZE, PROBE_SIZE, rgb)?;
    let a = rgb_to_gray(&white, coeffs, true)?;
    let b = rgb_to_gray(&probe, coeffs, true)?;
    Ok(compare(&a, &b, &SsimParams::default())?.mssim)
}

/// MSSIM of a constant color against white through the default grayscale
/// path (Rec. 601 weights, 8-bit quantization).
pub fn gray_mssim_against_white(rgb: [f64; 3]) -> Result<f64> {
    gray_path_against_white(rgb, GrayCoefficients::REC601)
}

/// Lowers one channel of white until the grayscale-path MSSIM against white
/// lands within [`PROBE_TOLERANCE`] of `target`, by bisection on `[0, 1]`.
pub fn equiluminant_probe(channel: Channel, target: f64) -> Result<ProbeResult> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "probe target must lie in (0, 1), got {target}"
        )));
    }
    let k = channel.index();
    let color = |v: f64| {
        let mut rgb = [1.0; 3];
        rgb[k] = v;
        rgb
    };
    let eval = |v: f64| gray_mssim_against_white(color(v));

    let floor = eval(0.0)?;
    if floor > target + PROBE_TOLERANCE {
        return Err(Error::Unreachable {
            target,
            reason: format!("{channel:?} at 0 still scores {floor}"),
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for iterations in 1..=64 {
        let mid = 0.5 * (lo + hi);
        let mssim = eval(mid)?;
        if (mssim - target).abs() < PROBE_TOLERANCE {
            return Ok(ProbeResult {
                rgb: color(mid),
                mssim,
                iterations,
            });
        }
        if mssim < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Unreachable {
        target,
        reason: format!("no {channel:?} level lands within {PROBE_TOLERANCE}"),
    })
}
