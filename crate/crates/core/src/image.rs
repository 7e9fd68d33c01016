use serde::Serialize;

use crate::{Error, Result};

/// A single-channel image of scalar intensities, stored row-major.
///
/// Samples are finite and non-negative. The upper bound depends on the
/// dynamic range in use and is checked when the image enters a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
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
        for (i, &v) in data.iter().enumerate() {
            let (x, y) = (i % width, i / width);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample { x, y });
            }
            if v < 0.0 {
                return Err(Error::SampleOutOfRange {
                    x,
                    y,
                    value: v,
                    max: f64::INFINITY,
                });
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel in row-major
    /// order.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Maps 8-bit samples into `[0, 1]` by `v / 255`.
    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            data.iter().map(|&v| f64::from(v) / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Multiplies every sample by `factor`, e.g. 255 to move from the unit
    /// range into 8-bit mode.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Checks that every sample lies in `[0, max]`.
    pub fn check_range(&self, max: f64) -> Result<()> {
        match self.data.iter().position(|&v| v > max) {
            Some(i) => Err(Error::SampleOutOfRange {
                x: i % self.width,
                y: i / self.width,
                value: self.data[i],
                max,
            }),
            None => Ok(()),
        }
    }

    /// Quantizes to 8 bits with round-half-up on the 0..=255 scale.
    ///
    /// Samples are expected in `[0, 1]`; anything outside saturates.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }
}

pub(crate) fn quantize_u8(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// A per-pixel scalar map on the valid grid. Values are unrestricted and may
/// be NaN where a pixel carries no value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Map {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Map {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Mean over finite entries; `None` if there are none.
    pub fn finite_mean(&self) -> Option<f64> {
        let (sum, n) = self
            .data
            .iter()
            .filter(|v| v.is_finite())
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn same_shape(&self, other: &Map) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_data() {
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0; 3]),
            Err(Error::DataLength { len: 3, .. })
        ));
        assert!(matches!(
            GrayImage::new(2, 1, vec![0.0, f64::NAN]),
            Err(Error::NonFiniteSample { x: 1, y: 0 })
        ));
        assert!(matches!(
            GrayImage::new(1, 1, vec![-0.1]),
            Err(Error::SampleOutOfRange { .. })
        ));
        assert!(GrayImage::new(0, 4, vec![]).is_err());
    }

    #[test]
    fn range_check_reports_first_offender() {
        let img = GrayImage::new(3, 1, vec![0.0, 1.5, 2.0]).unwrap();
        assert_eq!(
            img.check_range(1.0),
            Err(Error::SampleOutOfRange {
                x: 1,
                y: 0,
                value: 1.5,
                max: 1.0
            })
        );
        assert!(img.check_range(255.0).is_ok());
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(221.5 / 255.0), 222);
    }

    #[test]
    fn finite_mean_skips_nan() {
        let m = Map::new(3, 1, vec![1.0, f64::NAN, 0.0]).unwrap();
        assert_eq!(m.finite_mean(), Some(0.5));
        assert_eq!(Map::filled(2, 1, f64::NAN).finite_mean(), None);
    }
}
