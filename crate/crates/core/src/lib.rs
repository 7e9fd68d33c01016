//! Structural similarity (SSIM) computation and forensics.
//!
//! The crate computes Gaussian-windowed local statistics, the luminance,
//! contrast and structure component maps, the combined SSIM map and its
//! pooled mean (MSSIM). Around that core it provides the tools needed to
//! probe the index's failure modes: closed-form component minima and witness
//! image pairs, detection of undefined exponentiation, synthetic pattern
//! generators, grayscale and YCbCr color strategies, the local MSE identity
//! with zero-constant SSIM, and a heatmap renderer for SSIM maps.
//!
//! All images are held at full precision. The canonical range is `[0, 1]`
//! with dynamic range `L = 1`; 8-bit data is mapped by `v / 255`.
//!
//! ```
//! use ssim_forensics::{compare, patterns, SsimParams};
//!
//! let black = patterns::constant(32, 32, 0.0).unwrap();
//! let near_black = patterns::constant(32, 32, 2.0 / 255.0).unwrap();
//! let report = compare(&black, &near_black, &SsimParams::default()).unwrap();
//! assert!((report.mssim - 0.61914).abs() < 1e-5);
//! ```

pub mod color;
mod error;
pub mod extremal;
mod fit;
pub mod heatmap;
mod image;
mod kernel;
pub mod mse;
mod params;
pub mod patterns;
mod ssim;
mod stats;

pub use error::{Error, Result};
pub use fit::{linear_fit, quadratic_fit, PolyFit};
pub use image::{GrayImage, Map};
pub use kernel::{gaussian_kernel, Kernel};
pub use params::{KernelShape, SsimParams, UndefinedPolicy};
pub use ssim::{
    compare, contrast_component, luminance_component, pool_mssim, ssim_full, ssim_simplified,
    structure_component, ComparisonReport, Pooled, SsimMaps,
};
pub use stats::{local_stats, LocalStats};

/// True when `exponent` is not an integer, within `1e-9`.
///
/// A negative base raised to such an exponent has no real value.
pub fn is_non_integer(exponent: f64) -> bool {
    (exponent - exponent.round()).abs() > 1e-9
}
