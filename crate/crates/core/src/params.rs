use serde::Serialize;

use crate::{gaussian_kernel, Error, Kernel, Result};

/// What to do with pixels whose value has no real result, i.e. a negative
/// structure term raised to a non-integer exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndefinedPolicy {
    /// Mark the pixel, store NaN, and leave it out of pooling.
    #[default]
    FlagAndNan,
    /// Mark the pixel and store `sign(s) * |s|^gamma` in its place.
    SignedMagnitude,
    /// Abort the comparison.
    Reject,
}

/// Weighting used for local statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelShape {
    #[default]
    Gaussian,
    /// Equal weights over the window.
    Uniform,
}

/// Constants, exponents and window settings for an SSIM evaluation.
///
/// `C1`, `C2` and `C3` are derived on demand from `k1`, `k2` and
/// `dynamic_range` so they never go stale. `C3` follows `C2 / 2` unless
/// `c3_override` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub window_size: usize,
    pub sigma: f64,
    pub kernel_shape: KernelShape,
    pub c3_override: Option<f64>,
    pub undefined_policy: UndefinedPolicy,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            window_size: 11,
            sigma: 1.5,
            kernel_shape: KernelShape::Gaussian,
            c3_override: None,
            undefined_policy: UndefinedPolicy::FlagAndNan,
        }
    }
}

impl SsimParams {
    /// Defaults for 8-bit data in `[0, 255]`.
    pub fn eight_bit() -> Self {
        Self {
            dynamic_range: 255.0,
            ..Self::default()
        }
    }

    /// All stabilizing constants set to zero.
    pub fn zero_constants() -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            c3_override: Some(0.0),
            ..Self::default()
        }
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    pub fn c3(&self) -> f64 {
        self.c3_override.unwrap_or_else(|| self.c2() / 2.0)
    }

    /// Unit exponents with `C3 = C2 / 2`: the setting under which the full
    /// product collapses to the single-fraction form.
    pub fn is_simplified(&self) -> bool {
        self.alpha == 1.0
            && self.beta == 1.0
            && self.gamma == 1.0
            && self.c3_override.is_none_or(|c3| c3 == self.c2() / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size.is_multiple_of(2) {
            return Err(Error::InvalidWindow(self.window_size));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSigma(self.sigma));
        }
        let checks = [
            ("k1", self.k1, self.k1 >= 0.0),
            ("k2", self.k2, self.k2 >= 0.0),
            (
                "dynamic_range",
                self.dynamic_range,
                self.dynamic_range > 0.0,
            ),
            ("c3", self.c3(), self.c3() >= 0.0),
            ("alpha", self.alpha, true),
            ("beta", self.beta, true),
            ("gamma", self.gamma, true),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {value}")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel> {
        self.validate()?;
        match self.kernel_shape {
            KernelShape::Gaussian => gaussian_kernel(self.window_size, self.sigma),
            KernelShape::Uniform => Kernel::uniform(self.window_size),
        }
    }
}
