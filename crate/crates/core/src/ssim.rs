use serde::Serialize;

use crate::{
    is_non_integer, local_stats, Error, GrayImage, LocalStats, Map, Result, SsimParams,
    UndefinedPolicy,
};

/// `num / den` with the convention `0 / 0 = 1`. A non-zero numerator over a
/// zero denominator has no value and yields NaN.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::NAN
        }
    } else {
        num / den
    }
}

/// Caps rounding excursions above the analytic maximum of 1. NaN passes
/// through.
pub(crate) fn at_most_one(v: f64) -> f64 {
    if v > 1.0 {
        1.0
    } else {
        v
    }
}

fn pointwise(stats: &LocalStats, f: impl Fn(usize) -> f64) -> Map {
    let data = (0..stats.len()).map(f).collect();
    Map {
        width: stats.valid_width(),
        height: stats.valid_height(),
        data,
    }
}

/// `l = (2 μA μB + C1) / (μA² + μB² + C1)`.
pub fn luminance_component(stats: &LocalStats, params: &SsimParams) -> Map {
    let c1 = params.c1();
    let (ma, mb) = (&stats.mu_a.data, &stats.mu_b.data);
    pointwise(stats, |i| {
        at_most_one(ratio(
            2.0 * ma[i] * mb[i] + c1,
            ma[i] * ma[i] + mb[i] * mb[i] + c1,
        ))
    })
}

/// `c = (2 σA σB + C2) / (σA² + σB² + C2)`.
pub fn contrast_component(stats: &LocalStats, params: &SsimParams) -> Map {
    let c2 = params.c2();
    let (va, vb) = (&stats.var_a.data, &stats.var_b.data);
    pointwise(stats, |i| {
        at_most_one(ratio(2.0 * (va[i] * vb[i]).sqrt() + c2, va[i] + vb[i] + c2))
    })
}

/// `s = (σAB + C3) / (σA σB + C3)`. With `C3 = 0` this is the Pearson
/// correlation of the two weighted windows.
pub fn structure_component(stats: &LocalStats, params: &SsimParams) -> Map {
    let c3 = params.c3();
    let (va, vb, cov) = (&stats.var_a.data, &stats.var_b.data, &stats.cov.data);
    pointwise(stats, |i| {
        at_most_one(ratio(cov[i] + c3, (va[i] * vb[i]).sqrt() + c3))
    })
}

/// Component maps, the combined SSIM map and the undefined-pixel mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsimMaps {
    pub l: Map,
    pub c: Map,
    pub s: Map,
    pub ssim: Map,
    /// Pixels where a factor had no real power (negative base with a
    /// non-integer exponent) or no value at all (non-zero over zero).
    pub undefined: Vec<bool>,
}

impl SsimMaps {
    pub fn width(&self) -> usize {
        self.ssim.width
    }

    pub fn height(&self) -> usize {
        self.ssim.height
    }

    pub fn undefined_count(&self) -> usize {
        self.undefined.iter().filter(|&&u| u).count()
    }

    pub fn first_undefined(&self) -> Option<(usize, usize)> {
        let w = self.width();
        self.undefined
            .iter()
            .position(|&u| u)
            .map(|i| (i % w, i / w))
    }

    fn enforce(self, policy: UndefinedPolicy) -> Result<Self> {
        if policy == UndefinedPolicy::Reject {
            if let Some((x, y)) = self.first_undefined() {
                return Err(Error::UndefinedPixels {
                    count: self.undefined_count(),
                    x,
                    y,
                });
            }
        }
        Ok(self)
    }
}

enum Power {
    Real(f64),
    /// Negative base, non-integer exponent.
    Complex {
        signed_magnitude: f64,
    },
    None,
}

fn power(base: f64, exponent: f64) -> Power {
    if base.is_nan() {
        return Power::None;
    }
    if exponent == 1.0 {
        return Power::Real(base);
    }
    let v = if base < 0.0 {
        if is_non_integer(exponent) {
            return Power::Complex {
                signed_magnitude: -(-base).powf(exponent),
            };
        }
        base.powi(exponent.round() as i32)
    } else {
        base.powf(exponent)
    };
    if v.is_finite() {
        Power::Real(v)
    } else {
        Power::None
    }
}

/// Combines component maps as `l^α · c^β · s^γ`.
///
/// A factor with a negative base and a non-integer exponent is handled per
/// `params.undefined_policy`. Unit exponents reproduce the plain product
/// bit for bit.
pub fn ssim_full(l: &Map, c: &Map, s: &Map, params: &SsimParams) -> Result<SsimMaps> {
    l.same_shape(c)?;
    l.same_shape(s)?;
    let policy = params.undefined_policy;
    let exps = [params.alpha, params.beta, params.gamma];
    let mut undefined = vec![false; l.len()];
    let mut out = Vec::with_capacity(l.len());
    for (i, flag) in undefined.iter_mut().enumerate() {
        let mut product = 1.0;
        let mut has_value = true;
        for (base, exp) in [l.data[i], c.data[i], s.data[i]].into_iter().zip(exps) {
            match power(base, exp) {
                Power::Real(v) => product *= v,
                Power::Complex { signed_magnitude } => {
                    *flag = true;
                    if policy == UndefinedPolicy::SignedMagnitude {
                        product *= signed_magnitude;
                    } else {
                        has_value = false;
                    }
                }
                Power::None => {
                    *flag = true;
                    has_value = false;
                }
            }
        }
        out.push(if has_value { product } else { f64::NAN });
    }
    let maps = SsimMaps {
        ssim: Map::new(l.width, l.height, out)?,
        l: l.clone(),
        c: c.clone(),
        s: s.clone(),
        undefined,
    };
    maps.enforce(policy)
}

/// The single-fraction form
/// `(2μAμB + C1)(2σAB + C2) / ((μA² + μB² + C1)(σA² + σB² + C2))`,
/// valid for unit exponents and `C3 = C2 / 2`. Component maps are filled in
/// for diagnostics.
///
/// With a zero constant the two factors are evaluated separately under the
/// `0 / 0 = 1` convention.
pub fn ssim_simplified(stats: &LocalStats, params: &SsimParams) -> Result<SsimMaps> {
    let (c1, c2) = (params.c1(), params.c2());
    let (ma, mb) = (&stats.mu_a.data, &stats.mu_b.data);
    let (va, vb, cov) = (&stats.var_a.data, &stats.var_b.data, &stats.cov.data);
    let ssim = pointwise(stats, |i| {
        let lum_num = 2.0 * ma[i] * mb[i] + c1;
        let lum_den = ma[i] * ma[i] + mb[i] * mb[i] + c1;
        let cs_num = 2.0 * cov[i] + c2;
        let cs_den = va[i] + vb[i] + c2;
        at_most_one(if c1 > 0.0 && c2 > 0.0 {
            (lum_num * cs_num) / (lum_den * cs_den)
        } else {
            ratio(lum_num, lum_den) * ratio(cs_num, cs_den)
        })
    });
    let undefined = ssim.data.iter().map(|v| v.is_nan()).collect();
    let maps = SsimMaps {
        l: luminance_component(stats, params),
        c: contrast_component(stats, params),
        s: structure_component(stats, params),
        ssim,
        undefined,
    };
    maps.enforce(params.undefined_policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pooled {
    pub mssim: f64,
    pub defined: usize,
    pub undefined: usize,
}

/// Arithmetic mean of the SSIM map over pixels that carry a value.
///
/// Pixels flagged under the flag-and-nan policy hold NaN and are skipped;
/// pixels flagged under signed-magnitude hold a substitute and are counted.
/// `undefined` reports every flagged pixel either way.
pub fn pool_mssim(maps: &SsimMaps) -> Result<Pooled> {
    let (sum, defined) = maps
        .ssim
        .data
        .iter()
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if defined == 0 {
        return Err(Error::AllUndefined(maps.ssim.len()));
    }
    Ok(Pooled {
        mssim: sum / defined as f64,
        defined,
        undefined: maps.undefined_count(),
    })
}

/// Everything produced by one comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub params: SsimParams,
    pub mssim: f64,
    pub mean_l: f64,
    pub mean_c: f64,
    pub mean_s: f64,
    pub defined_count: usize,
    pub undefined_count: usize,
    #[serde(skip)]
    pub maps: SsimMaps,
}

impl ComparisonReport {
    pub fn undefined_fraction(&self) -> f64 {
        self.undefined_count as f64 / self.maps.ssim.len() as f64
    }
}

/// Runs the full pipeline on two equally sized images.
///
/// Samples must lie in `[0, params.dynamic_range]`. Unit exponents with the
/// default `C3` use the single-fraction form; anything else goes through the
/// component product.
pub fn compare(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<ComparisonReport> {
    let kernel = params.kernel()?;
    a.check_range(params.dynamic_range)?;
    b.check_range(params.dynamic_range)?;
    let stats = local_stats(a, b, &kernel)?;
    let maps = if params.is_simplified() {
        ssim_simplified(&stats, params)?
    } else {
        let l = luminance_component(&stats, params);
        let c = contrast_component(&stats, params);
        let s = structure_component(&stats, params);
        ssim_full(&l, &c, &s, params)?
    };
    let pooled = pool_mssim(&maps)?;
    let mean = |m: &Map| m.finite_mean().unwrap_or(f64::NAN);
    Ok(ComparisonReport {
        params: params.clone(),
        mssim: pooled.mssim,
        mean_l: mean(&maps.l),
        mean_c: mean(&maps.c),
        mean_s: mean(&maps.s),
        defined_count: pooled.defined,
        undefined_count: pooled.undefined,
        maps,
    })
}
