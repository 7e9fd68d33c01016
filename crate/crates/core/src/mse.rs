//! Local MSE on the SSIM footprint, zero-constant SSIM, PSNR and the
//! regression that relates them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Serialize, Serializer};

use crate::patterns::{self, gaussian_blur};
use crate::ssim::{at_most_one, ratio};
use crate::{
    linear_fit, local_stats, quadratic_fit, Error, GrayImage, Kernel, LocalStats, Map, Result,
    SsimParams,
};

/// `MSE* = σ²A + σ²B − 2σAB + (μA − μB)²` per window.
pub fn local_mse(stats: &LocalStats) -> Map {
    let (ma, mb) = (&stats.mu_a.data, &stats.mu_b.data);
    let (va, vb, cov) = (&stats.var_a.data, &stats.var_b.data, &stats.cov.data);
    let data = (0..stats.len())
        .map(|i| (va[i] + vb[i] - 2.0 * cov[i] + (ma[i] - mb[i]).powi(2)).max(0.0))
        .collect();
    Map {
        width: stats.valid_width(),
        height: stats.valid_height(),
        data,
    }
}

/// `Σ w (a − b)²` per valid window, summed directly from the pixels.
pub fn direct_local_mse(a: &GrayImage, b: &GrayImage, kernel: &Kernel) -> Result<Map> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let diff = GrayImage::new(
        a.width(),
        a.height(),
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).powi(2))
            .collect(),
    )?;
    // The weighted mean of the squared difference is the local mean of the
    // difference image.
    Ok(local_stats(&diff, &diff, kernel)?.mu_a)
}

/// Largest pointwise gap between the moment identity and direct summation.
pub fn mse_identity_residual(a: &GrayImage, b: &GrayImage, kernel: &Kernel) -> Result<f64> {
    let identity = local_mse(&local_stats(a, b, kernel)?);
    let direct = direct_local_mse(a, b, kernel)?;
    Ok(identity
        .data
        .iter()
        .zip(&direct.data)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsimStar {
    pub values: Map,
    /// Non-zero over zero in either factor; the value is NaN.
    pub undefined: Vec<bool>,
    /// A factor was `0 / 0` and was taken as 1 (zero-variance or all-black
    /// windows): the division the stabilizing constants exist to avoid.
    pub degenerate: Vec<bool>,
}

impl SsimStar {
    pub fn undefined_count(&self) -> usize {
        self.undefined.iter().filter(|&&u| u).count()
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&u| u).count()
    }

    pub fn mean(&self) -> Option<f64> {
        self.values.finite_mean()
    }
}

/// SSIM in single-fraction form with every constant set to zero.
pub fn ssim_star(stats: &LocalStats) -> SsimStar {
    let (ma, mb) = (&stats.mu_a.data, &stats.mu_b.data);
    let (va, vb, cov) = (&stats.var_a.data, &stats.var_b.data, &stats.cov.data);
    let n = stats.len();
    let mut values = Vec::with_capacity(n);
    let mut degenerate = Vec::with_capacity(n);
    for i in 0..n {
        let lum_den = ma[i] * ma[i] + mb[i] * mb[i];
        let cs_den = va[i] + vb[i];
        degenerate.push(lum_den == 0.0 || cs_den == 0.0);
        values.push(at_most_one(
            ratio(2.0 * ma[i] * mb[i], lum_den) * ratio(2.0 * cov[i], cs_den),
        ));
    }
    SsimStar {
        undefined: values.iter().map(|v| v.is_nan()).collect(),
        values: Map {
            width: stats.valid_width(),
            height: stats.valid_height(),
            data: values,
        },
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// The images are identical.
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// `10 · log10(L² / MSE)` over the whole image.
pub fn psnr(a: &GrayImage, b: &GrayImage, dynamic_range: f64) -> Result<Psnr> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(if mse == 0.0 {
        Psnr::Infinite
    } else {
        Psnr::Finite(10.0 * (dynamic_range * dynamic_range / mse).log10())
    })
}

/// Quality of the fit of `MSE*` as a quadratic in `1 − SSIM*`, with the
/// plain linear fit alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub r_squared: f64,
    pub linear_r_squared: f64,
    pub samples: usize,
    /// Intercept, linear and quadratic terms of the quadratic model.
    pub coefficients: Vec<f64>,
}

/// Fits `MSE* ≈ a + b (1 − SSIM*) + c (1 − SSIM*)²` over sample pairs where
/// both values are finite.
pub fn correlate(ssim_star: &[f64], mse_star: &[f64]) -> Result<CorrelationReport> {
    if ssim_star.len() != mse_star.len() {
        return Err(Error::InvalidParameter(format!(
            "{} SSIM* samples against {} MSE* samples",
            ssim_star.len(),
            mse_star.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = ssim_star
        .iter()
        .zip(mse_star)
        .filter(|(s, m)| s.is_finite() && m.is_finite())
        .map(|(s, m)| (1.0 - s, *m))
        .unzip();
    let quad = quadratic_fit(&x, &y)?;
    let lin = linear_fit(&x, &y)?;
    Ok(CorrelationReport {
        r_squared: quad.r_squared,
        linear_r_squared: lin.r_squared,
        samples: quad.samples,
        coefficients: quad.coefficients,
    })
}

/// Zero-constant SSIM and local MSE for one pair, pooled and per window.
#[derive(Debug, Clone, PartialEq)]
pub struct StarMeasurement {
    /// Mean of SSIM* over windows that carry a value.
    pub ssim_star: f64,
    /// Mean of MSE* over all windows.
    pub mse_star: f64,
    pub local: SsimStar,
    pub local_mse: Map,
}

pub fn measure(a: &GrayImage, b: &GrayImage, params: &SsimParams) -> Result<StarMeasurement> {
    let stats = local_stats(a, b, &params.kernel()?)?;
    let local = ssim_star(&stats);
    let local_mse = local_mse(&stats);
    Ok(StarMeasurement {
        ssim_star: local
            .mean()
            .ok_or(Error::AllUndefined(local.values.len()))?,
        mse_star: local_mse.finite_mean().unwrap_or(f64::NAN),
        local,
        local_mse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distortion {
    Noise,
    Blur,
    Dither,
    LuminanceShift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPair {
    pub distortion: Distortion,
    pub level: u32,
    pub base_index: usize,
    pub reference: GrayImage,
    pub distorted: GrayImage,
}

pub const CORPUS_SEED: u64 = 0x551A_2020;
pub const CORPUS_SIZE: usize = 64;
const CORPUS_BASES: usize = 4;
const CORPUS_LEVELS: u32 = 5;

/// Smooth random texture: blurred white noise rescaled to mean 0.5 and
/// standard deviation 0.15, clamped to `[0, 1]`.
pub fn smooth_texture(rng: &mut ChaCha8Rng, size: usize) -> Result<GrayImage> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let raw: Vec<f64> = (0..size * size).map(|_| normal.sample(rng)).collect();
    // Shift into [0, 1] for the blur, then restore zero mean.
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unit = GrayImage::new(
        size,
        size,
        raw.iter().map(|v| (v - lo) / (hi - lo)).collect(),
    )?;
    let smooth = gaussian_blur(&unit, 2.0)?;
    let n = smooth.data().len() as f64;
    let mean = smooth.data().iter().sum::<f64>() / n;
    let sd = (smooth
        .data()
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    GrayImage::new(
        size,
        size,
        smooth
            .data()
            .iter()
            .map(|v| ((v - mean) / sd * 0.15 + 0.5).clamp(0.0, 1.0))
            .collect(),
    )
}

fn distort(
    rng: &mut ChaCha8Rng,
    base: &GrayImage,
    kind: Distortion,
    level: u32,
) -> Result<GrayImage> {
    let level = f64::from(level);
    match kind {
        Distortion::Noise => {
            let normal = Normal::new(0.0, 0.03 * level).expect("positive sd");
            GrayImage::new(
                base.width(),
                base.height(),
                base.data()
                    .iter()
                    .map(|v| (v + normal.sample(rng)).clamp(0.0, 1.0))
                    .collect(),
            )
        }
        Distortion::Blur => gaussian_blur(base, 0.5 * level),
        Distortion::Dither => Ok(patterns::dither_pair(base, 0.02 * level)?.0),
        Distortion::LuminanceShift => GrayImage::new(
            base.width(),
            base.height(),
            base.data()
                .iter()
                .map(|v| (v + 0.02 * level).min(1.0))
                .collect(),
        ),
    }
}

/// Deterministic corpus: four smooth textures, each distorted by every
/// listed kind at five strength levels.
pub fn distortion_corpus(seed: u64, kinds: &[Distortion]) -> Result<Vec<CorpusPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for base_index in 0..CORPUS_BASES {
        let reference = smooth_texture(&mut rng, CORPUS_SIZE)?;
        for &distortion in kinds {
            for level in 1..=CORPUS_LEVELS {
                let distorted = distort(&mut rng, &reference, distortion, level)?;
                out.push(CorpusPair {
                    distortion,
                    level,
                    base_index,
                    reference: reference.clone(),
                    distorted,
                });
            }
        }
    }
    Ok(out)
}

/// Distortions whose SSIM* tracks MSE* closely.
pub const STRUCTURAL_DISTORTIONS: [Distortion; 3] =
    [Distortion::Noise, Distortion::Blur, Distortion::Dither];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correspondence {
    /// One sample per image pair (pooled SSIM*, pooled MSE*).
    pub pooled: CorrelationReport,
    /// One sample per window across all pairs.
    pub local: CorrelationReport,
}

pub fn correspondence(pairs: &[CorpusPair], params: &SsimParams) -> Result<Correspondence> {
    let mut pooled = (Vec::new(), Vec::new());
    let mut local = (Vec::new(), Vec::new());
    for p in pairs {
        let m = measure(&p.reference, &p.distorted, params)?;
        pooled.0.push(m.ssim_star);
        pooled.1.push(m.mse_star);
        local.0.extend_from_slice(&m.local.values.data);
        local.1.extend_from_slice(&m.local_mse.data);
    }
    Ok(Correspondence {
        pooled: correlate(&pooled.0, &pooled.1)?,
        local: correlate(&local.0, &local.1)?,
    })
}

/// Image pairs with matched global means whose SSIM* lies in this band
/// take part in the PSNR comparison.
pub const PSNR_BAND: (f64, f64) = (0.2, 0.8);
/// Largest admissible difference between the global means of a pair.
pub const MEAN_MATCH_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsnrPoint {
    pub noise_sd: f64,
    pub ssim_star: f64,
    pub psnr_db: f64,
}

/// Linear fit of PSNR against pooled SSIM*.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsnrCorrespondence {
    pub r_squared: f64,
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<PsnrPoint>,
}

/// Adds Gaussian noise of increasing strength to smooth textures and fits
/// PSNR linearly against SSIM* over the pairs with matched means and SSIM*
/// inside [`PSNR_BAND`].
pub fn psnr_correspondence(seed: u64, params: &SsimParams) -> Result<PsnrCorrespondence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for _ in 0..CORPUS_BASES {
        let reference = smooth_texture(&mut rng, CORPUS_SIZE)?;
        for step in 1..=40 {
            let noise_sd = 0.01 * f64::from(step);
            let normal = Normal::new(0.0, noise_sd).expect("positive sd");
            let distorted = GrayImage::new(
                CORPUS_SIZE,
                CORPUS_SIZE,
                reference
                    .data()
                    .iter()
                    .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect(),
            )?;
            let mean = |img: &GrayImage| img.data().iter().sum::<f64>() / img.data().len() as f64;
            if (mean(&reference) - mean(&distorted)).abs() > MEAN_MATCH_TOLERANCE {
                continue;
            }
            let ssim_star = measure(&reference, &distorted, params)?.ssim_star;
            if !(PSNR_BAND.0..=PSNR_BAND.1).contains(&ssim_star) {
                continue;
            }
            let Psnr::Finite(psnr_db) = psnr(&reference, &distorted, params.dynamic_range)? else {
                continue;
            };
            points.push(PsnrPoint {
                noise_sd,
                ssim_star,
                psnr_db,
            });
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.ssim_star).collect();
    let y: Vec<f64> = points.iter().map(|p| p.psnr_db).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(PsnrCorrespondence {
        r_squared: fit.r_squared,
        slope: fit.coefficients[1],
        intercept: fit.coefficients[0],
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{compare, gaussian_kernel};
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn kernel() -> Kernel {
        gaussian_kernel(11, 1.5).unwrap()
    }

    #[test]
    fn local_mse_examples() {
        let (g, _) = patterns::gradient_pair(20, 20).unwrap();
        let s = local_stats(&g, &g, &kernel()).unwrap();
        assert!(local_mse(&s).data.iter().all(|&v| v == 0.0));

        let a = patterns::constant(16, 16, 0.3).unwrap();
        let b = patterns::constant(16, 16, 0.7).unwrap();
        let s = local_stats(&a, &b, &kernel()).unwrap();
        for v in local_mse(&s).data {
            close(v, 0.16, 1e-15);
        }
    }

    #[test]
    fn identity_matches_direct_sum_on_random_patches() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let a = GrayImage::from_fn(11, 11, |_, _| rng.random()).unwrap();
            let b = GrayImage::from_fn(11, 11, |_, _| rng.random()).unwrap();
            let k = kernel();
            // Oracle: Σ w (a − b)² written out over the single window.
            let direct: f64 = (0..11)
                .flat_map(|y| (0..11).map(move |x| (x, y)))
                .map(|(x, y)| k.weight(x, y) * (a.get(x, y) - b.get(x, y)).powi(2))
                .sum();
            let identity = local_mse(&local_stats(&a, &b, &k).unwrap()).data[0];
            close(identity, direct, 1e-12);
            assert!(mse_identity_residual(&a, &b, &k).unwrap() < 1e-12);
        }
    }

    #[test]
    fn star_examples() {
        let (g, _) = patterns::gradient_pair(24, 24).unwrap();
        let star = ssim_star(&local_stats(&g, &g, &kernel()).unwrap());
        assert!(star.values.data.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert_eq!(star.degenerate_count(), 0);

        let a = patterns::constant(16, 16, 0.2).unwrap();
        let b = patterns::constant(16, 16, 0.6).unwrap();
        let star = ssim_star(&local_stats(&a, &b, &kernel()).unwrap());
        assert_eq!(star.degenerate_count(), star.values.len());
        assert_eq!(star.undefined_count(), 0);
        close(star.values.data[0], 2.0 * 0.2 * 0.6 / (0.04 + 0.36), 1e-12);
    }

    #[test]
    fn star_approaches_default_as_constants_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = smooth_texture(&mut rng, 32).unwrap();
        let b = distort(&mut rng, &a, Distortion::Noise, 2).unwrap();
        let star = ssim_star(&local_stats(&a, &b, &kernel()).unwrap());
        let mut previous = f64::INFINITY;
        for scale in [1.0, 0.1, 0.01] {
            let p = SsimParams {
                k1: 0.01 * scale,
                k2: 0.03 * scale,
                ..SsimParams::default()
            };
            let r = compare(&a, &b, &p).unwrap();
            let gap = r
                .maps
                .ssim
                .data
                .iter()
                .zip(&star.values.data)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(gap < previous, "gap {gap} did not shrink at scale {scale}");
            previous = gap;
        }
    }

    #[test]
    fn star_close_to_default_on_mild_distortions() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let k = kernel();
        for _ in 0..5 {
            let a = smooth_texture(&mut rng, 48).unwrap();
            let wobble = smooth_texture(&mut rng, 48).unwrap();
            // Perturbation with standard deviation 0.01.
            let b = GrayImage::new(
                48,
                48,
                a.data()
                    .iter()
                    .zip(wobble.data())
                    .map(|(x, w)| (x + (w - 0.5) / 0.15 * 0.01).clamp(0.0, 1.0))
                    .collect(),
            )
            .unwrap();
            let stats = local_stats(&a, &b, &k).unwrap();
            let star = ssim_star(&stats);
            let r = compare(&a, &b, &SsimParams::default()).unwrap();
            for i in 0..stats.len() {
                if stats.var_a.data[i] > 0.01 && stats.var_b.data[i] > 0.01 {
                    close(star.values.data[i], r.maps.ssim.data[i], 1e-3);
                }
            }
        }
    }

    #[test]
    fn psnr_examples() {
        let a = patterns::constant(8, 8, 0.25).unwrap();
        let b = patterns::constant(8, 8, 0.75).unwrap();
        close(psnr(&a, &b, 1.0).unwrap().db(), 10.0 * 4f64.log10(), 1e-12);
        close(psnr(&a, &b, 1.0).unwrap().db(), 6.0206, 1e-4);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), Psnr::Infinite);
    }

    #[test]
    fn correlate_examples() {
        let s: Vec<f64> = (0..12).map(|i| 1.0 - i as f64 / 20.0).collect();
        let m: Vec<f64> = s
            .iter()
            .map(|v| 0.3 * (1.0 - v) + 2.0 * (1.0 - v).powi(2))
            .collect();
        close(correlate(&s, &m).unwrap().r_squared, 1.0, 1e-9);
        assert!(matches!(
            correlate(&[0.5, f64::NAN, 0.2], &[0.1, 0.2, 0.3]),
            Err(Error::InsufficientSamples { got: 2, .. })
        ));
    }

    #[test]
    fn white_reference_sweep_correlates() {
        let values: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        let (mut s, mut m) = (Vec::new(), Vec::new());
        let white = patterns::constant(16, 16, 1.0).unwrap();
        for v in values {
            let probe = patterns::constant(16, 16, v).unwrap();
            let meas = measure(&white, &probe, &SsimParams::default()).unwrap();
            s.push(meas.ssim_star);
            m.push(meas.mse_star);
        }
        assert!(correlate(&s, &m).unwrap().r_squared >= 0.99);
    }

    #[test]
    fn corpus_is_deterministic_and_sized() {
        let a = distortion_corpus(CORPUS_SEED, &STRUCTURAL_DISTORTIONS).unwrap();
        let b = distortion_corpus(CORPUS_SEED, &STRUCTURAL_DISTORTIONS).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 60);
    }

    #[test]
    fn structural_corpus_correspondence() {
        let pairs = distortion_corpus(CORPUS_SEED, &STRUCTURAL_DISTORTIONS).unwrap();
        let c = correspondence(&pairs, &SsimParams::zero_constants()).unwrap();
        assert_eq!(c.pooled.samples, 60);
        assert!(c.pooled.r_squared >= 0.9);
    }

    #[test]
    fn psnr_tracks_ssim_star_in_the_mid_band() {
        let p = psnr_correspondence(CORPUS_SEED, &SsimParams::zero_constants()).unwrap();
        assert!(p.points.len() >= 10);
        assert!(p.points.iter().all(|q| (0.2..=0.8).contains(&q.ssim_star)));
        assert!(p.slope > 0.0);
        assert!(p.r_squared >= 0.9);
    }
}
