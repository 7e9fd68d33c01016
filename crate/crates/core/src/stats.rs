use rayon::prelude::*;

use crate::{Error, GrayImage, Kernel, Map, Result};

/// Weighted local means, variances and covariance on the valid grid.
///
/// Only window positions fully inside the image are produced, so each map
/// is `size - 2 * radius` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStats {
    pub mu_a: Map,
    pub mu_b: Map,
    pub var_a: Map,
    pub var_b: Map,
    pub cov: Map,
}

impl LocalStats {
    pub fn valid_width(&self) -> usize {
        self.mu_a.width
    }

    pub fn valid_height(&self) -> usize {
        self.mu_a.height
    }

    pub fn len(&self) -> usize {
        self.mu_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_a.is_empty()
    }

    /// Builds statistics directly from per-pixel values. Used for closed-form
    /// evaluation of the component formulas outside any image.
    pub fn from_values(
        width: usize,
        height: usize,
        mu_a: Vec<f64>,
        mu_b: Vec<f64>,
        var_a: Vec<f64>,
        var_b: Vec<f64>,
        cov: Vec<f64>,
    ) -> Result<Self> {
        Ok(Self {
            mu_a: Map::new(width, height, mu_a)?,
            mu_b: Map::new(width, height, mu_b)?,
            var_a: Map::new(width, height, var_a)?,
            var_b: Map::new(width, height, var_b)?,
            cov: Map::new(width, height, cov)?,
        })
    }

    /// A single-pixel statistics record.
    pub fn scalar(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> Self {
        let one = |v| Map::filled(1, 1, v);
        Self {
            mu_a: one(mu_a),
            mu_b: one(mu_b),
            var_a: one(var_a),
            var_b: one(var_b),
            cov: one(cov),
        }
    }
}

/// Computes `μ = Σ w p`, `σ² = Σ w p² − μ²` (clamped at zero) and
/// `σAB = Σ w a b − μA μB` for every valid window position.
///
/// The sums run over samples shifted by the window's center value, which
/// leaves the moments unchanged but makes flat windows come out exactly:
/// their mean is the constant and their variance is zero.
///
/// Each output pixel sums its window in a fixed row-major order, so the
/// per-row parallelism is bit-identical to a serial evaluation.
pub fn local_stats(a: &GrayImage, b: &GrayImage, kernel: &Kernel) -> Result<LocalStats> {
    let (w, h) = (a.width(), a.height());
    if (w, h) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(w, h, b.width(), b.height()));
    }
    let size = kernel.size();
    if w < size || h < size {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            window: size,
        });
    }
    let (vw, vh) = (w - size + 1, h - size + 1);
    let (pa, pb, weights) = (a.data(), b.data(), kernel.weights());

    let rows: Vec<Vec<[f64; 7]>> = (0..vh)
        .into_par_iter()
        .map(|y| {
            (0..vw)
                .map(|x| {
                    let center = (y + size / 2) * w + x + size / 2;
                    let (ra, rb) = (pa[center], pb[center]);
                    let mut s = [0.0; 5];
                    for ky in 0..size {
                        let row = (y + ky) * w + x;
                        let wrow = &weights[ky * size..(ky + 1) * size];
                        for (kx, &wt) in wrow.iter().enumerate() {
                            let (va, vb) = (pa[row + kx] - ra, pb[row + kx] - rb);
                            s[0] += wt * va;
                            s[1] += wt * vb;
                            s[2] += wt * (va * va);
                            s[3] += wt * (vb * vb);
                            s[4] += wt * (va * vb);
                        }
                    }
                    [s[0], s[1], s[2], s[3], s[4], ra, rb]
                })
                .collect()
        })
        .collect();

    let n = vw * vh;
    let mut mu_a = Vec::with_capacity(n);
    let mut mu_b = Vec::with_capacity(n);
    let mut var_a = Vec::with_capacity(n);
    let mut var_b = Vec::with_capacity(n);
    let mut cov = Vec::with_capacity(n);
    for [sa, sb, saa, sbb, sab, ra, rb] in rows.into_iter().flatten() {
        mu_a.push(ra + sa);
        mu_b.push(rb + sb);
        var_a.push((saa - sa * sa).max(0.0));
        var_b.push((sbb - sb * sb).max(0.0));
        cov.push(sab - sa * sb);
    }
    LocalStats::from_values(vw, vh, mu_a, mu_b, var_a, var_b, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{gaussian_kernel, patterns};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    /// Two-pass weighted statistics for one window, independent of the
    /// one-pass path above.
    fn two_pass(a: &GrayImage, b: &GrayImage, k: &Kernel, x0: usize, y0: usize) -> [f64; 5] {
        let n = k.size();
        let taps: Vec<(f64, f64, f64)> = (0..n)
            .flat_map(|dy| (0..n).map(move |dx| (dx, dy)))
            .map(|(dx, dy)| {
                (
                    k.weight(dx, dy),
                    a.get(x0 + dx, y0 + dy),
                    b.get(x0 + dx, y0 + dy),
                )
            })
            .collect();
        let ma: f64 = taps.iter().map(|t| t.0 * t.1).sum();
        let mb: f64 = taps.iter().map(|t| t.0 * t.2).sum();
        let va = taps.iter().map(|t| t.0 * (t.1 - ma).powi(2)).sum();
        let vb = taps.iter().map(|t| t.0 * (t.2 - mb).powi(2)).sum();
        let c = taps.iter().map(|t| t.0 * (t.1 - ma) * (t.2 - mb)).sum();
        [ma, mb, va, vb, c]
    }

    #[test]
    fn valid_grid_crops_half_window() {
        let a = patterns::constant(16, 20, 0.3).unwrap();
        let s = local_stats(&a, &a, &gaussian_kernel(11, 1.5).unwrap()).unwrap();
        assert_eq!((s.valid_width(), s.valid_height()), (6, 10));
    }

    #[test]
    fn constant_fields_have_zero_variance() {
        let a = patterns::constant(16, 16, 0.3).unwrap();
        let b = patterns::constant(16, 16, 0.7).unwrap();
        let s = local_stats(&a, &b, &gaussian_kernel(11, 1.5).unwrap()).unwrap();
        for i in 0..s.len() {
            assert!((s.mu_a.data[i] - 0.3).abs() < 1e-15);
            assert!((s.mu_b.data[i] - 0.7).abs() < 1e-15);
            assert!(s.var_a.data[i] < 1e-15);
            assert!(s.var_b.data[i] < 1e-15);
            assert!(s.cov.data[i].abs() < 1e-15);
        }
    }

    #[test]
    fn self_covariance_equals_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_image(&mut rng, 24, 24);
        let s = local_stats(&a, &a, &gaussian_kernel(11, 1.5).unwrap()).unwrap();
        assert_eq!(s.var_a, s.var_b);
        for i in 0..s.len() {
            assert!((s.var_a.data[i] - s.cov.data[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn box_kernel_checkerboard_by_direct_summation() {
        let cb = patterns::checkerboard(16, 16, 0.0, 1.0).unwrap();
        let s = local_stats(&cb, &cb, &Kernel::uniform(11).unwrap()).unwrap();
        for y in 0..s.valid_height() {
            for x in 0..s.valid_width() {
                // An 11x11 window holds 61 cells of its top-left parity and
                // 60 of the other; white cells sit at odd parity.
                let white = if (x + y) % 2 == 0 { 60.0 } else { 61.0 };
                let mean = white / 121.0;
                assert!((s.mu_a.get(x, y) - mean).abs() < 1e-14);
                assert!((s.var_a.get(x, y) - mean * (1.0 - mean)).abs() < 1e-14);
                assert!((s.mu_a.get(x, y) - 0.5).abs() <= 0.5 / 121.0 + 1e-15);
                assert!((s.var_a.get(x, y) - 0.25).abs() < 2e-5);
            }
        }
    }

    #[test]
    fn one_pass_matches_two_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = gaussian_kernel(11, 1.5).unwrap();
        for _ in 0..20 {
            let a = random_image(&mut rng, 13, 12);
            let b = random_image(&mut rng, 13, 12);
            let s = local_stats(&a, &b, &k).unwrap();
            for y in 0..s.valid_height() {
                for x in 0..s.valid_width() {
                    let [ma, mb, va, vb, c] = two_pass(&a, &b, &k, x, y);
                    assert!((s.mu_a.get(x, y) - ma).abs() < 1e-12);
                    assert!((s.mu_b.get(x, y) - mb).abs() < 1e-12);
                    assert!((s.var_a.get(x, y) - va).abs() < 1e-10);
                    assert!((s.var_b.get(x, y) - vb).abs() < 1e-10);
                    assert!((s.cov.get(x, y) - c).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn errors() {
        let k = gaussian_kernel(11, 1.5).unwrap();
        let a = patterns::constant(16, 16, 0.0).unwrap();
        let b = patterns::constant(16, 15, 0.0).unwrap();
        assert_eq!(
            local_stats(&a, &b, &k),
            Err(Error::DimensionMismatch(16, 16, 16, 15))
        );
        let small = patterns::constant(10, 16, 0.0).unwrap();
        assert!(matches!(
            local_stats(&small, &small, &k),
            Err(Error::ImageTooSmall { window: 11, .. })
        ));
    }
}
