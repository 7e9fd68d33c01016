//! Closed-form minima of the SSIM components, image pairs that reach them,
//! and scans for undefined exponentiation.

use serde::Serialize;

use crate::{
    is_non_integer, luminance_component, patterns, ssim::ratio, GrayImage, LocalStats, Map, Result,
    SsimParams,
};

/// Smallest attainable value of each component for a parameter set.
///
/// The minima depend only on `K1`, `K2` (and the `C3` rule): the dynamic
/// range cancels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentMinima {
    pub l_min: f64,
    pub c_min: f64,
    pub s_min: f64,
    pub k1: f64,
    pub k2: f64,
}

/// `l_min = C1 / (L² + C1)` at means `(0, L)`;
/// `c_min = C2 / (L²/4 + C2)` at variances `(0, (L/2)²)`;
/// `s_min = (C3 − L²/4) / (L²/4 + C3)` at covariance `−(L/2)²` with both
/// variances `(L/2)²`.
pub fn component_minima(params: &SsimParams) -> ComponentMinima {
    let l2 = params.dynamic_range * params.dynamic_range;
    let (c1, c2, c3) = (params.c1(), params.c2(), params.c3());
    let quarter = l2 / 4.0;
    ComponentMinima {
        l_min: c1 / (l2 + c1),
        c_min: c2 / (quarter + c2),
        s_min: (c3 - quarter) / (quarter + c3),
        k1: params.k1,
        k2: params.k2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    L,
    C,
    S,
}

/// An image pair that drives one component to (or next to) its minimum.
///
/// * `L`: black against white.
/// * `C`: constant 128/255 against a black/white pixel checkerboard.
/// * `S`: a black/white checkerboard against its inverse.
pub fn witness_pair(which: Component, size: usize) -> Result<(GrayImage, GrayImage)> {
    match which {
        Component::L => Ok((
            patterns::constant(size, size, 0.0)?,
            patterns::constant(size, size, 1.0)?,
        )),
        Component::C => Ok((
            patterns::constant(size, size, 128.0 / 255.0)?,
            patterns::checkerboard(size, size, 0.0, 1.0)?,
        )),
        Component::S => Ok((
            patterns::checkerboard(size, size, 0.0, 1.0)?,
            patterns::checkerboard(size, size, 1.0, 0.0)?,
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardReport {
    pub gamma: f64,
    pub count: usize,
    pub total: usize,
    pub fraction: f64,
    pub first: Option<(usize, usize)>,
}

/// Counts pixels whose structure value is negative when `gamma` is not an
/// integer, i.e. where `s^γ` has no real value.
pub fn undefined_scan(s_map: &Map, gamma: f64) -> HazardReport {
    let total = s_map.len();
    let mut count = 0;
    let mut first = None;
    if is_non_integer(gamma) {
        for (i, &v) in s_map.data.iter().enumerate() {
            if v < 0.0 {
                count += 1;
                first.get_or_insert((i % s_map.width, i / s_map.width));
            }
        }
    }
    HazardReport {
        gamma,
        count,
        total,
        fraction: if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        },
        first,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrunetDistances {
    /// `sqrt(1 − l)`.
    pub d_l: Map,
    /// `sqrt(1 − c·s)`.
    pub d_cs: Map,
    /// Largest deviation of `d_l` from `|μA − μB| / sqrt(μA² + μB² + C1)`.
    pub identity_residual: f64,
}

/// The square-root distances built from the luminance factor and the
/// contrast-structure product. Both satisfy the triangle inequality.
pub fn brunet_distances(stats: &LocalStats, params: &SsimParams) -> BrunetDistances {
    let l = luminance_component(stats, params);
    let (c1, c2) = (params.c1(), params.c2());
    let (va, vb, cov) = (&stats.var_a.data, &stats.var_b.data, &stats.cov.data);
    let d_l: Vec<f64> = l.data.iter().map(|&v| (1.0 - v).max(0.0).sqrt()).collect();
    // c·s collapses to (2σAB + C2) / (σA² + σB² + C2) when C3 = C2/2; the
    // general product is used so any C3 is honored.
    let d_cs = (0..stats.len())
        .map(|i| {
            let sab = (va[i] * vb[i]).sqrt();
            let c = ratio(2.0 * sab + c2, va[i] + vb[i] + c2);
            let s = ratio(cov[i] + params.c3(), sab + params.c3());
            (1.0 - c * s).max(0.0).sqrt()
        })
        .collect();
    let identity_residual = d_l
        .iter()
        .zip(stats.mu_a.data.iter().zip(&stats.mu_b.data))
        .map(|(&d, (&ma, &mb))| {
            let den = (ma * ma + mb * mb + c1).sqrt();
            (d - ratio((ma - mb).abs(), den)).abs()
        })
        .fold(0.0, f64::max);
    let (w, h) = (stats.valid_width(), stats.valid_height());
    BrunetDistances {
        d_l: Map {
            width: w,
            height: h,
            data: d_l,
        },
        d_cs: Map {
            width: w,
            height: h,
            data: d_cs,
        },
        identity_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{compare, local_stats, KernelShape};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn default_minima() {
        let m = component_minima(&SsimParams::default());
        close(m.l_min, 0.0001, 5e-5);
        close(m.c_min, 0.0036, 5e-5);
        close(m.s_min, -0.9964, 5e-5);
        close(m.c_min, 0.0009 / 0.2509, 1e-15);
        close(m.s_min, -0.996_406_47, 1e-8);
        assert_eq!(format!("{:.4}", m.l_min), "0.0001");
        assert_eq!(format!("{:.4}", m.c_min), "0.0036");
        assert_eq!(format!("{:.4}", m.s_min), "-0.9964");
    }

    #[test]
    fn vanishing_k2() {
        let m = component_minima(&SsimParams {
            k2: 0.0,
            ..SsimParams::default()
        });
        assert_eq!(m.c_min, 0.0);
        assert_eq!(m.s_min, -1.0);
    }

    #[test]
    fn minima_do_not_depend_on_range() {
        let unit = component_minima(&SsimParams::default());
        let byte = component_minima(&SsimParams::eight_bit());
        close(unit.l_min, byte.l_min, 1e-15);
        close(unit.c_min, byte.c_min, 1e-15);
        close(unit.s_min, byte.s_min, 1e-15);
    }

    #[test]
    fn l_min_against_grid_search() {
        let p = SsimParams {
            k1: 0.02,
            ..SsimParams::default()
        };
        let n = 200;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let c1 = p.c1();
        let best = grid
            .iter()
            .flat_map(|&a| {
                grid.iter()
                    .map(move |&b| (2.0 * a * b + c1) / (a * a + b * b + c1))
            })
            .fold(f64::INFINITY, f64::min);
        let m = component_minima(&p);
        close(m.l_min, 0.0004 / 1.0004, 1e-15);
        close(best, m.l_min, 1e-12);
    }

    #[test]
    fn l_witness() {
        let (a, b) = witness_pair(Component::L, 16).unwrap();
        let r = compare(&a, &b, &SsimParams::default()).unwrap();
        close(
            r.mssim,
            component_minima(&SsimParams::default()).l_min,
            1e-6,
        );
        assert_eq!(r.mean_c, 1.0);
        assert_eq!(r.mean_s, 1.0);
    }

    #[test]
    fn c_and_s_witnesses() {
        let gauss = SsimParams::default();
        let boxed = SsimParams {
            kernel_shape: KernelShape::Uniform,
            ..SsimParams::default()
        };
        let m = component_minima(&gauss);
        for (p, tol) in [(&gauss, 5e-3), (&boxed, 1e-6)] {
            let (a, b) = witness_pair(Component::C, 32).unwrap();
            close(compare(&a, &b, p).unwrap().mean_c, m.c_min, tol);
            let (a, b) = witness_pair(Component::S, 32).unwrap();
            close(compare(&a, &b, p).unwrap().mean_s, m.s_min, tol);
        }
    }

    #[test]
    fn scan_examples() {
        let positive = Map::new(2, 2, vec![0.1, 0.5, 0.9, 1.0]).unwrap();
        assert_eq!(undefined_scan(&positive, 0.5).count, 0);

        let (a, b) = witness_pair(Component::S, 32).unwrap();
        let r = compare(&a, &b, &SsimParams::default()).unwrap();
        let direct = r.maps.s.data.iter().filter(|&&v| v < 0.0).count();
        let h = undefined_scan(&r.maps.s, 0.5);
        assert_eq!(h.count, direct);
        assert!(h.fraction >= 0.99);
        assert_eq!(h.first, Some((0, 0)));
        assert_eq!(undefined_scan(&r.maps.s, 2.0).count, 0);
    }

    #[test]
    fn brunet_examples() {
        let p = SsimParams::default();
        let k = p.kernel().unwrap();
        let (g, _) = patterns::gradient_pair(20, 20).unwrap();
        let d = brunet_distances(&local_stats(&g, &g, &k).unwrap(), &p);
        assert!(d.d_l.data.iter().all(|&v| v == 0.0));
        assert!(d.d_cs.data.iter().all(|&v| v == 0.0));

        let (a, b) = witness_pair(Component::L, 11).unwrap();
        let d = brunet_distances(&local_stats(&a, &b, &k).unwrap(), &p);
        close(d.d_l.data[0], (1.0f64 - 0.0001 / 1.0001).sqrt(), 1e-12);
        close(d.d_l.data[0], 0.99995, 1e-6);
        assert!(d.identity_residual < 1e-12);
    }
}
