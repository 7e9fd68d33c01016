use serde::Serialize;

use crate::{Error, Result};

/// A square, normalized weighting window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Equal weights `1 / size²`.
    pub fn uniform(size: usize) -> Result<Self> {
        check_size(size)?;
        Ok(Self::normalized(size, vec![1.0; size * size]))
    }

    fn normalized(size: usize, raw: Vec<f64>) -> Self {
        let sum: f64 = raw.iter().sum();
        Self {
            size,
            weights: raw.into_iter().map(|w| w / sum).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Half-width of the window; also the border cropped from each side.
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Row-major weights, `size * size` entries.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, dx: usize, dy: usize) -> f64 {
        self.weights[dy * self.size + dx]
    }
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::InvalidWindow(size));
    }
    Ok(())
}

/// Samples the isotropic Gaussian `exp(-(dx² + dy²) / (2σ²))` at integer
/// offsets from the window center and normalizes the weights to sum to one.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel> {
    check_size(size)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidSigma(sigma));
    }
    let r = (size / 2) as i64;
    let denom = 2.0 * sigma * sigma;
    let raw = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx * dx + dy * dy) as f64))
        .map(|d2| (-d2 / denom).exp())
        .collect();
    Ok(Kernel::normalized(size, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tap_is_one() {
        let k = gaussian_kernel(1, 1.5).unwrap();
        assert_eq!(k.weights(), &[1.0]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(gaussian_kernel(10, 1.5), Err(Error::InvalidWindow(10)));
        assert_eq!(gaussian_kernel(0, 1.5), Err(Error::InvalidWindow(0)));
        assert_eq!(gaussian_kernel(11, 0.0), Err(Error::InvalidSigma(0.0)));
        assert_eq!(gaussian_kernel(11, -1.0), Err(Error::InvalidSigma(-1.0)));
        assert!(gaussian_kernel(11, f64::NAN).is_err());
        assert_eq!(Kernel::uniform(4), Err(Error::InvalidWindow(4)));
    }

    #[test]
    fn all_eight_reflections_agree() {
        let k = gaussian_kernel(11, 1.5).unwrap();
        let n = k.size() - 1;
        for y in 0..=n {
            for x in 0..=n {
                let w = k.weight(x, y);
                for (rx, ry) in [
                    (n - x, y),
                    (x, n - y),
                    (n - x, n - y),
                    (y, x),
                    (n - y, x),
                    (y, n - x),
                    (n - y, n - x),
                ] {
                    assert_eq!(w, k.weight(rx, ry));
                }
            }
        }
        let sum: f64 = k.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn center_weight_matches_direct_evaluation() {
        // 1 / sum_{dx,dy in -5..=5} exp(-(dx²+dy²)/4.5), evaluated separately
        // at 40 digits.
        const CENTER: f64 = 0.070_762_237_763_946_97;
        let k = gaussian_kernel(11, 1.5).unwrap();
        assert!((k.weight(5, 5) - CENTER).abs() < 1e-15);
    }

    #[test]
    fn uniform_weights() {
        let k = Kernel::uniform(11).unwrap();
        assert!(k.weights().iter().all(|&w| w == 1.0 / 121.0));
        assert_eq!(k.radius(), 5);
    }
}
