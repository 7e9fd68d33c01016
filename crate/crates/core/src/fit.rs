use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

/// Least-squares polynomial fit `y ≈ Σ coefficients[k] · x^k` and its
/// coefficient of determination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub samples: usize,
}

impl PolyFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

fn poly_fit(x: &[f64], y: &[f64], degree: usize) -> Result<PolyFit> {
    let needed = (degree + 1).max(3);
    let n = x.len().min(y.len());
    if n < needed || x.len() != y.len() {
        return Err(Error::InsufficientSamples { needed, got: n });
    }
    let design = DMatrix::from_fn(n, degree + 1, |i, k| x[i].powi(k as i32));
    let target = DVector::from_column_slice(y);
    let coefficients = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    let fitted = &design * &coefficients;
    let mean = target.mean();
    let ss_tot: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = target
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    // A constant target is explained perfectly by the intercept.
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PolyFit {
        coefficients: coefficients.iter().copied().collect(),
        r_squared,
        samples: n,
    })
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<PolyFit> {
    poly_fit(x, y, 1)
}

pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<PolyFit> {
    poly_fit(x, y, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v + 3.0 * v * v).collect();
        let f = quadratic_fit(&x, &y).unwrap();
        assert!((f.r_squared - 1.0).abs() < 1e-9);
        for (got, want) in f.coefficients.iter().zip([0.5, -2.0, 3.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert!((f.predict(0.5) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn noise_has_low_r_squared() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!(linear_fit(&x, &y).unwrap().r_squared < 0.2);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            linear_fit(&[0.0, 1.0], &[0.0, 1.0]),
            Err(Error::InsufficientSamples { needed: 3, got: 2 })
        );
        assert!(quadratic_fit(&[0.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
