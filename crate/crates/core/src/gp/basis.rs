use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// A bias function plus Gaussian radial basis functions on normalised time.
///
/// Weight layout is dimension-major: output dimension `d` reads weights
/// `d*J .. (d+1)*J`, with the bias first in each block.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    centers: Vec<f64>,
    width: f64,
}

impl BasisSet {
    pub fn new(centers: Vec<f64>, width: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid(
                "basis_count",
                "at least one radial function is required (J >= 2)",
            ));
        }
        if centers.windows(2).any(|w| w[1] <= w[0]) || centers.iter().any(|c| !c.is_finite()) {
            return Err(invalid("centers", "must be finite and strictly increasing"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", "must be positive"));
        }
        Ok(Self { centers, width })
    }

    /// `count` functions in total: the bias and `count - 1` radial functions
    /// spread uniformly over [0, 1], each as wide as the centre spacing.
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid("basis_count", "J must be at least 2"));
        }
        let radial = count - 1;
        if radial == 1 {
            return Self::new(vec![0.5], 1.0);
        }
        let spacing = 1.0 / (radial - 1) as f64;
        let centers = (0..radial).map(|j| j as f64 * spacing).collect();
        Self::new(centers, spacing)
    }

    /// Total number of scalar functions J, bias included.
    pub fn count(&self) -> usize {
        self.centers.len() + 1
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// The J scalar basis values at `tau`, bias first.
    pub fn values(&self, tau: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count());
        self.values_into(tau, &mut out);
        out
    }

    pub(crate) fn values_into(&self, tau: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        let denom = 2.0 * self.width * self.width;
        out.extend(
            self.centers
                .iter()
                .map(|c| (-(tau - c).powi(2) / denom).exp()),
        );
    }

    /// The 3 × 3J block-diagonal matrix Φ(τ).
    pub fn phi(&self, tau: f64) -> DMatrix<f64> {
        let j = self.count();
        let v = self.values(tau);
        let mut m = DMatrix::zeros(3, 3 * j);
        for d in 0..3 {
            for (k, &x) in v.iter().enumerate() {
                m[(d, d * j + k)] = x;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let b = BasisSet::uniform(18).unwrap();
        assert_eq!(b.count(), 18);
        assert_eq!(b.centers().len(), 17);
        assert_eq!(b.centers()[0], 0.0);
        assert_eq!(b.centers()[16], 1.0);
        assert!((b.width() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rbf_peaks_at_center_and_bias_is_one() {
        let b = BasisSet::uniform(6).unwrap();
        for (k, &c) in b.centers().iter().enumerate() {
            assert_eq!(b.values(c)[k + 1], 1.0);
        }
        for tau in [0.0, 0.13, 0.5, 1.0] {
            assert_eq!(b.values(tau)[0], 1.0);
        }
    }

    #[test]
    fn phi_block_structure() {
        let b = BasisSet::uniform(5).unwrap();
        let phi = b.phi(0.37);
        let nonzero = phi.iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 3 * 5);
        for d in 0..3 {
            for col in 0..15 {
                assert_eq!(phi[(d, col)] != 0.0, col / 5 == d);
            }
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(BasisSet::uniform(1).is_err());
        assert!(BasisSet::new(vec![0.5, 0.5], 0.1).is_err());
        assert!(BasisSet::new(vec![0.5], 0.0).is_err());
        assert!(BasisSet::uniform(2).is_ok());
    }
}
