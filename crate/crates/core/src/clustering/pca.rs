use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// Orthonormal columns, one per retained component.
    pub components: DMatrix<f64>,
    /// Non-increasing.
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    /// Set when the data has no variance and the single component is arbitrary.
    pub degenerate: bool,
}

impl PcaModel {
    pub fn dims(&self) -> usize {
        self.components.ncols()
    }

    pub fn project(&self, f: &[f64]) -> DVector<f64> {
        assert_eq!(f.len(), self.mean.len(), "feature length mismatch");
        let centered = DVector::from_column_slice(f) - &self.mean;
        self.components.tr_mul(&centered)
    }
}

/// Fit a PCA on the rows of `features`, keeping the smallest number of
/// leading components whose cumulative variance reaches
/// `variance_retained` of the total.
pub fn pca_fit(features: &DMatrix<f64>, variance_retained: f64) -> Result<PcaModel> {
    let (n, p) = features.shape();
    if n < 2 {
        return Err(invalid("features", "PCA needs at least 2 rows"));
    }
    if !(variance_retained > 0.0 && variance_retained <= 1.0) {
        return Err(invalid(
            "variance_retained",
            format!("{variance_retained} not in (0, 1]"),
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(invalid("features", "non-finite value"));
    }
    let mean = features.row_mean().transpose();
    let mut centered = features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = (centered.tr_mul(&centered)) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let total: f64 = values.iter().sum();

    let degenerate = !(total > 0.0);
    let d = if degenerate {
        1
    } else {
        let target = variance_retained * total * (1.0 - 1e-10);
        let mut acc = 0.0;
        let mut d = 0;
        for v in &values {
            acc += v;
            d += 1;
            if acc >= target {
                break;
            }
        }
        d
    };

    let mut components = DMatrix::zeros(p, d);
    for (k, &i) in order.iter().take(d).enumerate() {
        components.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: values[..d].to_vec(),
        total_variance: total,
        degenerate,
    })
}
