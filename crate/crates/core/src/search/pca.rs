//! Principal component projection for search diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k` unit principal axes, each of the input dimension.
    pub axes: Vec<Vec<f64>>,
    /// Sample variance along each axis (eigenvalues of the covariance).
    pub explained_variance: Vec<f64>,
    /// Fraction of the total variance per axis.
    pub explained_ratio: Vec<f64>,
    /// Projected coordinates, one row per input vector.
    pub coordinates: Vec<Vec<f64>>,
    /// All inputs identical: every coordinate is zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcaError {
    #[error("PCA needs at least two vectors, got {0}")]
    TooFew(usize),
    #[error("vectors have inconsistent lengths")]
    Ragged,
    #[error("k = {k} exceeds dimension {dim}")]
    TooManyComponents { k: usize, dim: usize },
}

/// Mean-centered PCA with axes ordered by decreasing variance. Each axis is
/// signed so its largest-magnitude loading is positive.
pub fn pca_project(vectors: &[Vec<f64>], k: usize) -> Result<Pca, PcaError> {
    let n = vectors.len();
    if n < 2 {
        return Err(PcaError::TooFew(n));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(PcaError::Ragged);
    }
    if k > d {
        return Err(PcaError::TooManyComponents { k, dim: d });
    }
    let mean: Vec<f64> = (0..d).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let total: f64 = cov.diagonal().sum();
    if total <= 0.0 {
        let mut axes = vec![vec![0.0; d]; k];
        for (i, axis) in axes.iter_mut().enumerate() {
            axis[i] = 1.0;
        }
        return Ok(Pca {
            mean,
            axes,
            explained_variance: vec![0.0; k],
            explained_ratio: vec![0.0; k],
            coordinates: vec![vec![0.0; k]; n],
            degenerate: true,
        });
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut axes = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        let lead = axis
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if axis[lead] < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        axes.push(axis);
        explained_variance.push(eig.eigenvalues[c].max(0.0));
    }
    let explained_ratio = explained_variance.iter().map(|v| v / total).collect();
    let coordinates = (0..n)
        .map(|i| axes.iter().map(|a| (0..d).map(|j| centered[(i, j)] * a[j]).sum()).collect())
        .collect();
    Ok(Pca { mean, axes, explained_variance, explained_ratio, coordinates, degenerate: false })
}

impl Pca {
    /// Projects a new vector onto the fitted axes.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| a.iter().zip(v).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect()
    }

    /// Mean plus the coordinates mapped back through the axes.
    pub fn reconstruct(&self, coordinates: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, a) in coordinates.iter().zip(&self.axes) {
            for (o, w) in out.iter_mut().zip(a) {
                *o += c * w;
            }
        }
        out
    }
}
