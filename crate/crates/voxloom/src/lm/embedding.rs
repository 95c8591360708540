//! Embedding-extension math: new vocabulary rows are drawn from a
//! multivariate normal fitted to the existing embedding matrix.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Appends `n_new` rows sampled from `N(mean, covariance)` of the existing
/// rows, with the sample covariance using divisor `rows − 1`.
///
/// Sampling uses a Cholesky factor when the covariance is positive
/// definite, and otherwise falls back to an eigendecomposition with
/// negative eigenvalues clamped to zero, so degenerate matrices (exact
/// zero-variance directions included) sample cleanly: a direction with zero
/// variance stays exactly at its mean in every new row.
pub fn extend_embeddings(
    matrix: &[Vec<f64>],
    n_new: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    let rows = matrix.len();
    if rows < 2 {
        return Err(Error::invalid_argument(
            "embedding extension needs at least two source rows",
        ));
    }
    let dims = matrix[0].len();
    if dims == 0 || matrix.iter().any(|r| r.len() != dims) {
        return Err(Error::invalid_argument(
            "embedding rows must be non-empty and uniformly sized",
        ));
    }
    let mut extended: Vec<Vec<f64>> = matrix.to_vec();
    if n_new == 0 {
        return Ok(extended);
    }

    let mean: Vec<f64> = (0..dims)
        .map(|d| matrix.iter().map(|r| r[d]).sum::<f64>() / rows as f64)
        .collect();
    let mut covariance = DMatrix::zeros(dims, dims);
    for row in matrix {
        let centered = DVector::from_iterator(dims, row.iter().zip(&mean).map(|(v, m)| v - m));
        covariance += &centered * centered.transpose();
    }
    covariance /= (rows - 1) as f64;

    // factor L with covariance = L·Lᵀ
    let factor = match Cholesky::new(covariance.clone()) {
        Some(chol) => chol.l(),
        None => {
            let eigen = covariance.symmetric_eigen();
            let scales = eigen.eigenvalues.map(|v| v.max(0.0).sqrt());
            let mut l = eigen.eigenvectors;
            for (col, scale) in scales.iter().enumerate() {
                l.column_mut(col).scale_mut(*scale);
            }
            l
        }
    };

    let mean = DVector::from_vec(mean);
    for _ in 0..n_new {
        let z = DVector::from_iterator(dims, (0..dims).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let row = &mean + &factor * z;
        extended.push(row.iter().copied().collect());
    }
    Ok(extended)
}
