//! Distances between SPD matrices used to score reproductions.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::spd_manifold::{logm_spd, SpdMatrix};

/// Log-Euclidean distance `‖logm(A) − logm(B)‖_F`.
pub fn log_euclidean_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let diff = logm_spd(a).as_matrix() - logm_spd(b).as_matrix();
    Ok(diff.norm())
}

/// Jensen-Bregman LogDet distance
/// `sqrt(ln det((A+B)/2) − ½ ln det(A B))`.
pub fn jbld_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    let mean = (a.as_matrix() + b.as_matrix()) * 0.5;
    let inner = log_det(&mean)? - 0.5 * (log_det(a.as_matrix())? + log_det(b.as_matrix())?);
    Ok(inner.max(0.0).sqrt())
}

fn same_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `ln det M` through the Cholesky factor.
pub(crate) fn log_det(m: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(m.clone()).ok_or(Error::Definiteness {
        min_eigenvalue: f64::NAN,
        max_eigenvalue: f64::NAN,
    })?;
    Ok(2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>())
}

#[cfg(test)]
pub(crate) fn affine_invariant_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    use crate::spd_manifold::{affine_inner, log_map};
    let v = log_map(a, b)?;
    Ok(affine_inner(a, &v, &v)?.sqrt())
}
