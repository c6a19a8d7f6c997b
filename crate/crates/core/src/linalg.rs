//! Small dense linear-algebra helpers shared by beliefs and scores.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::{Error, Result};

/// Eigenvalues at or below this are treated as zero when taking logs.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Absolute tolerance for symmetry and PSD checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

fn require_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Domain(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Symmetric eigendecomposition after checking symmetry.
pub fn symmetric_eigen(m: &DMatrix<f64>, what: &str) -> Result<SymmetricEigen<f64, Dyn>> {
    require_square(m, what)?;
    if max_asymmetry(m) > SYMMETRY_TOL * scale_of(m) {
        return Err(Error::Domain(format!("{what} is not symmetric")));
    }
    Ok(SymmetricEigen::new(symmetrize(m)))
}

/// Projects a nearly-PSD matrix onto the PSD cone by clamping eigenvalues in
/// `[-tol, 0)` to zero. Fails when an eigenvalue is more negative than that.
pub fn clamp_psd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(m, what)?;
    let tol = SYMMETRY_TOL * scale_of(m);
    let min = eig.eigenvalues.min();
    if min < -tol {
        return Err(Error::Domain(format!("{what} has negative eigenvalue {min:e}")));
    }
    if min >= 0.0 {
        return Ok(symmetrize(m));
    }
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok(symmetrize(&rebuilt))
}

/// `Tr(log m) = Σ ln λ_i` with eigenvalues floored at [`EIGEN_FLOOR`].
pub fn log_trace(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let eig = symmetric_eigen(m, what)?;
    let tol = SYMMETRY_TOL * scale_of(m);
    if eig.eigenvalues.min() < -tol {
        return Err(Error::Domain(format!("{what} is not positive definite")));
    }
    Ok(eig.eigenvalues.iter().map(|v| v.max(EIGEN_FLOOR).ln()).sum())
}

/// Cholesky factorization, reporting failure as a conditioning error.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    require_square(m, what).map_err(|e| Error::Conditioning(e.to_string()))?;
    Cholesky::new(m.clone()).ok_or_else(|| Error::Conditioning(format!("{what} is not positive definite")))
}

/// `ln |m|` from a Cholesky factor.
pub fn log_det_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_removes_tiny_negative_eigenvalue() {
        // rank-1 matrix with a -1e-12 perturbation
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0]);
        let mut m = &v * v.transpose();
        m[(0, 0)] -= 1e-12;
        let c = clamp_psd(&m, "m").unwrap();
        let eig = SymmetricEigen::new(c);
        assert!(eig.eigenvalues.min() >= -1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(clamp_psd(&m, "m").is_err());
        assert!(log_trace(&m, "m").is_err());
        assert!(matches!(cholesky(&m, "m"), Err(Error::Conditioning(_))));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(symmetric_eigen(&m, "m").is_err());
    }
}
