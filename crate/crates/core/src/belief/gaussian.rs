//! Multivariate Gaussian beliefs with linear-Gaussian observation updates.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, clamp_psd};
use crate::{Error, Result, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Covariance is symmetrized and tiny negative eigenvalues are clamped to 0.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::Domain(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        let cov = clamp_psd(&cov, "belief covariance")?;
        Ok(Self { mean, cov })
    }

    pub fn isotropic(mean: DVector<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::identity(d, d) * variance)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Prediction step for a random walk: covariance grows by `process`.
    pub fn with_process_noise(&self, process: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.mean.clone(), &self.cov + process)
    }

    pub fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.cov.clone());
        let z = DVector::from_fn(self.dim(), |i, _| {
            let n: f64 = StandardNormal.sample(rng);
            n * eig.eigenvalues[i].max(0.0).sqrt()
        });
        &self.mean + eig.eigenvectors * z
    }
}

/// Observation `o = B s + d + v`, `v ~ N(0, Σ_o)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearGaussianObsModel {
    matrix: DMatrix<f64>,
    bias: DVector<f64>,
    noise: DMatrix<f64>,
}

impl LinearGaussianObsModel {
    pub fn new(matrix: DMatrix<f64>, bias: DVector<f64>, noise: DMatrix<f64>) -> Result<Self> {
        let m = matrix.nrows();
        if bias.len() != m || noise.nrows() != m || noise.ncols() != m {
            return Err(Error::Domain(format!(
                "observation model shapes disagree: B is {}x{}, bias {}, noise {}x{}",
                m,
                matrix.ncols(),
                bias.len(),
                noise.nrows(),
                noise.ncols()
            )));
        }
        if linalg::max_asymmetry(&noise) > linalg::SYMMETRY_TOL {
            return Err(Error::Domain("observation noise is not symmetric".into()));
        }
        linalg::cholesky(&noise, "observation noise")
            .map_err(|_| Error::Domain("observation noise must be positive definite".into()))?;
        Ok(Self { matrix, bias, noise })
    }

    /// Identity observation of the full state with isotropic noise.
    pub fn direct(dim: usize, noise_variance: f64) -> Result<Self> {
        Self::new(
            DMatrix::identity(dim, dim),
            DVector::zeros(dim),
            DMatrix::identity(dim, dim) * noise_variance,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    fn check_against(&self, b: &GaussianBelief) -> Result<()> {
        if self.matrix.ncols() != b.dim() {
            return Err(Error::Domain(format!(
                "B has {} columns but the belief has dimension {}",
                self.matrix.ncols(),
                b.dim()
            )));
        }
        Ok(())
    }
}

/// `B Σ_b Bᵀ + Σ_o`.
pub fn predicted_obs_cov(b: &GaussianBelief, m: &LinearGaussianObsModel) -> Result<DMatrix<f64>> {
    m.check_against(b)?;
    Ok(&m.matrix * &b.cov * m.matrix.transpose() + &m.noise)
}

/// Solves `S X = B Σ_b` for the innovation covariance `S`.
fn gain_transpose(b: &GaussianBelief, m: &LinearGaussianObsModel) -> Result<DMatrix<f64>> {
    let s = predicted_obs_cov(b, m)?;
    let chol = linalg::cholesky(&s, "innovation covariance")?;
    Ok(chol.solve(&(&m.matrix * &b.cov)))
}

/// Kalman posterior covariance `Σ_b − Σ_b Bᵀ S⁻¹ B Σ_b`. It does not depend on
/// the observation value.
pub fn posterior_covariance(b: &GaussianBelief, m: &LinearGaussianObsModel) -> Result<DMatrix<f64>> {
    let xt = gain_transpose(b, m)?;
    let bs = &m.matrix * &b.cov;
    let post = &b.cov - bs.transpose() * xt;
    clamp_psd(&linalg::symmetrize(&post), "posterior covariance")
}

pub fn kalman_update(b: &GaussianBelief, m: &LinearGaussianObsModel, o: &DVector<f64>) -> Result<GaussianBelief> {
    if o.len() != m.matrix.nrows() {
        return Err(Error::Domain(format!(
            "observation has length {}, model expects {}",
            o.len(),
            m.matrix.nrows()
        )));
    }
    let xt = gain_transpose(b, m)?;
    let innovation = o - (&m.matrix * &b.mean + &m.bias);
    let mean = &b.mean + xt.transpose() * innovation;
    let cov = posterior_covariance(b, m)?;
    Ok(GaussianBelief { mean, cov })
}

/// Differential entropy `½ (d ln(2πe) + ln|Σ|)`, via Cholesky.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    if linalg::max_asymmetry(cov) > linalg::SYMMETRY_TOL {
        return Err(Error::Domain("covariance is not symmetric".into()));
    }
    let chol = linalg::cholesky(cov, "covariance").map_err(|e| Error::Domain(e.to_string()))?;
    let d = cov.nrows() as f64;
    Ok(0.5 * (d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + linalg::log_det_cholesky(&chol)))
}
