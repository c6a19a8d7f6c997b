//! Zero-mean Gaussian-process beliefs over 2-D inputs.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg;
use crate::{Error, Result, RngStream};

pub type Point = [f64; 2];

/// Joint samplers over more points than this use sequential nearest-neighbour
/// conditioning instead of a full Cholesky factor.
pub const EXACT_SAMPLER_LIMIT: usize = 2500;

/// Neighbours kept per point by the sequential sampler.
const SEQUENTIAL_NEIGHBOURS: usize = 30;

/// Linear-exponential kernel `σ_f² · exp(−‖x − x′‖ / ℓ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpKernel {
    pub signal_variance: f64,
    pub length_scale: f64,
}

impl ExpKernel {
    pub fn new(signal_variance: f64, length_scale: f64) -> Result<Self> {
        if !(signal_variance > 0.0) || !(length_scale > 0.0) {
            return Err(Error::Config(format!(
                "kernel needs positive signal variance and length scale, got {signal_variance}, {length_scale}"
            )));
        }
        Ok(Self {
            signal_variance,
            length_scale,
        })
    }

    #[inline]
    pub fn eval(&self, a: &Point, b: &Point) -> f64 {
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        self.signal_variance * (-(dx * dx + dy * dy).sqrt() / self.length_scale).exp()
    }

    fn cross(&self, rows: &[Point], cols: &[Point]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.eval(&rows[i], &cols[j]))
    }
}

/// GP regression belief: prior mean 0, noise variance `noise` on observations.
#[derive(Clone, Debug)]
pub struct GpBelief {
    kernel: ExpKernel,
    noise: f64,
    inputs: Vec<Point>,
    values: Vec<f64>,
    /// Lower Cholesky factor of `K(X, X) + σ_o I`.
    lower: DMatrix<f64>,
    /// `(K + σ_o I)⁻¹ y`.
    alpha: DVector<f64>,
}

impl GpBelief {
    pub fn prior(kernel: ExpKernel, noise: f64) -> Result<Self> {
        Self::from_data(kernel, noise, Vec::new(), Vec::new())
    }

    pub fn from_data(kernel: ExpKernel, noise: f64, inputs: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if !(noise >= 0.0) {
            return Err(Error::Config(format!("observation noise must be >= 0, got {noise}")));
        }
        if inputs.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} inputs but {} values",
                inputs.len(),
                values.len()
            )));
        }
        let n = inputs.len();
        let (lower, alpha) = if n == 0 {
            (DMatrix::zeros(0, 0), DVector::zeros(0))
        } else {
            let gram = kernel.cross(&inputs, &inputs) + DMatrix::identity(n, n) * noise;
            let chol = linalg::cholesky(&gram, "GP Gram matrix")?;
            let alpha = chol.solve(&DVector::from_column_slice(&values));
            (chol.l(), alpha)
        };
        Ok(Self {
            kernel,
            noise,
            inputs,
            values,
            lower,
            alpha,
        })
    }

    pub fn kernel(&self) -> &ExpKernel {
        &self.kernel
    }

    /// Marginal observation noise `σ_o` (a variance).
    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn inputs(&self) -> &[Point] {
        &self.inputs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Appends `(x, y)` and refactors the Gram matrix.
    pub fn condition(&self, x: Point, y: f64) -> Result<Self> {
        let mut inputs = self.inputs.clone();
        let mut values = self.values.clone();
        inputs.push(x);
        values.push(y);
        Self::from_data(self.kernel, self.noise, inputs, values)
    }

    /// `L⁻¹ K(X, query)`.
    fn whitened_cross(&self, query: &[Point]) -> DMatrix<f64> {
        let mut v = self.kernel.cross(&self.inputs, query);
        if !self.inputs.is_empty() {
            self.lower.solve_lower_triangular_mut(&mut v);
        }
        v
    }

    fn mean_at(&self, query: &[Point]) -> DVector<f64> {
        if self.inputs.is_empty() {
            return DVector::zeros(query.len());
        }
        self.kernel.cross(query, &self.inputs) * &self.alpha
    }

    /// Posterior mean and latent covariance at `query`.
    pub fn posterior(&self, query: &[Point]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if query.is_empty() {
            return Err(Error::Domain("GP query must be non-empty".into()));
        }
        let v = self.whitened_cross(query);
        let cov = self.kernel.cross(query, query) - v.transpose() * &v;
        Ok((self.mean_at(query), linalg::symmetrize(&cov)))
    }

    /// Posterior means and marginal variances (clamped at 0), without forming
    /// the full covariance.
    pub fn marginals(&self, query: &[Point]) -> (Vec<f64>, Vec<f64>) {
        let mean = self.mean_at(query);
        let v = self.whitened_cross(query);
        let var = (0..query.len())
            .map(|j| (self.kernel.signal_variance - v.column(j).norm_squared()).max(0.0))
            .collect();
        (mean.as_slice().to_vec(), var)
    }

    pub fn marginal(&self, x: &Point) -> (f64, f64) {
        let (m, v) = self.marginals(std::slice::from_ref(x));
        (m[0], v[0])
    }

    /// Prepares joint posterior draws of the latent function at `query`.
    pub fn joint_sampler(&self, query: &[Point]) -> Result<FieldSampler> {
        if query.len() <= EXACT_SAMPLER_LIMIT {
            self.exact_sampler(query)
        } else {
            Ok(self.sequential_sampler(query))
        }
    }

    fn exact_sampler(&self, query: &[Point]) -> Result<FieldSampler> {
        let (mean, cov) = self.posterior(query)?;
        let n = query.len();
        let mut jitter = 1e-10 * self.kernel.signal_variance;
        for _ in 0..6 {
            if let Some(chol) = nalgebra::Cholesky::new(&cov + DMatrix::identity(n, n) * jitter) {
                return Ok(FieldSampler::Exact { mean, lower: chol.l() });
            }
            jitter *= 10.0;
        }
        Err(Error::Conditioning("posterior covariance could not be factored".into()))
    }

    fn sequential_sampler(&self, query: &[Point]) -> FieldSampler {
        let order = coarse_to_fine(query);
        let n_data = self.inputs.len();
        // pool of conditioning points: data first, then query points as they are placed
        let mut pool: Vec<Point> = self.inputs.clone();
        let mut steps = Vec::with_capacity(query.len());
        let mut dist: Vec<(f64, usize)> = Vec::new();
        for &qi in &order {
            let x = query[qi];
            dist.clear();
            dist.extend(pool.iter().enumerate().map(|(j, p)| {
                let dx = p[0] - x[0];
                let dy = p[1] - x[1];
                (dx * dx + dy * dy, j)
            }));
            let k = SEQUENTIAL_NEIGHBOURS.min(dist.len());
            if k < dist.len() {
                dist.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                dist.truncate(k);
            }
            dist.sort_by_key(|d| d.1);
            let nb: Vec<usize> = dist.iter().map(|d| d.1).collect();
            let (weights, var) = if nb.is_empty() {
                (Vec::new(), self.kernel.signal_variance)
            } else {
                let pts: Vec<Point> = nb.iter().map(|&j| pool[j]).collect();
                let mut c = self.kernel.cross(&pts, &pts);
                for (a, &j) in nb.iter().enumerate() {
                    c[(a, a)] += if j < n_data { self.noise } else { 0.0 } + 1e-10 * self.kernel.signal_variance;
                }
                let cross = DVector::from_iterator(pts.len(), pts.iter().map(|p| self.kernel.eval(p, &x)));
                match nalgebra::Cholesky::new(c) {
                    Some(chol) => {
                        let w = chol.solve(&cross);
                        let var = (self.kernel.signal_variance - w.dot(&cross)).max(0.0);
                        (w.as_slice().to_vec(), var)
                    }
                    None => (vec![0.0; nb.len()], self.kernel.signal_variance),
                }
            };
            steps.push(SequentialStep {
                target: qi,
                neighbours: nb,
                weights,
                std: var.sqrt(),
            });
            pool.push(x);
        }
        FieldSampler::Sequential {
            data: self.values.clone(),
            len: query.len(),
            steps,
        }
    }
}

/// Coarse lattice points first, then progressively finer ones; row-major
/// within a level. Non-integer points fall into the finest level.
fn coarse_to_fine(points: &[Point]) -> Vec<usize> {
    let level = |p: &Point| -> u32 {
        let (x, y) = (p[0].round(), p[1].round());
        if (x - p[0]).abs() > 1e-9 || (y - p[1]).abs() > 1e-9 || x < 0.0 || y < 0.0 {
            return 0;
        }
        let bits = (x as u64) | (y as u64);
        bits.trailing_zeros().min(8)
    };
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| level(&points[b]).cmp(&level(&points[a])).then(a.cmp(&b)));
    idx
}

#[derive(Clone, Debug)]
pub struct SequentialStep {
    target: usize,
    /// Indices into `data ++ placed values` in placement order.
    neighbours: Vec<usize>,
    weights: Vec<f64>,
    std: f64,
}

/// Reusable joint sampler for the latent GP at a fixed set of points.
#[derive(Clone, Debug)]
pub enum FieldSampler {
    Exact {
        mean: DVector<f64>,
        lower: DMatrix<f64>,
    },
    Sequential {
        data: Vec<f64>,
        len: usize,
        steps: Vec<SequentialStep>,
    },
}

impl FieldSampler {
    pub fn len(&self) -> usize {
        match self {
            FieldSampler::Exact { mean, .. } => mean.len(),
            FieldSampler::Sequential { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        match self {
            FieldSampler::Exact { mean, lower } => {
                let z = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
                (mean + lower * z).as_slice().to_vec()
            }
            FieldSampler::Sequential { data, len, steps } => {
                let mut pool = data.clone();
                pool.reserve(*len);
                let mut out = vec![0.0; *len];
                for step in steps {
                    let z: f64 = StandardNormal.sample(rng);
                    let m: f64 = step
                        .neighbours
                        .iter()
                        .zip(&step.weights)
                        .map(|(&j, w)| w * pool[j])
                        .sum();
                    let v = m + step.std * z;
                    out[step.target] = v;
                    pool.push(v);
                }
                out
            }
        }
    }
}

/// Posterior mean vector and covariance matrix at `query`.
pub fn gp_posterior(b: &GpBelief, query: &[Point]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    b.posterior(query)
}

/// Belief with `(x, y_obs)` appended to the training data.
pub fn gp_condition(b: &GpBelief, x: Point, y_obs: f64) -> Result<GpBelief> {
    b.condition(x, y_obs)
}
