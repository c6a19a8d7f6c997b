//! Closed forms for the expected-reward and information terms.

use nalgebra::{DMatrix, DVector};

use crate::belief::{posterior_covariance, DiscreteBelief, GaussianBelief, GpBelief, LinearGaussianObsModel, ParticleBelief, Point};
use crate::linalg::log_trace;
use crate::{Error, Result, RngStream};

pub trait RewardTerm<B, A> {
    fn expected_reward(&self, belief: &B, action: &A) -> Result<f64>;
}

pub trait InfoTerm<B, A> {
    fn information(&self, belief: &B, action: &A) -> Result<f64>;
}

/// Beliefs that can produce state samples for Monte-Carlo expectations.
pub trait StateSampler {
    type State;
    fn draw(&self, rng: &mut RngStream) -> Self::State;
}

impl<S: Clone> StateSampler for ParticleBelief<S> {
    type State = S;
    fn draw(&self, rng: &mut RngStream) -> S {
        self.sample(rng).clone()
    }
}

impl StateSampler for GaussianBelief {
    type State = DVector<f64>;
    fn draw(&self, rng: &mut RngStream) -> DVector<f64> {
        self.sample(rng)
    }
}

/// `r(s, a)` over enumerated states and actions, row-major by state.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl RewardTable {
    pub fn new(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::Domain(format!(
                "reward table needs {} entries, got {}",
                n_states * n_actions,
                values.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }
}

/// `Σ_s b(s) r(s, a)`.
pub fn expected_reward_discrete(b: &DiscreteBelief, table: &RewardTable, action: usize) -> Result<f64> {
    if b.len() != table.n_states || action >= table.n_actions {
        return Err(Error::Domain(format!(
            "belief over {} states / action {} do not fit a {}x{} table",
            b.len(),
            action,
            table.n_states,
            table.n_actions
        )));
    }
    Ok(b.probs().iter().enumerate().map(|(s, p)| p * table.get(s, action)).sum())
}

/// `μ_sᵀ A + c`; the belief covariance plays no part.
pub fn expected_reward_linear(b: &GaussianBelief, weights: &DVector<f64>, offset: f64) -> Result<f64> {
    if weights.len() != b.dim() {
        return Err(Error::Domain(format!(
            "reward weights have length {}, belief dimension is {}",
            weights.len(),
            b.dim()
        )));
    }
    Ok(b.mean().dot(weights) + offset)
}

/// `Tr log Σ_b − Tr log Σ_post` (eigenvalue log-sums).
pub fn info_gain_gaussian(prior: &DMatrix<f64>, posterior: &DMatrix<f64>) -> Result<f64> {
    if prior.shape() != posterior.shape() {
        return Err(Error::Domain(format!(
            "covariances differ in shape: {:?} vs {:?}",
            prior.shape(),
            posterior.shape()
        )));
    }
    Ok(log_trace(prior, "prior covariance")? - log_trace(posterior, "posterior covariance")?)
}

/// `E[Σ_b′]` under a linear-Gaussian observation: the Kalman posterior
/// covariance, which is the same for every observation value.
pub fn expected_posterior_cov_lg(b: &GaussianBelief, m: &LinearGaussianObsModel) -> Result<DMatrix<f64>> {
    posterior_covariance(b, m)
}

/// Posterior marginal variance at `x` minus `σ_o`, floored at 0.
pub fn info_gain_gp(b: &GpBelief, x: &Point) -> f64 {
    let (_, var) = b.marginal(x);
    (var - b.noise()).max(0.0)
}

/// `Z(o | s, a)` for enumerated states, observations and actions.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteObsModel {
    n_states: usize,
    n_obs: usize,
    /// Indexed `[a][s][o]`, flattened.
    probs: Vec<f64>,
}

impl DiscreteObsModel {
    pub fn new(n_actions: usize, n_states: usize, n_obs: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_actions * n_states * n_obs {
            return Err(Error::Domain("observation table has the wrong size".into()));
        }
        for row in probs.chunks(n_obs) {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::Domain("observation rows must be probability vectors".into()));
            }
        }
        Ok(Self { n_states, n_obs, probs })
    }

    pub fn prob(&self, action: usize, state: usize, obs: usize) -> f64 {
        self.probs[(action * self.n_states + state) * self.n_obs + obs]
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }
}

/// `H(b) − Σ_o P(o | b, a) H(b_o)` in nats.
pub fn info_gain_discrete(b: &DiscreteBelief, model: &DiscreteObsModel, action: usize) -> Result<f64> {
    if b.len() != model.n_states {
        return Err(Error::Domain("belief size does not match observation model".into()));
    }
    let mut expected_posterior_entropy = 0.0;
    for o in 0..model.n_obs {
        let joint: Vec<f64> = b
            .probs()
            .iter()
            .enumerate()
            .map(|(s, p)| p * model.prob(action, s, o))
            .collect();
        let p_obs: f64 = joint.iter().sum();
        if p_obs <= 0.0 {
            continue;
        }
        let h: f64 = joint
            .iter()
            .filter(|j| **j > 0.0)
            .map(|j| {
                let q = j / p_obs;
                -q * q.ln()
            })
            .sum();
        expected_posterior_entropy += p_obs * h;
    }
    Ok(b.entropy() - expected_posterior_entropy)
}

#[derive(Clone, Debug)]
pub struct TableReward(pub RewardTable);

impl RewardTerm<DiscreteBelief, usize> for TableReward {
    fn expected_reward(&self, belief: &DiscreteBelief, action: &usize) -> Result<f64> {
        expected_reward_discrete(belief, &self.0, *action)
    }
}

/// Reward linear in the state: `action ↦ (A(a), c(a))`.
#[derive(Clone, Debug)]
pub struct LinearReward<F>(pub F);

impl<A, F> RewardTerm<GaussianBelief, A> for LinearReward<F>
where
    F: Fn(&A) -> (DVector<f64>, f64),
{
    fn expected_reward(&self, belief: &GaussianBelief, action: &A) -> Result<f64> {
        let (weights, offset) = (self.0)(action);
        expected_reward_linear(belief, &weights, offset)
    }
}

/// Exact weighted average of `r(s, a)` over a particle set.
#[derive(Clone, Debug)]
pub struct ParticleReward<F>(pub F);

impl<S: Clone, A, F> RewardTerm<ParticleBelief<S>, A> for ParticleReward<F>
where
    F: Fn(&S, &A) -> f64,
{
    fn expected_reward(&self, belief: &ParticleBelief<S>, action: &A) -> Result<f64> {
        Ok(belief.expectation(|s| (self.0)(s, action)))
    }
}

/// Monte-Carlo fallback for black-box rewards. Each evaluation restarts its
/// own seeded stream so scores are reproducible.
#[derive(Clone, Debug)]
pub struct SampledReward<F> {
    pub reward: F,
    pub samples: usize,
    pub seed: u64,
}

impl<B, A, F> RewardTerm<B, A> for SampledReward<F>
where
    B: StateSampler,
    F: Fn(&B::State, &A) -> f64,
{
    fn expected_reward(&self, belief: &B, action: &A) -> Result<f64> {
        if self.samples == 0 {
            return Err(Error::Unsupported(
                "reward has no closed form for this belief and no Monte-Carlo budget is configured".into(),
            ));
        }
        let mut rng = RngStream::new(self.seed);
        let total: f64 = (0..self.samples)
            .map(|_| (self.reward)(&belief.draw(&mut rng), action))
            .sum();
        Ok(total / self.samples as f64)
    }
}

/// Zero information for every action.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoInfo;

impl<B, A> InfoTerm<B, A> for NoInfo {
    fn information(&self, _: &B, _: &A) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteInfo(pub DiscreteObsModel);

impl InfoTerm<DiscreteBelief, usize> for DiscreteInfo {
    fn information(&self, belief: &DiscreteBelief, action: &usize) -> Result<f64> {
        info_gain_discrete(belief, &self.0, *action)
    }
}

/// Linear-Gaussian observation model per action.
#[derive(Clone, Debug)]
pub struct LinearGaussianInfo<F>(pub F);

impl<A, F> InfoTerm<GaussianBelief, A> for LinearGaussianInfo<F>
where
    F: Fn(&A) -> Result<LinearGaussianObsModel>,
{
    fn information(&self, belief: &GaussianBelief, action: &A) -> Result<f64> {
        let model = (self.0)(action)?;
        info_gain_gaussian(belief.cov(), &expected_posterior_cov_lg(belief, &model)?)
    }
}

/// Location observed by each action (`None`: the action observes nothing).
#[derive(Clone, Debug)]
pub struct GpInfo<F>(pub F);

impl<A, F> InfoTerm<GpBelief, A> for GpInfo<F>
where
    F: Fn(&A) -> Option<Point>,
{
    fn information(&self, belief: &GpBelief, action: &A) -> Result<f64> {
        Ok((self.0)(action).map_or(0.0, |x| info_gain_gp(belief, &x)))
    }
}
