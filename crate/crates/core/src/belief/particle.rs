use rand::Rng;

use crate::pomdp::{BeliefUpdater, Pomdp};
use crate::{Error, Result, RngStream};

/// Particle set, optionally weighted. Unweighted means uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    weights: Option<Vec<f64>>,
}

impl<S: Clone> ParticleBelief<S> {
    pub fn unweighted(particles: Vec<S>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Domain("particle belief needs at least one particle".into()));
        }
        Ok(Self {
            particles,
            weights: None,
        })
    }

    /// Weights are normalized to sum to one.
    pub fn weighted(particles: Vec<S>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() || particles.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} particles with {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("particle weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Conditioning("all particle weights are zero".into()));
        }
        Ok(Self {
            particles,
            weights: Some(weights.into_iter().map(|w| w / total).collect()),
        })
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.particles.len() as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// `1 / Σ w_i²`.
    pub fn effective_sample_size(&self) -> f64 {
        match &self.weights {
            Some(w) => 1.0 / w.iter().map(|x| x * x).sum::<f64>(),
            None => self.particles.len() as f64,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> &S {
        match &self.weights {
            None => &self.particles[rng.random_range(0..self.particles.len())],
            Some(w) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, wi) in w.iter().enumerate() {
                    acc += wi;
                    if u < acc {
                        return &self.particles[i];
                    }
                }
                // rounding left u above the last partial sum
                let last = w.iter().rposition(|x| *x > 0.0).unwrap_or(w.len() - 1);
                &self.particles[last]
            }
        }
    }

    /// Systematic resampling to an unweighted set of the same size.
    pub fn systematic_resample(&self, rng: &mut RngStream) -> Self {
        let n = self.particles.len();
        let Some(w) = &self.weights else {
            return self.clone();
        };
        let start: f64 = rng.random::<f64>() / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut acc = w[0];
        let mut i = 0;
        for k in 0..n {
            let u = start + k as f64 / n as f64;
            while u > acc && i + 1 < n {
                i += 1;
                acc += w[i];
            }
            out.push(self.particles[i].clone());
        }
        Self {
            particles: out,
            weights: None,
        }
    }

    /// Weighted average of `f` over the particles.
    pub fn expectation(&self, mut f: impl FnMut(&S) -> f64) -> f64 {
        self.particles
            .iter()
            .enumerate()
            .map(|(i, s)| self.weight(i) * f(s))
            .sum()
    }
}

/// Sequential importance resampling with the model's observation weights.
/// Resamples systematically when the effective sample size drops below half
/// the particle count.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParticleFilter;

impl<M: Pomdp> BeliefUpdater<M> for ParticleFilter {
    type Belief = ParticleBelief<M::State>;

    fn update(
        &self,
        model: &M,
        belief: &Self::Belief,
        action: &M::Action,
        obs: &M::Obs,
        rng: &mut RngStream,
    ) -> Result<Self::Belief> {
        let mut next = Vec::with_capacity(belief.len());
        let mut weights = Vec::with_capacity(belief.len());
        for (i, s) in belief.particles().iter().enumerate() {
            let step = model.step(s, action, rng);
            let w = belief.weight(i) * model.obs_weight(s, action, &step.state, obs);
            next.push(step.state);
            weights.push(w);
        }
        let updated = ParticleBelief::weighted(next, weights)
            .map_err(|_| Error::Conditioning("particle depletion: no particle explains the observation".into()))?;
        if updated.effective_sample_size() < 0.5 * updated.len() as f64 {
            Ok(updated.systematic_resample(rng))
        } else {
            Ok(updated)
        }
    }

    fn sample_state(&self, _model: &M, belief: &Self::Belief, rng: &mut RngStream) -> Result<M::State> {
        Ok(belief.sample(rng).clone())
    }
}
