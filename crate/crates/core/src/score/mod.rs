//! The action score `k(a, b; λ) = E_{s∼b}[r(s, a)] + λ·I(b, a)`.
//!
//! Each score is split into an expected-reward term and an information term.
//! Planners only ever see the two terms through [`ActionScore`]; the weighting
//! by `λ` and the optional min-max normalization happen at selection time.

mod instrument;
mod terms;

pub use instrument::{in_selection_scope, CountingScore, SelectionScope};
pub use terms::{
    expected_posterior_cov_lg, expected_reward_discrete, expected_reward_linear, info_gain_discrete,
    info_gain_gaussian, info_gain_gp, DiscreteInfo, DiscreteObsModel, GpInfo, InfoTerm, LinearGaussianInfo,
    LinearReward, NoInfo, ParticleReward, RewardTable, RewardTerm, SampledReward, StateSampler, TableReward,
};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionMode {
    /// One argmax per weight in `Λ`: a short candidate list along the
    /// reward/information trade-off.
    Subset,
    /// The whole action set ordered by the score at a single weight.
    Prioritization,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreConfig {
    lambdas: Vec<f64>,
    mode: SelectionMode,
    normalize: bool,
}

impl ScoreConfig {
    pub fn new(lambdas: Vec<f64>, mode: SelectionMode, normalize: bool) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Config("weight set must be non-empty".into()));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config(format!("weights must be finite and non-negative, got {bad}")));
        }
        Ok(Self {
            lambdas,
            mode,
            normalize,
        })
    }

    pub fn subset(lambdas: Vec<f64>) -> Result<Self> {
        Self::new(lambdas, SelectionMode::Subset, true)
    }

    pub fn prioritization(lambda: f64) -> Result<Self> {
        Self::new(vec![lambda], SelectionMode::Prioritization, true)
    }

    /// `start, start + step, ...` up to and including `end`.
    pub fn linspace(start: f64, end: f64, step: f64) -> Vec<f64> {
        let n = ((end - start) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    /// Weights in effect: all of them for subset mode, the first otherwise.
    pub fn lambdas(&self) -> &[f64] {
        match self.mode {
            SelectionMode::Subset => &self.lambdas,
            SelectionMode::Prioritization => &self.lambdas[..1],
        }
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }
}

/// Reward and information components of one action's score.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScoreTerms {
    pub reward: f64,
    pub info: f64,
}

impl ScoreTerms {
    pub fn new(reward: f64, info: f64) -> Self {
        Self { reward, info }
    }

    pub fn combined(&self, lambda: f64) -> f64 {
        self.reward + lambda * self.info
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredAction<A> {
    pub action: A,
    pub reward: f64,
    pub info: f64,
    pub lambda: f64,
    pub combined: f64,
}

/// Batch score evaluation over a belief's candidate actions.
///
/// This is the only interface through which planners read scores.
pub trait ActionScore<B, A> {
    fn score_terms(&self, belief: &B, actions: &[A]) -> Result<Vec<ScoreTerms>>;
}

impl<B, A, T: ActionScore<B, A> + ?Sized> ActionScore<B, A> for &T {
    fn score_terms(&self, belief: &B, actions: &[A]) -> Result<Vec<ScoreTerms>> {
        (**self).score_terms(belief, actions)
    }
}

/// Adapts a per-action reward term and information term into an
/// [`ActionScore`].
#[derive(Clone, Debug)]
pub struct TermScore<R, I> {
    pub reward: R,
    pub info: I,
}

impl<R, I> TermScore<R, I> {
    pub fn new(reward: R, info: I) -> Self {
        Self { reward, info }
    }
}

impl<B, A, R, I> ActionScore<B, A> for TermScore<R, I>
where
    R: RewardTerm<B, A>,
    I: InfoTerm<B, A>,
{
    fn score_terms(&self, belief: &B, actions: &[A]) -> Result<Vec<ScoreTerms>> {
        actions
            .iter()
            .map(|a| {
                Ok(ScoreTerms::new(
                    self.reward.expected_reward(belief, a)?,
                    self.info.information(belief, a)?,
                ))
            })
            .collect()
    }
}

/// Scores one action: `combined = E[r] + λ·I`, with both terms kept.
pub fn action_score<B, A: Clone, R, I>(action: &A, belief: &B, lambda: f64, reward: &R, info: &I) -> Result<ScoredAction<A>>
where
    R: RewardTerm<B, A>,
    I: InfoTerm<B, A>,
{
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    let r = reward.expected_reward(belief, action)?;
    let i = info.information(belief, action)?;
    Ok(ScoredAction {
        action: action.clone(),
        reward: r,
        info: i,
        lambda,
        combined: r + lambda * i,
    })
}

/// Affine min-max map onto `[-1, 1]`; a constant list maps to all zeros.
pub fn normalize_components(values: &[f64]) -> Vec<f64> {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let range = max - min;
    if !(range > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| 2.0 * (v - min) / range - 1.0).collect()
}

/// Applies the configured normalization to a batch of terms.
pub fn prepare_terms(terms: &[ScoreTerms], config: &ScoreConfig) -> Vec<ScoreTerms> {
    if !config.normalize() || terms.is_empty() {
        return terms.to_vec();
    }
    let rewards: Vec<f64> = terms.iter().map(|t| t.reward).collect();
    let infos: Vec<f64> = terms.iter().map(|t| t.info).collect();
    normalize_components(&rewards)
        .into_iter()
        .zip(normalize_components(&infos))
        .map(|(r, i)| ScoreTerms::new(r, i))
        .collect()
}
