//! Generative POMDP interface and the episode loop.

use std::fmt::Debug;
use std::time::Instant;

use rand::Rng;

use crate::{Error, Result, RngStream};

/// Outcome of one generative step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<S, O> {
    pub state: S,
    pub observation: O,
    pub reward: f64,
}

/// A POMDP accessed through a generative model `(s, a, rng) -> (s', o, r)`.
///
/// Planners never need transition or observation densities. Models that can
/// evaluate the observation likelihood override [`Pomdp::obs_weight`] so that
/// progressive-widening planners can weight the particles stored at an
/// observation node.
pub trait Pomdp {
    type State: Clone + Debug;
    type Action: Clone + PartialEq + Debug;
    type Obs: Clone + PartialEq + Debug;

    fn discount(&self) -> f64;

    /// Legal actions at `state`, in a stable enumeration order. Must be
    /// non-empty for non-terminal states. Tree nodes enumerate actions from a
    /// representative state, so the result should depend only on the
    /// observable part of the state.
    fn actions(&self, state: &Self::State) -> Vec<Self::Action>;

    fn is_legal(&self, state: &Self::State, action: &Self::Action) -> bool {
        self.actions(state).contains(action)
    }

    /// Uniform draw from the legal actions; used by rollouts.
    fn sample_action(&self, state: &Self::State, rng: &mut RngStream) -> Self::Action {
        let actions = self.actions(state);
        let i = rng.random_range(0..actions.len());
        actions[i].clone()
    }

    /// Generative transition. Accepts any action legal at some state sharing
    /// the observable part of `state`.
    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut RngStream,
    ) -> Step<Self::State, Self::Obs>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Relative likelihood of `obs` for the transition `state --action--> next`.
    fn obs_weight(
        &self,
        _state: &Self::State,
        _action: &Self::Action,
        _next: &Self::State,
        _obs: &Self::Obs,
    ) -> f64 {
        1.0
    }

    /// Discretized observation used for exact-match history branching.
    fn obs_key(&self, obs: &Self::Obs, bins: usize) -> Vec<i64>;

    /// Typical magnitude of returns, used to scale the UCB exploration constant.
    fn reward_scale(&self) -> f64 {
        1.0
    }
}

/// Belief representation plus its Bayesian update, as used by an agent.
pub trait BeliefUpdater<M: Pomdp> {
    type Belief: Clone + Debug;

    fn update(
        &self,
        model: &M,
        belief: &Self::Belief,
        action: &M::Action,
        obs: &M::Obs,
        rng: &mut RngStream,
    ) -> Result<Self::Belief>;

    fn sample_state(&self, model: &M, belief: &Self::Belief, rng: &mut RngStream) -> Result<M::State>;
}

/// What a policy chose, plus the depth of the search tree behind it (if any).
#[derive(Clone, Debug, PartialEq)]
pub struct Decision<A> {
    pub action: A,
    pub tree_depth: Option<usize>,
}

impl<A> Decision<A> {
    pub fn new(action: A) -> Self {
        Self {
            action,
            tree_depth: None,
        }
    }
}

pub trait Policy<M: Pomdp, B> {
    fn decide(&mut self, model: &M, belief: &B, rng: &mut RngStream) -> Result<Decision<M::Action>>;
}

impl<M, B, F> Policy<M, B> for F
where
    M: Pomdp,
    F: FnMut(&M, &B, &mut RngStream) -> Result<Decision<M::Action>>,
{
    fn decide(&mut self, model: &M, belief: &B, rng: &mut RngStream) -> Result<Decision<M::Action>> {
        self(model, belief, rng)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<A, O> {
    pub action: A,
    pub observation: O,
    pub reward: f64,
    /// Wall time of the policy call; 0 when timing is disabled.
    pub planner_ms: f64,
    pub tree_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult<A, O> {
    pub steps: Vec<StepRecord<A, O>>,
    pub discounted_return: f64,
    pub undiscounted_return: f64,
    pub seed: u64,
}

impl<A, O> EpisodeResult<A, O> {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn max_tree_depth(&self) -> Option<usize> {
        self.steps.iter().filter_map(|s| s.tree_depth).max()
    }

    pub fn mean_planner_ms(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.planner_ms).sum::<f64>() / self.steps.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeOptions {
    pub horizon: usize,
    /// Record wall time around policy calls. Disable for byte-identical reruns.
    pub measure_time: bool,
}

impl EpisodeOptions {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            measure_time: true,
        }
    }

    pub fn untimed(horizon: usize) -> Self {
        Self {
            horizon,
            measure_time: false,
        }
    }
}

/// `Σ_t γ^t r_t`, starting at `t = 0`.
pub fn discounted_return(rewards: &[f64], discount: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += weight * r;
        weight *= discount;
    }
    total
}

/// Runs one episode: decide, step the true state, update the belief, until the
/// state is terminal or `horizon` steps have been taken.
///
/// The environment, the policy and the belief updater each draw from their own
/// child stream of `rng`, so a policy that consumes more randomness does not
/// perturb the environment's trajectory.
pub fn simulate_episode<M, U, P>(
    model: &M,
    policy: &mut P,
    updater: &U,
    initial_state: M::State,
    initial_belief: U::Belief,
    options: EpisodeOptions,
    rng: &RngStream,
) -> Result<EpisodeResult<M::Action, M::Obs>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
    P: Policy<M, U::Belief>,
{
    if options.horizon == 0 {
        return Err(Error::Config("episode horizon must be at least 1".into()));
    }
    let discount = model.discount();
    if !(0.0..=1.0).contains(&discount) {
        return Err(Error::Config(format!("discount {discount} outside [0, 1]")));
    }

    let mut env_rng = rng.split(1);
    let mut policy_rng = rng.split(2);
    let mut update_rng = rng.split(3);

    let mut state = initial_state;
    let mut belief = initial_belief;
    let mut steps = Vec::new();

    for t in 0..options.horizon {
        if model.is_terminal(&state) {
            break;
        }
        let started = Instant::now();
        let decision = policy.decide(model, &belief, &mut policy_rng)?;
        let planner_ms = if options.measure_time {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        if !model.is_legal(&state, &decision.action) {
            return Err(Error::InvalidAction {
                step: t,
                detail: format!("{:?} is not legal in the current state", decision.action),
            });
        }
        let step = model.step(&state, &decision.action, &mut env_rng);
        belief = updater.update(model, &belief, &decision.action, &step.observation, &mut update_rng)?;
        state = step.state;
        steps.push(StepRecord {
            action: decision.action,
            observation: step.observation,
            reward: step.reward,
            planner_ms,
            tree_depth: decision.tree_depth,
        });
    }

    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    Ok(EpisodeResult {
        discounted_return: discounted_return(&rewards, discount),
        undiscounted_return: rewards.iter().sum(),
        steps,
        seed: rng.seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counter that terminates after `len` steps with a fixed reward per step.
    struct Chain {
        len: usize,
        reward: f64,
        discount: f64,
    }

    impl Pomdp for Chain {
        type State = usize;
        type Action = u8;
        type Obs = usize;

        fn discount(&self) -> f64 {
            self.discount
        }
        fn actions(&self, _: &usize) -> Vec<u8> {
            vec![0, 1]
        }
        fn step(&self, s: &usize, _: &u8, rng: &mut RngStream) -> Step<usize, usize> {
            // consume randomness so determinism is actually exercised
            let _: u64 = rng.random();
            Step {
                state: s + 1,
                observation: s + 1,
                reward: self.reward,
            }
        }
        fn is_terminal(&self, s: &usize) -> bool {
            *s >= self.len
        }
        fn obs_key(&self, o: &usize, _: usize) -> Vec<i64> {
            vec![*o as i64]
        }
    }

    struct Track;
    impl BeliefUpdater<Chain> for Track {
        type Belief = usize;
        fn update(&self, _: &Chain, _: &usize, _: &u8, o: &usize, _: &mut RngStream) -> Result<usize> {
            Ok(*o)
        }
        fn sample_state(&self, _: &Chain, b: &usize, _: &mut RngStream) -> Result<usize> {
            Ok(*b)
        }
    }

    fn random_policy(_: &Chain, _: &usize, rng: &mut RngStream) -> Result<Decision<u8>> {
        Ok(Decision::new(rng.random_range(0..2)))
    }

    #[test]
    fn empty_and_geometric_returns() {
        assert_eq!(discounted_return(&[], 0.3), 0.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
    }

    #[test]
    fn discounted_return_matches_horner() {
        let mut rng = RngStream::new(5);
        let rewards: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        // Horner: r0 + γ(r1 + γ(r2 + ...))
        let horner = rewards.iter().rev().fold(0.0, |acc, r| r + 0.9 * acc);
        assert!((discounted_return(&rewards, 0.9) - horner).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn discount_extremes(rewards in proptest::collection::vec(-10.0f64..10.0, 1..30)) {
            let sum: f64 = rewards.iter().sum();
            prop_assert!((discounted_return(&rewards, 1.0) - sum).abs() < 1e-9);
            prop_assert_eq!(discounted_return(&rewards, 0.0), rewards[0]);
        }
    }

    #[test]
    fn zero_reward_episode() {
        let m = Chain { len: 5, reward: 0.0, discount: 0.95 };
        let r = simulate_episode(&m, &mut random_policy, &Track, 0, 0, EpisodeOptions::untimed(10), &RngStream::new(1)).unwrap();
        assert_eq!(r.discounted_return, 0.0);
        assert_eq!(r.steps.len(), 5);
    }

    #[test]
    fn three_step_chain_return() {
        let m = Chain { len: 3, reward: 1.0, discount: 0.5 };
        let r = simulate_episode(&m, &mut random_policy, &Track, 0, 0, EpisodeOptions::untimed(10), &RngStream::new(1)).unwrap();
        assert_eq!(r.discounted_return, 1.75);
        assert_eq!(r.undiscounted_return, 3.0);
        assert_eq!(r.discounted_return, discounted_return(&r.rewards(), 0.5));
    }

    #[test]
    fn horizon_caps_length() {
        let m = Chain { len: 100, reward: 1.0, discount: 0.9 };
        let r = simulate_episode(&m, &mut random_policy, &Track, 0, 0, EpisodeOptions::untimed(7), &RngStream::new(3)).unwrap();
        assert_eq!(r.steps.len(), 7);
        assert!(simulate_episode(&m, &mut random_policy, &Track, 0, 0, EpisodeOptions::untimed(0), &RngStream::new(3)).is_err());
    }

    #[test]
    fn fixed_seed_is_byte_identical() {
        let m = Chain { len: 20, reward: 0.5, discount: 0.9 };
        let run = || {
            let r = simulate_episode(&m, &mut random_policy, &Track, 0, 0, EpisodeOptions::untimed(30), &RngStream::new(11)).unwrap();
            format!("{r:?}")
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn illegal_action_names_step() {
        let m = Chain { len: 10, reward: 0.0, discount: 0.9 };
        let mut calls = 0;
        let mut bad = |_: &Chain, _: &usize, _: &mut RngStream| {
            calls += 1;
            Ok(Decision::new(if calls == 3 { 9u8 } else { 0 }))
        };
        let err = simulate_episode(&m, &mut bad, &Track, 0, 0, EpisodeOptions::untimed(10), &RngStream::new(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidAction { step: 2, .. }), "{err:?}");
    }
}
