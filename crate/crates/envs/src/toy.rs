//! Two-step sense-or-bet problem, small enough to solve by enumeration.
//!
//! A hidden bit `z` is drawn once. `Sense` pays a small reward and reports
//! `z` through a noisy channel; `Bet` pays `+win` when `z = 1` and `-loss`
//! otherwise and reveals nothing. The episode lasts two steps, so the myopic
//! choice (bet) and the optimal one (sense, then decide) differ.

use papomcpow::belief::DiscreteBelief;
use papomcpow::score::{expected_reward_discrete, info_gain_discrete, ActionScore, DiscreteObsModel, RewardTable, ScoreTerms};
use papomcpow::{BeliefUpdater, Error, Pomdp, Result, RngStream, Step};
use rand::Rng;

pub const SENSE: usize = 0;
pub const BET: usize = 1;

/// Observation codes.
pub const OBS_NONE: usize = 0;
pub const OBS_ZERO: usize = 1;
pub const OBS_ONE: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct SenseAndBet {
    pub prior_one: f64,
    pub accuracy: f64,
    pub sense_reward: f64,
    pub win: f64,
    pub loss: f64,
    pub steps: u8,
    pub discount: f64,
}

impl Default for SenseAndBet {
    fn default() -> Self {
        Self {
            prior_one: 0.6,
            accuracy: 0.9,
            sense_reward: 0.1,
            win: 1.0,
            loss: 1.0,
            steps: 2,
            discount: 0.95,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BetState {
    pub z: bool,
    pub t: u8,
}

/// Posterior over `z` plus the (known) elapsed step count.
#[derive(Clone, Debug, PartialEq)]
pub struct BetBelief {
    pub z: DiscreteBelief,
    pub t: u8,
}

impl SenseAndBet {
    pub fn initial_belief(&self) -> Result<BetBelief> {
        Ok(BetBelief {
            z: DiscreteBelief::new(vec![1.0 - self.prior_one, self.prior_one])?,
            t: 0,
        })
    }

    pub fn reward(&self, z: bool, a: usize) -> f64 {
        match (a, z) {
            (SENSE, _) => self.sense_reward,
            (_, true) => self.win,
            (_, false) => -self.loss,
        }
    }

    /// `P(o | z, a)`.
    pub fn obs_prob(&self, z: bool, a: usize, o: usize) -> f64 {
        match a {
            SENSE => {
                let truthful = if z { OBS_ONE } else { OBS_ZERO };
                match o {
                    OBS_NONE => 0.0,
                    _ if o == truthful => self.accuracy,
                    _ => 1.0 - self.accuracy,
                }
            }
            _ => f64::from(u8::from(o == OBS_NONE)),
        }
    }

    fn reward_table(&self) -> RewardTable {
        RewardTable::new(2, 2, vec![self.reward(false, SENSE), self.reward(false, BET), self.reward(true, SENSE), self.reward(true, BET)])
            .expect("2x2 table")
    }

    fn obs_table(&self) -> DiscreteObsModel {
        let mut probs = Vec::with_capacity(12);
        for a in [SENSE, BET] {
            for z in [false, true] {
                for o in [OBS_NONE, OBS_ZERO, OBS_ONE] {
                    probs.push(self.obs_prob(z, a, o));
                }
            }
        }
        DiscreteObsModel::new(2, 2, 3, probs).expect("rows sum to one")
    }
}

impl Pomdp for SenseAndBet {
    type State = BetState;
    type Action = usize;
    type Obs = usize;

    fn discount(&self) -> f64 {
        self.discount
    }

    fn actions(&self, _: &BetState) -> Vec<usize> {
        vec![SENSE, BET]
    }

    fn sample_action(&self, _: &BetState, rng: &mut RngStream) -> usize {
        rng.random_range(0..2)
    }

    fn step(&self, s: &BetState, a: &usize, rng: &mut RngStream) -> Step<BetState, usize> {
        let observation = if *a == SENSE {
            let truthful = rng.random::<f64>() < self.accuracy;
            if s.z == truthful {
                OBS_ONE
            } else {
                OBS_ZERO
            }
        } else {
            OBS_NONE
        };
        Step {
            state: BetState { z: s.z, t: s.t + 1 },
            observation,
            reward: self.reward(s.z, *a),
        }
    }

    fn is_terminal(&self, s: &BetState) -> bool {
        s.t >= self.steps
    }

    fn obs_weight(&self, _: &BetState, a: &usize, next: &BetState, o: &usize) -> f64 {
        self.obs_prob(next.z, *a, *o)
    }

    fn obs_key(&self, o: &usize, _: usize) -> Vec<i64> {
        vec![*o as i64]
    }

    fn reward_scale(&self) -> f64 {
        self.win.max(self.loss).max(self.sense_reward.abs())
    }
}

/// Exact Bayes filter on `z`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BetUpdater;

impl BeliefUpdater<SenseAndBet> for BetUpdater {
    type Belief = BetBelief;

    fn update(&self, m: &SenseAndBet, b: &BetBelief, a: &usize, o: &usize, _: &mut RngStream) -> Result<BetBelief> {
        let joint: Vec<f64> = [false, true]
            .iter()
            .zip(b.z.probs())
            .map(|(z, p)| p * m.obs_prob(*z, *a, *o))
            .collect();
        let total: f64 = joint.iter().sum();
        if total <= 0.0 {
            return Err(Error::Domain(format!("observation {o} impossible after action {a}")));
        }
        Ok(BetBelief {
            z: DiscreteBelief::new(joint.iter().map(|j| j / total).collect())?,
            t: b.t + 1,
        })
    }

    fn sample_state(&self, _: &SenseAndBet, b: &BetBelief, rng: &mut RngStream) -> Result<BetState> {
        Ok(BetState {
            z: rng.random::<f64>() < b.z.probs()[1],
            t: b.t,
        })
    }
}

/// Expected immediate reward and mutual information about `z`.
#[derive(Clone, Debug)]
pub struct BetScore {
    rewards: RewardTable,
    obs: DiscreteObsModel,
}

impl BetScore {
    pub fn new(m: &SenseAndBet) -> Self {
        Self {
            rewards: m.reward_table(),
            obs: m.obs_table(),
        }
    }
}

impl ActionScore<BetBelief, usize> for BetScore {
    fn score_terms(&self, b: &BetBelief, actions: &[usize]) -> Result<Vec<ScoreTerms>> {
        actions
            .iter()
            .map(|a| {
                Ok(ScoreTerms::new(
                    expected_reward_discrete(&b.z, &self.rewards, *a)?,
                    info_gain_discrete(&b.z, &self.obs, *a)?,
                ))
            })
            .collect()
    }
}
