//! Online POMDP planning with prioritized action widening.
//!
//! The crate provides three Monte-Carlo tree search planners that share one
//! search skeleton:
//!
//! - [`planner::PlannerKind::Pomcp`]: UCT over the full legal action set with
//!   discretized observation branching.
//! - [`planner::PlannerKind::Pomcpow`]: double progressive widening with
//!   uniformly random action expansion.
//! - [`planner::PlannerKind::PaPomcpow`]: double progressive widening where new
//!   actions are drawn from a per-node candidate list ordered by an action score
//!   `k(a, b; λ) = E[r(s, a)] + λ·I(b, a)`.
//!
//! Beliefs ([`belief`]) and the score terms ([`score`]) are usable on their own.

pub mod belief;
pub mod error;
pub mod linalg;
pub mod planner;
pub mod pomdp;
pub mod rng;
pub mod score;

pub use error::{Error, Result};
pub use pomdp::{
    discounted_return, simulate_episode, BeliefUpdater, Decision, EpisodeOptions, EpisodeResult,
    Policy, Pomdp, Step, StepRecord,
};
pub use rng::RngStream;
