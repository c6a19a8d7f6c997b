//! Monte-Carlo tree search planners.

mod invariants;
mod search;
mod tree;

use std::fmt;
use std::str::FromStr;

pub use invariants::{check_widening, widening_audit};
pub use tree::{widening_bound, ActId, ActionNode, ObsEdge, ObsId, ObsNode, Particle, SearchTree, ROOT};

use crate::score::{prepare_terms, ActionScore, ScoreConfig, ScoreTerms, SelectionMode, SelectionScope};
use crate::{BeliefUpdater, Error, Pomdp, Result, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    PaPomcpow,
    Pomcpow,
    Pomcp,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::PaPomcpow, PlannerKind::Pomcpow, PlannerKind::Pomcp];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::PaPomcpow => "pa-pomcpow",
            PlannerKind::Pomcpow => "pomcpow",
            PlannerKind::Pomcp => "pomcp",
        }
    }

    pub fn uses_action_widening(self) -> bool {
        !matches!(self, PlannerKind::Pomcp)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "pa-pomcpow" | "papomcpow" => Ok(PlannerKind::PaPomcpow),
            "pomcpow" => Ok(PlannerKind::Pomcpow),
            "pomcp" => Ok(PlannerKind::Pomcp),
            other => Err(Error::Config(format!("unknown planner '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Simulations per planning call.
    pub budget: usize,
    pub max_depth: usize,
    /// Multiplied by the model's reward scale to give the UCB constant.
    pub exploration: f64,
    pub k_action: f64,
    pub alpha_action: f64,
    pub k_obs: f64,
    pub alpha_obs: f64,
    pub discount: f64,
    /// Bins per observation dimension for exact-match branching.
    pub obs_bins: usize,
    pub score: ScoreConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            budget: 500,
            max_depth: 20,
            exploration: 1.0,
            k_action: 10.0,
            alpha_action: 0.5,
            k_obs: 5.0,
            alpha_obs: 0.25,
            discount: 0.95,
            obs_bins: 10,
            score: ScoreConfig::prioritization(1.0).expect("valid default"),
        }
    }
}

impl PlannerConfig {
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_score(mut self, score: ScoreConfig) -> Self {
        self.score = score;
        self
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.exploration >= 0.0) || !self.exploration.is_finite() {
            return bad(format!("exploration must be finite and non-negative, got {}", self.exploration));
        }
        for (name, k) in [("k_action", self.k_action), ("k_obs", self.k_obs)] {
            if !(k > 0.0) || !k.is_finite() {
                return bad(format!("{name} must be positive, got {k}"));
            }
        }
        for (name, a) in [("alpha_action", self.alpha_action), ("alpha_obs", self.alpha_obs)] {
            if !(0.0..1.0).contains(&a) {
                return bad(format!("{name} must lie in [0, 1), got {a}"));
            }
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount must lie in [0, 1], got {}", self.discount));
        }
        if self.obs_bins == 0 {
            return bad("obs_bins must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-root-action summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RootActionStats<A> {
    pub action: A,
    pub visits: u64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeStats<A> {
    /// Deepest action level reached.
    pub max_depth: usize,
    pub obs_nodes: usize,
    pub action_nodes: usize,
    pub root_visits: u64,
    pub root_actions: Vec<RootActionStats<A>>,
    /// Number of candidate-selection calls (one per expanded node).
    pub select_calls: usize,
}

pub type PlannerTree<M, B> =
    SearchTree<<M as Pomdp>::State, <M as Pomdp>::Action, <M as Pomdp>::Obs, B>;

pub struct PlanResult<M: Pomdp, B> {
    pub action: M::Action,
    pub stats: TreeStats<M::Action>,
    pub tree: PlannerTree<M, B>,
}

impl<M: Pomdp, B> fmt::Debug for PlanResult<M, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanResult")
            .field("action", &self.action)
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

/// Indices into `terms` in candidate order.
///
/// Subset mode takes, for each weight in turn, the best not-yet-chosen action,
/// giving `min(|Λ|, |actions|)` entries.
/// Prioritization mode sorts all actions by the score at the single weight.
/// Ties go to the earlier index.
pub fn select_order(terms: &[ScoreTerms], config: &ScoreConfig) -> Vec<usize> {
    let prepared = prepare_terms(terms, config);
    match config.mode() {
        SelectionMode::Subset => {
            let mut taken = vec![false; prepared.len()];
            let mut out = Vec::new();
            for &lambda in config.lambdas() {
                let mut best: Option<(usize, f64)> = None;
                for (i, t) in prepared.iter().enumerate() {
                    if taken[i] {
                        continue;
                    }
                    let v = t.combined(lambda);
                    if best.is_none_or(|(_, bv)| v > bv) {
                        best = Some((i, v));
                    }
                }
                let Some((i, _)) = best else { break };
                taken[i] = true;
                out.push(i);
            }
            out
        }
        SelectionMode::Prioritization => {
            let lambda = config.lambdas()[0];
            let values: Vec<f64> = prepared.iter().map(|t| t.combined(lambda)).collect();
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
            idx
        }
    }
}

/// Candidate actions for a belief, in the order they should be added to a
/// tree node. The score is evaluated exactly once, as a batch.
pub fn select_actions<B, A: Clone, S: ActionScore<B, A> + ?Sized>(
    belief: &B,
    actions: &[A],
    score: &S,
    config: &ScoreConfig,
) -> Result<Vec<A>> {
    if actions.is_empty() {
        return Ok(Vec::new());
    }
    let terms = {
        let _scope = SelectionScope::enter();
        score.score_terms(belief, actions)?
    };
    if terms.len() != actions.len() {
        return Err(Error::Invariant(format!(
            "score returned {} terms for {} actions",
            terms.len(),
            actions.len()
        )));
    }
    if let Some(t) = terms.iter().find(|t| !t.reward.is_finite() || !t.info.is_finite()) {
        return Err(Error::Domain(format!("non-finite score terms {t:?}")));
    }
    Ok(select_order(&terms, config)
        .into_iter()
        .map(|i| actions[i].clone())
        .collect())
}

/// One step of prioritized action widening followed by UCB selection.
///
/// On the node's first visit the candidate order is computed by `candidates`
/// and cached; later calls reuse it without touching the score.
pub fn action_prog_widen<S, A, O, B>(
    tree: &mut SearchTree<S, A, O, B>,
    h: ObsId,
    config: &PlannerConfig,
    exploration: f64,
    candidates: impl FnOnce(&mut SearchTree<S, A, O, B>) -> Result<Vec<A>>,
) -> Result<ActId>
where
    A: Clone + PartialEq,
{
    if !tree.has_candidates(h) {
        let c = candidates(tree)?;
        tree.set_candidates(h, c);
    }
    tree.widen_from_candidates(h, config.k_action, config.alpha_action)?;
    tree.ucb_select(h, exploration)
}

/// Longest root-to-leaf path in action levels.
pub fn max_tree_depth<S, A: Clone + PartialEq, O, B>(tree: &SearchTree<S, A, O, B>) -> usize {
    tree.max_depth()
}

/// Plans with prioritized action widening.
pub fn pa_pomcpow_plan<M, U, Sc>(
    model: &M,
    updater: &U,
    score: &Sc,
    belief: &U::Belief,
    config: &PlannerConfig,
    rng: &mut RngStream,
) -> Result<PlanResult<M, U::Belief>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
    Sc: ActionScore<U::Belief, M::Action> + ?Sized,
{
    search::plan(model, updater, Some(&score as &dyn ActionScore<U::Belief, M::Action>), belief, config, PlannerKind::PaPomcpow, rng)
}

/// Plans with double progressive widening and random action expansion.
pub fn pomcpow_plan<M, U>(
    model: &M,
    updater: &U,
    belief: &U::Belief,
    config: &PlannerConfig,
    rng: &mut RngStream,
) -> Result<PlanResult<M, U::Belief>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    search::plan(model, updater, None, belief, config, PlannerKind::Pomcpow, rng)
}

/// Plans with full action expansion and discretized observation branching.
pub fn pomcp_plan<M, U>(
    model: &M,
    updater: &U,
    belief: &U::Belief,
    config: &PlannerConfig,
    rng: &mut RngStream,
) -> Result<PlanResult<M, U::Belief>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    search::plan(model, updater, None, belief, config, PlannerKind::Pomcp, rng)
}

/// Dispatches on `kind`; `score` is required for the prioritized planner and
/// ignored otherwise.
pub fn plan<M, U>(
    kind: PlannerKind,
    model: &M,
    updater: &U,
    score: Option<&dyn ActionScore<U::Belief, M::Action>>,
    belief: &U::Belief,
    config: &PlannerConfig,
    rng: &mut RngStream,
) -> Result<PlanResult<M, U::Belief>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    match kind {
        PlannerKind::PaPomcpow if score.is_none() => {
            Err(Error::Config("the prioritized planner needs an action score".into()))
        }
        PlannerKind::PaPomcpow => search::plan(model, updater, score, belief, config, kind, rng),
        _ => search::plan(model, updater, None, belief, config, kind, rng),
    }
}
