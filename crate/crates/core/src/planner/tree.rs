//! Arena-allocated search tree of alternating observation and action nodes.

use rand::Rng;

use crate::{Error, Result, RngStream};

pub type ObsId = usize;
pub type ActId = usize;

pub const ROOT: ObsId = 0;

/// A state reached through an `(h, a, o)` edge, with the reward of the
/// transition that produced it and its observation weight.
#[derive(Clone, Debug)]
pub struct Particle<S> {
    pub state: S,
    pub reward: f64,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct ObsNode<S, A, O, B> {
    /// `N(h)`.
    pub visits: u64,
    /// Action levels between the root and this node.
    pub depth: usize,
    pub parent: Option<ActId>,
    pub observation: Option<O>,
    pub obs_key: Option<Vec<i64>>,
    /// `C(h)` in insertion order.
    pub children: Vec<ActId>,
    pub belief: Option<B>,
    pub particles: Vec<Particle<S>>,
    particle_weight: f64,
    /// Cached candidate order; `E(h)` is `candidates[next_candidate..]`.
    candidates: Option<Vec<A>>,
    next_candidate: usize,
    /// Actions not yet added by random widening.
    untried: Option<Vec<A>>,
}

impl<S, A, O, B> ObsNode<S, A, O, B> {
    fn new(depth: usize, parent: Option<ActId>, observation: Option<O>, obs_key: Option<Vec<i64>>) -> Self {
        Self {
            visits: 0,
            depth,
            parent,
            observation,
            obs_key,
            children: Vec::new(),
            belief: None,
            particles: Vec::new(),
            particle_weight: 0.0,
            candidates: None,
            next_candidate: 0,
            untried: None,
        }
    }

    /// Full cached candidate order, if it has been computed.
    pub fn candidate_order(&self) -> Option<&[A]> {
        self.candidates.as_deref()
    }

    /// `E(h)`: candidates not yet moved into `C(h)`.
    pub fn remaining_candidates(&self) -> Option<&[A]> {
        self.candidates.as_deref().map(|c| &c[self.next_candidate..])
    }
}

#[derive(Clone, Debug)]
pub struct ObsEdge {
    pub node: ObsId,
    /// Number of times this observation was generated while widening was open.
    pub count: u64,
}

#[derive(Clone, Debug)]
pub struct ActionNode<A> {
    pub action: A,
    pub parent: ObsId,
    /// `N(ha)`.
    pub visits: u64,
    /// `Q(h, a)`, a running mean of backed-up returns.
    pub q: f64,
    /// Plain sum of backed-up returns, kept alongside `q` for auditing.
    pub return_sum: f64,
    pub children: Vec<ObsEdge>,
}

#[derive(Clone, Debug)]
pub struct SearchTree<S, A, O, B> {
    obs: Vec<ObsNode<S, A, O, B>>,
    acts: Vec<ActionNode<A>>,
}

/// `k · n^α`.
pub fn widening_bound(k: f64, n: u64, alpha: f64) -> f64 {
    k * (n as f64).powf(alpha)
}

impl<S, A: Clone + PartialEq, O, B> SearchTree<S, A, O, B> {
    pub fn new(root_belief: Option<B>) -> Self {
        let mut root = ObsNode::new(0, None, None, None);
        root.belief = root_belief;
        Self {
            obs: vec![root],
            acts: Vec::new(),
        }
    }

    pub fn obs(&self, h: ObsId) -> &ObsNode<S, A, O, B> {
        &self.obs[h]
    }

    pub fn obs_mut(&mut self, h: ObsId) -> &mut ObsNode<S, A, O, B> {
        &mut self.obs[h]
    }

    pub fn act(&self, ha: ActId) -> &ActionNode<A> {
        &self.acts[ha]
    }

    pub fn act_mut(&mut self, ha: ActId) -> &mut ActionNode<A> {
        &mut self.acts[ha]
    }

    pub fn obs_count(&self) -> usize {
        self.obs.len()
    }

    pub fn action_count(&self) -> usize {
        self.acts.len()
    }

    pub fn obs_nodes(&self) -> impl Iterator<Item = (ObsId, &ObsNode<S, A, O, B>)> {
        self.obs.iter().enumerate()
    }

    pub fn action_nodes(&self) -> impl Iterator<Item = (ActId, &ActionNode<A>)> {
        self.acts.iter().enumerate()
    }

    pub fn add_action(&mut self, h: ObsId, action: A) -> ActId {
        let id = self.acts.len();
        self.acts.push(ActionNode {
            action,
            parent: h,
            visits: 0,
            q: 0.0,
            return_sum: 0.0,
            children: Vec::new(),
        });
        self.obs[h].children.push(id);
        id
    }

    pub fn add_observation(&mut self, ha: ActId, observation: O, obs_key: Option<Vec<i64>>) -> ObsId {
        let id = self.obs.len();
        let depth = self.obs[self.acts[ha].parent].depth + 1;
        self.obs.push(ObsNode::new(depth, Some(ha), Some(observation), obs_key));
        self.acts[ha].children.push(ObsEdge { node: id, count: 0 });
        id
    }

    pub fn push_particle(&mut self, h: ObsId, particle: Particle<S>) {
        let node = &mut self.obs[h];
        node.particle_weight += particle.weight;
        node.particles.push(particle);
    }

    /// Particle drawn in proportion to weight; the most recent one if all
    /// weights are zero.
    pub fn sample_particle(&self, h: ObsId, rng: &mut RngStream) -> Option<&Particle<S>> {
        let node = &self.obs[h];
        let last = node.particles.last()?;
        if !(node.particle_weight > 0.0) {
            return Some(last);
        }
        let u = rng.random::<f64>() * node.particle_weight;
        let mut acc = 0.0;
        for p in &node.particles {
            acc += p.weight;
            if u < acc {
                return Some(p);
            }
        }
        node.particles.iter().rev().find(|p| p.weight > 0.0)
    }

    pub fn has_candidates(&self, h: ObsId) -> bool {
        self.obs[h].candidates.is_some()
    }

    pub fn set_candidates(&mut self, h: ObsId, candidates: Vec<A>) {
        let node = &mut self.obs[h];
        node.candidates = Some(candidates);
        node.next_candidate = 0;
    }

    /// Moves the head of `E(h)` into `C(h)` when `|C(h)| ≤ k·N(h)^α`.
    /// Returns whether an action was added.
    pub fn widen_from_candidates(&mut self, h: ObsId, k: f64, alpha: f64) -> Result<bool> {
        let node = &self.obs[h];
        let Some(cands) = &node.candidates else {
            return Err(Error::Invariant(format!("node {h} has no candidate order")));
        };
        if (node.children.len() as f64) <= widening_bound(k, node.visits, alpha) && node.next_candidate < cands.len() {
            let a = cands[node.next_candidate].clone();
            self.obs[h].next_candidate += 1;
            self.add_action(h, a);
            return Ok(true);
        }
        Ok(false)
    }

    /// Adds a uniformly random not-yet-added action when `|C(h)| ≤ k·N(h)^α`.
    pub fn widen_random(
        &mut self,
        h: ObsId,
        k: f64,
        alpha: f64,
        legal: impl FnOnce() -> Vec<A>,
        rng: &mut RngStream,
    ) -> bool {
        let node = &mut self.obs[h];
        if node.untried.is_none() {
            node.untried = Some(legal());
        }
        if (node.children.len() as f64) > widening_bound(k, node.visits, alpha) {
            return false;
        }
        let pool = node.untried.as_mut().expect("initialized above");
        if pool.is_empty() {
            return false;
        }
        let i = rng.random_range(0..pool.len());
        let a = pool.swap_remove(i);
        self.add_action(h, a);
        true
    }

    /// Adds every action in `legal` (full expansion).
    pub fn expand_all(&mut self, h: ObsId, legal: Vec<A>) {
        for a in legal {
            self.add_action(h, a);
        }
    }

    /// `argmax_{a∈C(h)} Q(h,a) + c·√(ln N(h) / N(ha))`; unvisited children win,
    /// earliest-inserted first.
    pub fn ucb_select(&self, h: ObsId, exploration: f64) -> Result<ActId> {
        let node = &self.obs[h];
        if node.children.is_empty() {
            return Err(Error::Invariant(format!("node {h} has no child actions after widening")));
        }
        let ln_n = (node.visits.max(1) as f64).ln();
        let mut best = None;
        let mut best_value = f64::NEG_INFINITY;
        for &ha in &node.children {
            let child = &self.acts[ha];
            if child.visits == 0 {
                return Ok(ha);
            }
            let value = child.q + exploration * (ln_n / child.visits as f64).sqrt();
            if value > best_value {
                best_value = value;
                best = Some(ha);
            }
        }
        best.ok_or_else(|| Error::Invariant(format!("no finite UCB value at node {h}")))
    }

    /// Root child with the highest `Q` among visited children.
    pub fn best_root_action(&self) -> Option<ActId> {
        let mut best = None;
        let mut best_q = f64::NEG_INFINITY;
        for &ha in &self.obs[ROOT].children {
            let a = &self.acts[ha];
            if a.visits > 0 && a.q > best_q {
                best_q = a.q;
                best = Some(ha);
            }
        }
        best
    }

    /// Records one backed-up return through `ha`.
    pub fn backup(&mut self, ha: ActId, total: f64) {
        let a = &mut self.acts[ha];
        a.return_sum += total;
        a.q += (total - a.q) / a.visits.max(1) as f64;
    }

    /// Longest root-to-leaf path counted in action levels.
    pub fn max_depth(&self) -> usize {
        self.acts
            .iter()
            .map(|a| self.obs[a.parent].depth + 1)
            .max()
            .unwrap_or(0)
    }
}
