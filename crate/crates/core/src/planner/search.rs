use rand::Rng;

use super::tree::{ActId, ObsId, Particle, ROOT};
use super::invariants::record_audit;
use super::{check_widening, select_actions, PlanResult, PlannerConfig, PlannerKind, PlannerTree, RootActionStats, TreeStats};
use crate::score::ActionScore;
use crate::{BeliefUpdater, Error, Pomdp, Result, RngStream};

struct Search<'a, M: Pomdp, U: BeliefUpdater<M>> {
    model: &'a M,
    updater: &'a U,
    score: Option<&'a dyn ActionScore<U::Belief, M::Action>>,
    config: &'a PlannerConfig,
    kind: PlannerKind,
    exploration: f64,
    tree: PlannerTree<M, U::Belief>,
    select_calls: usize,
    rng: &'a mut RngStream,
}

pub(super) fn plan<M, U>(
    model: &M,
    updater: &U,
    score: Option<&dyn ActionScore<U::Belief, M::Action>>,
    belief: &U::Belief,
    config: &PlannerConfig,
    kind: PlannerKind,
    rng: &mut RngStream,
) -> Result<PlanResult<M, U::Belief>>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    config.validate()?;
    let root_belief = matches!(kind, PlannerKind::PaPomcpow).then(|| belief.clone());
    let mut search = Search {
        model,
        updater,
        score,
        config,
        kind,
        exploration: config.exploration * model.reward_scale(),
        tree: PlannerTree::<M, U::Belief>::new(root_belief),
        select_calls: 0,
        rng,
    };
    for _ in 0..config.budget {
        let s = updater.sample_state(model, belief, search.rng)?;
        search.simulate(ROOT, s, 0)?;
    }

    if cfg!(debug_assertions) {
        let violations = check_widening(&search.tree, config, kind);
        record_audit(violations.len());
        if !violations.is_empty() {
            return Err(Error::Invariant(violations.join("; ")));
        }
    }

    let tree = search.tree;
    let best = tree
        .best_root_action()
        .ok_or_else(|| Error::Planner("no root action was visited; is the root state terminal?".into()))?;
    let root = tree.obs(ROOT);
    let stats = TreeStats {
        max_depth: tree.max_depth(),
        obs_nodes: tree.obs_count(),
        action_nodes: tree.action_count(),
        root_visits: root.visits,
        root_actions: root
            .children
            .iter()
            .map(|&ha| {
                let a = tree.act(ha);
                RootActionStats {
                    action: a.action.clone(),
                    visits: a.visits,
                    q: a.q,
                }
            })
            .collect(),
        select_calls: search.select_calls,
    };
    Ok(PlanResult {
        action: tree.act(best).action.clone(),
        stats,
        tree,
    })
}

impl<M: Pomdp, U: BeliefUpdater<M>> Search<'_, M, U> {
    fn simulate(&mut self, h: ObsId, s: M::State, depth: usize) -> Result<f64> {
        if depth >= self.config.max_depth || self.model.is_terminal(&s) {
            return Ok(0.0);
        }
        self.tree.obs_mut(h).visits += 1;
        let ha = self.choose_action(h, &s)?;
        let action = self.tree.act(ha).action.clone();
        let step = self.model.step(&s, &action, self.rng);
        self.tree.act_mut(ha).visits += 1;
        let gamma = self.config.discount;

        let total = match self.kind {
            PlannerKind::Pomcp => {
                let key = self.model.obs_key(&step.observation, self.config.obs_bins);
                let existing = self
                    .tree
                    .act(ha)
                    .children
                    .iter()
                    .position(|e| self.tree.obs(e.node).obs_key.as_ref() == Some(&key));
                let (child, fresh) = match existing {
                    Some(i) => (self.tree.act(ha).children[i].node, false),
                    None => (self.tree.add_observation(ha, step.observation, Some(key)), true),
                };
                self.bump_edge(ha, child);
                if fresh {
                    step.reward + gamma * self.rollout(step.state, depth + 1)
                } else {
                    step.reward + gamma * self.simulate(child, step.state, depth + 1)?
                }
            }
            PlannerKind::Pomcpow | PlannerKind::PaPomcpow => {
                let node = self.tree.act(ha);
                let open = node.children.len() as f64
                    <= super::widening_bound(self.config.k_obs, node.visits, self.config.alpha_obs);
                let (child, fresh) = if open {
                    let existing = node
                        .children
                        .iter()
                        .find(|e| self.tree.obs(e.node).observation.as_ref() == Some(&step.observation))
                        .map(|e| e.node);
                    let (child, fresh) = match existing {
                        Some(c) => (c, false),
                        None => (self.tree.add_observation(ha, step.observation.clone(), None), true),
                    };
                    self.bump_edge(ha, child);
                    (child, fresh)
                } else {
                    (self.pick_by_count(ha), false)
                };
                let weight = {
                    let o = self.tree.obs(child).observation.as_ref().expect("non-root node");
                    self.model.obs_weight(&s, &action, &step.state, o)
                };
                if fresh {
                    self.tree.push_particle(child, Particle {
                        state: step.state.clone(),
                        reward: step.reward,
                        weight,
                    });
                    step.reward + gamma * self.rollout(step.state, depth + 1)
                } else {
                    self.tree.push_particle(child, Particle {
                        state: step.state,
                        reward: step.reward,
                        weight,
                    });
                    let p = self.tree.sample_particle(child, self.rng).expect("just pushed");
                    let (r, next) = (p.reward, p.state.clone());
                    r + gamma * self.simulate(child, next, depth + 1)?
                }
            }
        };
        self.tree.backup(ha, total);
        Ok(total)
    }

    fn choose_action(&mut self, h: ObsId, s: &M::State) -> Result<ActId> {
        match self.kind {
            PlannerKind::Pomcp => {
                if self.tree.obs(h).children.is_empty() {
                    self.tree.expand_all(h, self.model.actions(s));
                }
                self.tree.ucb_select(h, self.exploration)
            }
            PlannerKind::Pomcpow => {
                let model = self.model;
                self.tree
                    .widen_random(h, self.config.k_action, self.config.alpha_action, || model.actions(s), self.rng);
                self.tree.ucb_select(h, self.exploration)
            }
            PlannerKind::PaPomcpow => {
                if !self.tree.has_candidates(h) {
                    self.ensure_belief(h)?;
                    let score = self
                        .score
                        .ok_or_else(|| Error::Config("the prioritized planner needs an action score".into()))?;
                    let legal = self.model.actions(s);
                    let belief = self.tree.obs(h).belief.as_ref().expect("ensured above");
                    let cands = select_actions(belief, &legal, score, &self.config.score)?;
                    self.select_calls += 1;
                    self.tree.set_candidates(h, cands);
                }
                let exploration = self.exploration;
                super::action_prog_widen(&mut self.tree, h, self.config, exploration, |_| unreachable!())
            }
        }
    }

    /// Beliefs below the root are filled in on demand by chaining updates
    /// along the history.
    fn ensure_belief(&mut self, h: ObsId) -> Result<()> {
        if self.tree.obs(h).belief.is_some() {
            return Ok(());
        }
        let ha = self
            .tree
            .obs(h)
            .parent
            .ok_or_else(|| Error::Invariant("root node has no belief".into()))?;
        let parent = self.tree.act(ha).parent;
        self.ensure_belief(parent)?;
        let action = &self.tree.act(ha).action;
        let obs = self.tree.obs(h).observation.as_ref().expect("non-root node");
        let parent_belief = self.tree.obs(parent).belief.as_ref().expect("ensured above");
        let b = self.updater.update(self.model, parent_belief, action, obs, self.rng)?;
        self.tree.obs_mut(h).belief = Some(b);
        Ok(())
    }

    fn bump_edge(&mut self, ha: ActId, child: ObsId) {
        if let Some(e) = self.tree.act_mut(ha).children.iter_mut().find(|e| e.node == child) {
            e.count += 1;
        }
    }

    fn pick_by_count(&mut self, ha: ActId) -> ObsId {
        let edges = &self.tree.act(ha).children;
        let total: u64 = edges.iter().map(|e| e.count).sum();
        let mut u = self.rng.random_range(0..total.max(1));
        for e in edges {
            if u < e.count {
                return e.node;
            }
            u -= e.count;
        }
        edges.last().expect("closed gate implies children").node
    }

    fn rollout(&mut self, mut s: M::State, mut depth: usize) -> f64 {
        let gamma = self.config.discount;
        let mut total = 0.0;
        let mut weight = 1.0;
        while depth < self.config.max_depth && !self.model.is_terminal(&s) {
            let a = self.model.sample_action(&s, self.rng);
            let step = self.model.step(&s, &a, self.rng);
            total += weight * step.reward;
            weight *= gamma;
            s = step.state;
            depth += 1;
        }
        total
    }
}
