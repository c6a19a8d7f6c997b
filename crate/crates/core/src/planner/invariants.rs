use super::tree::{widening_bound, SearchTree};
use super::{PlannerConfig, PlannerKind};
use std::sync::atomic::{AtomicUsize, Ordering};

static CHECKED: AtomicUsize = AtomicUsize::new(0);
static VIOLATING: AtomicUsize = AtomicUsize::new(0);

/// Trees checked after planning in this process, and how many of them failed.
/// Planning only checks its tree in builds with debug assertions.
pub fn widening_audit() -> (usize, usize) {
    (CHECKED.load(Ordering::Relaxed), VIOLATING.load(Ordering::Relaxed))
}

pub(crate) fn record_audit(violations: usize) {
    CHECKED.fetch_add(1, Ordering::Relaxed);
    if violations > 0 {
        VIOLATING.fetch_add(1, Ordering::Relaxed);
    }
}

/// Structural checks on a finished search tree. Returns one message per
/// violation; an empty list means the tree is consistent with the widening
/// rules of `kind`.
///
/// The action and observation caps allow one extra child because the test is
/// made before the insertion it admits.
pub fn check_widening<S, A: Clone + PartialEq, O, B>(
    tree: &SearchTree<S, A, O, B>,
    config: &PlannerConfig,
    kind: PlannerKind,
) -> Vec<String> {
    let mut out = Vec::new();

    for (h, node) in tree.obs_nodes() {
        let child_visits: u64 = node.children.iter().map(|&ha| tree.act(ha).visits).sum();
        if child_visits != node.visits {
            out.push(format!("node {h}: N(h) = {} but children sum to {child_visits}", node.visits));
        }
        if node.depth > config.max_depth {
            out.push(format!("node {h}: depth {} exceeds {}", node.depth, config.max_depth));
        }
        if kind.uses_action_widening() {
            let cap = widening_bound(config.k_action, node.visits, config.alpha_action) + 1.0;
            if node.children.len() as f64 > cap {
                out.push(format!("node {h}: {} actions exceeds cap {cap:.3}", node.children.len()));
            }
        }
        if kind == PlannerKind::PaPomcpow && !node.children.is_empty() {
            match node.candidate_order() {
                None => out.push(format!("node {h}: actions added without a candidate order")),
                Some(order) => {
                    let added: Vec<&A> = node.children.iter().map(|&ha| &tree.act(ha).action).collect();
                    let prefix_ok =
                        added.len() <= order.len() && added.iter().zip(order).all(|(a, c)| *a == c);
                    if !prefix_ok {
                        out.push(format!("node {h}: added actions are not a prefix of the candidate order"));
                    }
                    let remaining = node.remaining_candidates().unwrap_or(&[]);
                    if added.len() + remaining.len() != order.len() {
                        out.push(format!("node {h}: added and remaining candidates do not partition the order"));
                    }
                }
            }
        }
    }

    for (ha, node) in tree.action_nodes() {
        if node.visits > 0 {
            let mean = node.return_sum / node.visits as f64;
            if (node.q - mean).abs() > 1e-9 * mean.abs().max(1.0) {
                out.push(format!("action {ha}: Q = {} but mean return is {mean}", node.q));
            }
        }
        let generated: u64 = node.children.iter().map(|e| e.count).sum();
        if generated > node.visits {
            out.push(format!("action {ha}: {generated} observation draws from {} visits", node.visits));
        }
        if kind.uses_action_widening() {
            let cap = widening_bound(config.k_obs, node.visits, config.alpha_obs) + 1.0;
            if node.children.len() as f64 > cap {
                out.push(format!("action {ha}: {} observations exceeds cap {cap:.3}", node.children.len()));
            }
        }
    }
    out
}
