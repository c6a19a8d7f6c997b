//! Call-site instrumentation for score functions.

use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ActionScore, ScoreTerms};
use crate::Result;

thread_local! {
    static SELECTION_DEPTH: Cell<usize> = const { Cell::new(0) };
}

/// Marks the current thread as inside candidate selection for the guard's
/// lifetime.
pub struct SelectionScope {
    _private: (),
}

impl SelectionScope {
    pub fn enter() -> Self {
        SELECTION_DEPTH.with(|d| d.set(d.get() + 1));
        Self { _private: () }
    }
}

impl Drop for SelectionScope {
    fn drop(&mut self) {
        SELECTION_DEPTH.with(|d| d.set(d.get() - 1));
    }
}

pub fn in_selection_scope() -> bool {
    SELECTION_DEPTH.with(|d| d.get() > 0)
}

/// Wraps a score and counts its invocations, separately tallying any made
/// outside a [`SelectionScope`].
#[derive(Debug, Default)]
pub struct CountingScore<S> {
    inner: S,
    calls: AtomicUsize,
    actions_scored: AtomicUsize,
    outside: AtomicUsize,
}

impl<S> CountingScore<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            actions_scored: AtomicUsize::new(0),
            outside: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn actions_scored(&self) -> usize {
        self.actions_scored.load(Ordering::Relaxed)
    }

    pub fn calls_outside_selection(&self) -> usize {
        self.outside.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<B, A, S: ActionScore<B, A>> ActionScore<B, A> for CountingScore<S> {
    fn score_terms(&self, belief: &B, actions: &[A]) -> Result<Vec<ScoreTerms>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.actions_scored.fetch_add(actions.len(), Ordering::Relaxed);
        if !in_selection_scope() {
            self.outside.fetch_add(1, Ordering::Relaxed);
        }
        self.inner.score_terms(belief, actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat;
    impl ActionScore<(), u8> for Flat {
        fn score_terms(&self, _: &(), actions: &[u8]) -> Result<Vec<ScoreTerms>> {
            Ok(vec![ScoreTerms::default(); actions.len()])
        }
    }

    #[test]
    fn counts_inside_and_outside() {
        let s = CountingScore::new(Flat);
        s.score_terms(&(), &[1, 2]).unwrap();
        {
            let _g = SelectionScope::enter();
            assert!(in_selection_scope());
            s.score_terms(&(), &[1, 2, 3]).unwrap();
        }
        assert!(!in_selection_scope());
        assert_eq!(s.calls(), 2);
        assert_eq!(s.actions_scored(), 5);
        assert_eq!(s.calls_outside_selection(), 1);
    }
}
