use std::sync::Arc;

use envs::sensor::{ActionKind, SensorConfig, SensorPlacement, SensorUpdater};
use envs::toy::{BetUpdater, SenseAndBet, BET, OBS_NONE, OBS_ONE, OBS_ZERO, SENSE};
use envs::wildfire::{Clear, Wildfire, WildfireConfig, WildfireScore, WildfireState, WildfireUpdater, World};
use papomcpow::planner::{pa_pomcpow_plan, PlannerConfig};
use papomcpow::score::CountingScore;
use papomcpow::{simulate_episode, BeliefUpdater, Decision, EpisodeOptions, Pomdp, RngStream};
use proptest::prelude::*;

fn small_sensor() -> SensorPlacement {
    let mut cfg = SensorConfig::with_grid(8, 8);
    cfg.initial_sensors = 2;
    cfg.sensors_per_episode = 4;
    cfg.horizon = 12;
    SensorPlacement::new(cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sensor_return_is_sum_of_placement_values(seed in any::<u64>()) {
        let m = small_sensor();
        let mut rng = RngStream::new(seed);
        let (s0, _) = m.sample_initial_state(&mut rng).unwrap();
        let mut s = s0.clone();
        let mut total = 0.0;
        let mut expected = 0.0;
        let mut trace = Vec::new();
        while !m.is_terminal(&s) && trace.len() < 12 {
            let a = m.sample_action(&s, &mut rng);
            let step = m.checked_step(&s, &a).unwrap();
            let truth = s.field[m.index(a.x, a.y)];
            prop_assert_eq!(step.observation, truth);
            if a.kind == ActionKind::Place {
                expected += truth - 1.0;
            } else {
                prop_assert_eq!(step.reward, 0.0);
            }
            total += step.reward;
            trace.push((a, step.observation));
            s = step.state;
        }
        prop_assert!((total - expected).abs() < 1e-12);

        // replaying the same actions reproduces the same observations
        let mut s = s0;
        for (a, o) in &trace {
            let step = m.checked_step(&s, a).unwrap();
            prop_assert_eq!(step.observation, *o);
            s = step.state;
        }
    }

    #[test]
    fn sensor_belief_tracks_observed_values(seed in any::<u64>()) {
        let m = small_sensor();
        let mut rng = RngStream::new(seed);
        let (mut s, mut b) = m.sample_initial_state(&mut rng).unwrap();
        for _ in 0..4 {
            if m.is_terminal(&s) {
                break;
            }
            let a = m.sample_action(&s, &mut rng);
            let step = m.checked_step(&s, &a).unwrap();
            b = SensorUpdater.update(&m, &b, &a, &step.observation, &mut rng).unwrap();
            let (mean, _) = b.gp.marginal(&m.points()[m.index(a.x, a.y)]);
            prop_assert!((mean - step.observation).abs() < 1e-3);
            s = step.state;
        }
    }
}

fn zone_reached(m: &Wildfire, w: &World, k: usize) -> bool {
    let z = m.config().zones[k];
    (z.y..z.y + z.height).any(|y| (z.x..z.x + z.width).any(|x| w.burning[m.index(x, y)]))
}

fn random_rollout(m: &Wildfire, seed: u64, steps: usize) -> Vec<(WildfireState, Clear, f64, WildfireState)> {
    let mut rng = RngStream::new(seed);
    let (mut s, _) = m.sample_initial_state(&mut rng).unwrap();
    let mut out = Vec::new();
    for _ in 0..steps {
        if m.is_terminal(&s) {
            break;
        }
        let a = m.sample_action(&s, &mut rng);
        let step = m.checked_step(&s, &a, &mut rng).unwrap();
        out.push((s, a, step.reward, step.state.clone()));
        s = step.state;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wildfire_fuel_and_counters_are_monotone(seed in any::<u64>()) {
        let m = Wildfire::new(WildfireConfig::benchmark(14, 14)).unwrap();
        let mult = m.config().penalty_multiplier;
        for (s, _, reward, next) in random_rollout(&m, seed, 40) {
            prop_assert!(s.world.fuel.iter().zip(&next.world.fuel).all(|(a, b)| b <= a));
            let mut penalty = 0.0;
            for k in 0..s.world.counters.len() {
                let (c0, c1) = (s.world.counters[k], next.world.counters[k]);
                prop_assert!(c1 <= c0);
                if c0 == 0 {
                    prop_assert_eq!(c1, 0);
                } else if zone_reached(&m, &next.world, k) {
                    penalty += mult * c0 as f64;
                    prop_assert_eq!(c1, 0);
                } else {
                    prop_assert_eq!(c1, c0 - 1);
                }
            }
            prop_assert_eq!(reward, -penalty);
        }
    }

    #[test]
    fn cleared_cells_never_ignite(seed in any::<u64>()) {
        let m = Wildfire::new(WildfireConfig::benchmark(14, 14)).unwrap();
        let mut dead = vec![false; 14 * 14];
        for (s, _, _, next) in random_rollout(&m, seed, 40) {
            for (i, f) in s.world.fuel.iter().enumerate() {
                if *f <= 0.0 && !s.world.burning[i] {
                    dead[i] = true;
                }
            }
            for (i, d) in dead.iter().enumerate() {
                if *d {
                    prop_assert!(!next.world.burning[i]);
                }
            }
        }
    }

    #[test]
    fn frozen_fire_never_grows(seed in any::<u64>()) {
        let mut cfg = WildfireConfig::benchmark(14, 14);
        cfg.ignition_rate = 0.0;
        let m = Wildfire::new(cfg).unwrap();
        for (s, _, _, next) in random_rollout(&m, seed, 30) {
            for i in 0..next.world.burning.len() {
                prop_assert!(!next.world.burning[i] || s.world.burning[i]);
            }
        }
    }
}

#[test]
fn shaped_reward_never_reaches_episode_returns() {
    let m = Wildfire::new(WildfireConfig::benchmark(12, 12)).unwrap();
    let score = CountingScore::new(WildfireScore::new(&m));
    let cfg = PlannerConfig::default()
        .with_budget(60)
        .with_score(WildfireConfig::default_score_config());
    let root = RngStream::new(5);
    let (s0, b0) = m.sample_initial_state(&mut root.split(0)).unwrap();
    let initial: Arc<World> = s0.world.clone();
    let mut policy = |model: &Wildfire, b: &_, rng: &mut RngStream| {
        let r = pa_pomcpow_plan(model, &WildfireUpdater, &score, b, &cfg, rng)?;
        Ok(Decision::new(r.action))
    };
    let res = simulate_episode(&m, &mut policy, &WildfireUpdater, s0, b0, EpisodeOptions::untimed(8), &root.split(1)).unwrap();
    assert!(score.calls() > 0);
    let mut prev = initial;
    for step in &res.steps {
        let next = &step.observation.world;
        let want: f64 = (0..prev.counters.len())
            .filter(|&k| prev.counters[k] > 0 && zone_reached(&m, next, k))
            .map(|k| -m.config().penalty_multiplier * prev.counters[k] as f64)
            .sum();
        assert_eq!(step.reward, want);
        prev = next.clone();
    }
}

/// Exhaustive expectimax over the two-step problem.
fn expectimax(m: &SenseAndBet, p_one: f64, steps_left: u8) -> (f64, usize) {
    if steps_left == 0 {
        return (0.0, SENSE);
    }
    let mut best = (f64::NEG_INFINITY, SENSE);
    for a in [SENSE, BET] {
        let mut v = (1.0 - p_one) * m.reward(false, a) + p_one * m.reward(true, a);
        for o in [OBS_NONE, OBS_ZERO, OBS_ONE] {
            let j0 = (1.0 - p_one) * m.obs_prob(false, a, o);
            let j1 = p_one * m.obs_prob(true, a, o);
            if j0 + j1 > 0.0 {
                v += m.discount * (j0 + j1) * expectimax(m, j1 / (j0 + j1), steps_left - 1).0;
            }
        }
        if v > best.0 {
            best = (v, a);
        }
    }
    best
}

#[test]
fn sense_and_bet_optimum_is_not_myopic() {
    let m = SenseAndBet::default();
    let (_, a) = expectimax(&m, m.prior_one, 2);
    assert_eq!(a, SENSE);
    let (_, myopic) = expectimax(&m, m.prior_one, 1);
    assert_eq!(myopic, BET);
}

#[test]
fn sense_and_bet_simulated_values_match_expectimax() {
    let m = SenseAndBet::default();
    let mut rng = RngStream::new(11);
    // sense first, then act on the posterior optimum
    let n = 200_000;
    let mut total = 0.0;
    for _ in 0..n {
        let b = m.initial_belief().unwrap();
        let s = BetUpdater.sample_state(&m, &b, &mut rng).unwrap();
        let step = m.step(&s, &SENSE, &mut rng);
        let b2 = BetUpdater.update(&m, &b, &SENSE, &step.observation, &mut rng).unwrap();
        let (_, a2) = expectimax(&m, b2.z.probs()[1], 1);
        total += step.reward + m.discount * m.step(&step.state, &a2, &mut rng).reward;
    }
    let mean = total / n as f64;
    let (v, _) = expectimax(&m, m.prior_one, 2);
    assert!((mean - v).abs() < 0.01, "{mean} vs {v}");
}
