//! Seeded sweeps and the root-tree depth study.

use std::fs::File;
use std::io::BufWriter;

use envs::sensor::{greedy_policy, SensorPlacement, SensorScore, SensorUpdater};
use envs::toy::{BetScore, BetUpdater, SenseAndBet};
use envs::wildfire::{expert_policy, Wildfire, WildfireScore, WildfireUpdater};
use papomcpow::planner::{plan, PlannerConfig, PlannerKind};
use papomcpow::score::ActionScore;
use papomcpow::{simulate_episode, BeliefUpdater, Decision, EpisodeOptions, Pomdp, RngStream};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::results::{mean_se, sort_rows, write_csv, ResultRow};
use crate::spec::{EnvId, PlannerId, RunSpec};

/// Worker count override; defaults to the available parallelism.
pub const WORKERS_VAR: &str = "PAPOMCPOW_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub planner: PlannerId,
    pub budget: usize,
    pub seed: u64,
}

/// Every (planner, budget, seed) episode of a spec. Baselines do not depend
/// on the budget and run once per seed with budget 0.
pub fn jobs(spec: &RunSpec) -> Vec<Job> {
    let mut planners: Vec<PlannerId> = Vec::new();
    for p in &spec.planners {
        if !planners.contains(p) {
            planners.push(*p);
        }
    }
    let mut budgets = spec.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let mut out = Vec::new();
    for planner in planners {
        let list = if planner.is_search() { budgets.clone() } else { vec![0] };
        for budget in list {
            for i in 0..spec.episodes as u64 {
                out.push(Job {
                    planner,
                    budget,
                    seed: spec.seed.wrapping_add(i),
                });
            }
        }
    }
    out
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs the given jobs and returns their rows sorted by
/// (env, planner, budget, seed), independent of completion order.
pub fn run_jobs(spec: &RunSpec, jobs: &[Job]) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = pool()?.install(|| jobs.par_iter().map(|j| run_job(spec, j)).collect::<Result<Vec<_>>>())?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// Runs every episode of the spec and writes the CSV to `spec.out` if set.
pub fn run_benchmark(spec: &RunSpec) -> Result<Vec<ResultRow>> {
    let rows = run_jobs(spec, &jobs(spec))?;
    if let Some(path) = &spec.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        write_csv(&rows, BufWriter::new(File::create(path)?))?;
    }
    Ok(rows)
}

struct Outcome {
    total_return: f64,
    steps: usize,
    ms_per_step: f64,
    max_depth: usize,
}

type Baseline<M, B> = fn(&M, &B, &mut RngStream) -> papomcpow::Result<Decision<<M as Pomdp>::Action>>;

#[allow(clippy::too_many_arguments)]
fn episode<M, U>(
    model: &M,
    updater: &U,
    score: &dyn ActionScore<U::Belief, M::Action>,
    baseline: Option<Baseline<M, U::Belief>>,
    planner: PlannerId,
    cfg: &PlannerConfig,
    start: (M::State, U::Belief),
    options: EpisodeOptions,
    rng: &RngStream,
) -> Result<Outcome>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    let mut policy = |m: &M, b: &U::Belief, rng: &mut RngStream| match planner {
        PlannerId::Search(kind) => {
            let r = plan(kind, m, updater, Some(score), b, cfg, rng)?;
            Ok(Decision {
                action: r.action,
                tree_depth: Some(r.stats.max_depth),
            })
        }
        _ => match baseline {
            Some(f) => f(m, b, rng),
            None => Err(papomcpow::Error::Config(format!("no baseline '{planner}' for this environment"))),
        },
    };
    let res = simulate_episode(model, &mut policy, updater, start.0, start.1, options, rng)?;
    Ok(Outcome {
        total_return: res.undiscounted_return,
        steps: res.steps.len(),
        ms_per_step: res.mean_planner_ms(),
        max_depth: res.max_tree_depth().unwrap_or(0),
    })
}

fn options(spec: &RunSpec, horizon: usize) -> EpisodeOptions {
    if spec.timing {
        EpisodeOptions::new(horizon)
    } else {
        EpisodeOptions::untimed(horizon)
    }
}

/// One episode. The initial state depends only on the seed, so every
/// planner faces the same realizations.
pub fn run_job(spec: &RunSpec, job: &Job) -> Result<ResultRow> {
    let cfg = spec.planner_config(job.budget.max(1));
    let root = RngStream::new(job.seed);
    let mut init = root.split(0);
    let run = root.split(1);
    let out = match spec.env {
        EnvId::Sensor => {
            let m = SensorPlacement::new(spec.sensor_config())?;
            let start = m.sample_initial_state(&mut init)?;
            let score = SensorScore::new(&m);
            let baseline: Option<Baseline<_, _>> = (job.planner == PlannerId::Greedy).then_some(greedy_policy);
            let horizon = m.config().horizon;
            episode(&m, &SensorUpdater, &score, baseline, job.planner, &cfg, start, options(spec, horizon), &run)?
        }
        EnvId::Wildfire => {
            let m = Wildfire::new(spec.wildfire_config())?;
            let start = m.sample_initial_state(&mut init)?;
            let score = WildfireScore::new(&m);
            let baseline: Option<Baseline<_, _>> = (job.planner == PlannerId::Expert).then_some(expert_policy);
            let horizon = m.config().horizon();
            episode(&m, &WildfireUpdater, &score, baseline, job.planner, &cfg, start, options(spec, horizon), &run)?
        }
        EnvId::SenseAndBet => {
            let m = SenseAndBet::default();
            let b0 = m.initial_belief()?;
            let s0 = BetUpdater.sample_state(&m, &b0, &mut init)?;
            let score = BetScore::new(&m);
            let horizon = m.steps as usize;
            episode(&m, &BetUpdater, &score, None, job.planner, &cfg, (s0, b0), options(spec, horizon), &run)?
        }
    };
    let ms_per_call = if job.planner.is_search() {
        out.ms_per_step / job.budget as f64
    } else {
        out.ms_per_step
    };
    Ok(ResultRow {
        env: spec.env.name().to_string(),
        planner: job.planner.name().to_string(),
        budget: job.budget,
        seed: job.seed,
        total_return: out.total_return,
        steps: out.steps,
        ms_per_call,
        max_depth: out.max_depth,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthRow {
    pub planner: String,
    pub budget: usize,
    pub seed: u64,
    pub max_depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthSummary {
    pub planner: String,
    pub budget: usize,
    pub n: usize,
    pub mean_depth: f64,
    pub se_depth: f64,
}

fn root_depth<M, U>(
    model: &M,
    updater: &U,
    score: &dyn ActionScore<U::Belief, M::Action>,
    kind: PlannerKind,
    cfg: &PlannerConfig,
    belief: &U::Belief,
    mut rng: RngStream,
) -> Result<usize>
where
    M: Pomdp,
    U: BeliefUpdater<M>,
{
    Ok(plan(kind, model, updater, Some(score), belief, cfg, &mut rng)?.stats.max_depth)
}

/// Depth of a single root search tree for one realization.
pub fn depth_job(spec: &RunSpec, kind: PlannerKind, budget: usize, seed: u64) -> Result<usize> {
    let cfg = spec.planner_config(budget);
    let root = RngStream::new(seed);
    let mut init = root.split(0);
    let rng = root.split(2);
    match spec.env {
        EnvId::Sensor => {
            let m = SensorPlacement::new(spec.sensor_config())?;
            let (_, b0) = m.sample_initial_state(&mut init)?;
            root_depth(&m, &SensorUpdater, &SensorScore::new(&m), kind, &cfg, &b0, rng)
        }
        EnvId::Wildfire => {
            let m = Wildfire::new(spec.wildfire_config())?;
            let (_, b0) = m.sample_initial_state(&mut init)?;
            root_depth(&m, &WildfireUpdater, &WildfireScore::new(&m), kind, &cfg, &b0, rng)
        }
        EnvId::SenseAndBet => {
            let m = SenseAndBet::default();
            let b0 = m.initial_belief()?;
            root_depth(&m, &BetUpdater, &BetScore::new(&m), kind, &cfg, &b0, rng)
        }
    }
}

/// Plans once from each of `spec.episodes` initial beliefs and records the
/// maximum depth of the root tree, per planner and budget. Baselines are
/// skipped.
pub fn depth_study(spec: &RunSpec) -> Result<(Vec<DepthRow>, Vec<DepthSummary>)> {
    spec.validate()?;
    let work: Vec<(PlannerKind, usize, u64)> = jobs(spec)
        .into_iter()
        .filter_map(|j| match j.planner {
            PlannerId::Search(k) => Some((k, j.budget, j.seed)),
            _ => None,
        })
        .collect();
    if work.is_empty() {
        return Err(BenchError::Config("the depth study needs at least one tree-search planner".into()));
    }
    let rows = pool()?.install(|| {
        work.par_iter()
            .map(|&(k, budget, seed)| {
                Ok(DepthRow {
                    planner: k.name().to_string(),
                    budget,
                    seed,
                    max_depth: depth_job(spec, k, budget, seed)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut summaries: Vec<DepthSummary> = Vec::new();
    for row in &rows {
        if summaries.iter().any(|s| s.planner == row.planner && s.budget == row.budget) {
            continue;
        }
        let depths: Vec<f64> = rows
            .iter()
            .filter(|r| r.planner == row.planner && r.budget == row.budget)
            .map(|r| r.max_depth as f64)
            .collect();
        let (mean, se) = match mean_se(&depths) {
            Some(v) => v,
            None => (depths[0], 0.0),
        };
        summaries.push(DepthSummary {
            planner: row.planner.clone(),
            budget: row.budget,
            n: depths.len(),
            mean_depth: mean,
            se_depth: se,
        });
    }
    Ok((rows, summaries))
}
