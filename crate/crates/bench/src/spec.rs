//! Declarative run specs, loaded from TOML and overridable from the CLI.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use envs::sensor::SensorConfig;
use envs::wildfire::WildfireConfig;
use papomcpow::planner::{PlannerConfig, PlannerKind};
use papomcpow::score::ScoreConfig;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvId {
    Sensor,
    Wildfire,
    SenseAndBet,
}

impl EnvId {
    pub fn name(self) -> &'static str {
        match self {
            EnvId::Sensor => "sensor",
            EnvId::Wildfire => "wildfire",
            EnvId::SenseAndBet => "sense-and-bet",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensor" => Ok(EnvId::Sensor),
            "wildfire" => Ok(EnvId::Wildfire),
            "sense-and-bet" => Ok(EnvId::SenseAndBet),
            other => Err(BenchError::Config(format!("unknown environment '{other}'"))),
        }
    }
}

/// A tree-search planner or one of the environment-specific baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlannerId {
    Search(PlannerKind),
    Greedy,
    Expert,
}

impl PlannerId {
    pub fn name(self) -> &'static str {
        match self {
            PlannerId::Search(k) => k.name(),
            PlannerId::Greedy => "greedy",
            PlannerId::Expert => "expert",
        }
    }

    pub fn is_search(self) -> bool {
        matches!(self, PlannerId::Search(_))
    }
}

impl fmt::Display for PlannerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(PlannerId::Greedy),
            "expert" => Ok(PlannerId::Expert),
            other => other
                .parse()
                .map(PlannerId::Search)
                .map_err(|_| BenchError::Config(format!("unknown planner '{other}'"))),
        }
    }
}

impl TryFrom<String> for PlannerId {
    type Error = BenchError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlannerId> for String {
    fn from(p: PlannerId) -> String {
        p.name().to_string()
    }
}

/// Tree-search hyperparameters shared by every planner in a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub max_depth: usize,
    pub exploration: f64,
    pub k_action: f64,
    pub alpha_action: f64,
    pub k_obs: f64,
    pub alpha_obs: f64,
    pub obs_bins: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        let d = PlannerConfig::default();
        Self {
            max_depth: d.max_depth,
            exploration: d.exploration,
            k_action: d.k_action,
            alpha_action: d.alpha_action,
            k_obs: d.k_obs,
            alpha_obs: d.alpha_obs,
            obs_bins: d.obs_bins,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub env: EnvId,
    pub width: usize,
    pub height: usize,
    /// Wildfire only; defaults to the comparison scenario's three points.
    pub ignition_points: Option<usize>,
    pub planners: Vec<PlannerId>,
    pub budgets: Vec<usize>,
    pub episodes: usize,
    /// Episode `i` uses seed `seed + i`.
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Wall-clock timing; off gives byte-identical reruns.
    pub timing: bool,
    pub search: SearchSettings,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            env: EnvId::Sensor,
            width: 20,
            height: 20,
            ignition_points: None,
            planners: PlannerKind::ALL.iter().map(|k| PlannerId::Search(*k)).collect(),
            budgets: vec![500],
            episodes: 10,
            seed: 0,
            out: None,
            timing: true,
            search: SearchSettings::default(),
        }
    }
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return bad("budgets must be a non-empty list of positive integers".into());
        }
        if self.planners.is_empty() {
            return bad("no planners given".into());
        }
        for p in &self.planners {
            match (p, self.env) {
                (PlannerId::Greedy, EnvId::Sensor) | (PlannerId::Expert, EnvId::Wildfire) | (PlannerId::Search(_), _) => {}
                _ => return bad(format!("baseline '{p}' is not defined for env '{}'", self.env)),
            }
        }
        match self.env {
            EnvId::Sensor => self.sensor_config().validate()?,
            EnvId::Wildfire => self.wildfire_config().validate()?,
            EnvId::SenseAndBet => {}
        }
        for &b in &self.budgets {
            self.planner_config(b).validate()?;
        }
        Ok(())
    }

    pub fn sensor_config(&self) -> SensorConfig {
        SensorConfig::with_grid(self.width, self.height)
    }

    pub fn wildfire_config(&self) -> WildfireConfig {
        let mut cfg = WildfireConfig::benchmark(self.width, self.height);
        if let Some(n) = self.ignition_points {
            cfg.ignition_seeds = n;
        }
        cfg
    }

    pub fn planner_config(&self, budget: usize) -> PlannerConfig {
        let (score, discount) = match self.env {
            EnvId::Sensor => (SensorConfig::default_score_config(), self.sensor_config().discount),
            EnvId::Wildfire => (WildfireConfig::default_score_config(), self.wildfire_config().discount),
            EnvId::SenseAndBet => (
                ScoreConfig::subset(vec![0.0, 1.0]).expect("valid weights"),
                envs::toy::SenseAndBet::default().discount,
            ),
        };
        let s = &self.search;
        PlannerConfig {
            budget,
            max_depth: s.max_depth,
            exploration: s.exploration,
            k_action: s.k_action,
            alpha_action: s.alpha_action,
            k_obs: s.k_obs,
            alpha_obs: s.alpha_obs,
            discount,
            obs_bins: s.obs_bins,
            score,
        }
    }
}
