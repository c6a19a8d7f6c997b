//! Sequential sensor placement over a GP-distributed information field.
//!
//! The agent either places a sensor on a cell (reward: cell value minus one)
//! or observes a cell for free. Both reveal the cell's exact value. The episode
//! ends after a fixed number of placements.

use std::sync::{Arc, OnceLock};

use papomcpow::belief::{ExpKernel, FieldSampler, GpBelief, Point};
use papomcpow::score::{ActionScore, ScoreConfig, ScoreTerms};
use papomcpow::{BeliefUpdater, Decision, Error, Pomdp, Result, RngStream, Step};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Chebyshev,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let dx = a.0.abs_diff(b.0) as f64;
        let dy = a.1.abs_diff(b.1) as f64;
        match self {
            Metric::Chebyshev => dx.max(dy),
            Metric::Euclidean => (dx * dx + dy * dy).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorConfig {
    pub width: usize,
    pub height: usize,
    /// Exclusion radius around placed sensors, in cells.
    pub delta: usize,
    pub metric: Metric,
    /// Placements per episode.
    pub sensors_per_episode: usize,
    pub initial_sensors: usize,
    pub signal_variance: f64,
    pub length_scale: f64,
    /// GP observation noise (jitter).
    pub obs_noise: f64,
    pub discount: f64,
    pub horizon: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self::with_grid(20, 20)
    }
}

impl SensorConfig {
    /// Defaults for a `width × height` grid; the length scale is a tenth of
    /// the larger side.
    pub fn with_grid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            delta: 2,
            metric: Metric::Chebyshev,
            sensors_per_episode: 10,
            initial_sensors: 5,
            signal_variance: 1.0,
            length_scale: width.max(height) as f64 / 10.0,
            obs_noise: 1e-4,
            discount: 0.95,
            horizon: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("sensor grid must be non-empty".into()));
        }
        if self.sensors_per_episode == 0 {
            return Err(Error::Config("at least one sensor must be placed per episode".into()));
        }
        if !(self.obs_noise >= 0.0) {
            return Err(Error::Config(format!("observation noise must be >= 0, got {}", self.obs_noise)));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::Config(format!("discount must lie in [0, 1], got {}", self.discount)));
        }
        ExpKernel::new(self.signal_variance, self.length_scale)?;
        Ok(())
    }

    /// 21 weights from 0 to 2 in steps of 0.1, subset mode, normalized.
    pub fn default_score_config() -> ScoreConfig {
        ScoreConfig::subset(ScoreConfig::linspace(0.0, 2.0, 0.1)).expect("valid weights")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Place,
    Observe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SensorAction {
    pub kind: ActionKind,
    pub x: usize,
    pub y: usize,
}

impl SensorAction {
    pub fn place(x: usize, y: usize) -> Self {
        Self {
            kind: ActionKind::Place,
            x,
            y,
        }
    }

    pub fn observe(x: usize, y: usize) -> Self {
        Self {
            kind: ActionKind::Observe,
            x,
            y,
        }
    }

    pub fn cell(&self) -> (usize, usize) {
        (self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorState {
    /// Row-major field values, `y * width + x`.
    pub field: Arc<Vec<f64>>,
    pub sensors: Vec<(usize, usize)>,
    /// Placements made during this episode.
    pub placed: usize,
}

#[derive(Clone, Debug)]
pub struct SensorPlacement {
    cfg: SensorConfig,
    points: Vec<Point>,
    kernel: ExpKernel,
}

impl SensorPlacement {
    pub fn new(cfg: SensorConfig) -> Result<Self> {
        cfg.validate()?;
        let points = (0..cfg.height)
            .flat_map(|y| (0..cfg.width).map(move |x| [x as f64, y as f64]))
            .collect();
        let kernel = ExpKernel::new(cfg.signal_variance, cfg.length_scale)?;
        Ok(Self { cfg, points, kernel })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.cfg
    }

    pub fn cells(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.cfg.width + x
    }

    fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.cfg.width, i / self.cfg.width)
    }

    /// Whether a sensor may be placed at `cell` given those already placed.
    /// Cells closer than `δ` are excluded, and so is an occupied cell.
    pub fn can_place(&self, sensors: &[(usize, usize)], cell: (usize, usize)) -> bool {
        if cell.0 >= self.cfg.width || cell.1 >= self.cfg.height {
            return false;
        }
        let delta = self.cfg.delta as f64;
        sensors.iter().all(|&s| {
            let d = self.cfg.metric.distance(s, cell);
            d > 0.0 && d >= delta
        })
    }

    /// Legal actions for a sensor layout: place actions first, then observe
    /// actions, each row-major.
    pub fn legal_actions(&self, sensors: &[(usize, usize)]) -> Vec<SensorAction> {
        let mut out = Vec::with_capacity(2 * self.cells());
        for i in 0..self.cells() {
            let (x, y) = self.coords(i);
            if self.can_place(sensors, (x, y)) {
                out.push(SensorAction::place(x, y));
            }
        }
        out.extend((0..self.cells()).map(|i| {
            let (x, y) = self.coords(i);
            SensorAction::observe(x, y)
        }));
        out
    }

    fn in_bounds(&self, a: &SensorAction) -> bool {
        a.x < self.cfg.width && a.y < self.cfg.height
    }

    fn legal_for(&self, sensors: &[(usize, usize)], a: &SensorAction) -> bool {
        match a.kind {
            ActionKind::Observe => self.in_bounds(a),
            ActionKind::Place => self.can_place(sensors, a.cell()),
        }
    }

    /// Step that rejects illegal actions.
    pub fn checked_step(&self, s: &SensorState, a: &SensorAction) -> Result<Step<SensorState, f64>> {
        if !self.legal_for(&s.sensors, a) {
            return Err(Error::InvalidAction {
                step: s.placed,
                detail: format!("{a:?} is not legal with sensors at {:?}", s.sensors),
            });
        }
        Ok(self.transition(s, a))
    }

    fn transition(&self, s: &SensorState, a: &SensorAction) -> Step<SensorState, f64> {
        let value = s.field[self.index(a.x, a.y)];
        match a.kind {
            ActionKind::Observe => Step {
                state: s.clone(),
                observation: value,
                reward: 0.0,
            },
            ActionKind::Place => {
                let mut next = s.clone();
                next.sensors.push(a.cell());
                next.placed += 1;
                Step {
                    state: next,
                    observation: value,
                    reward: value - 1.0,
                }
            }
        }
    }

    /// Draws the field from the GP prior, places the initial sensors and
    /// returns the belief conditioned on their readings.
    pub fn sample_initial_state(&self, rng: &mut RngStream) -> Result<(SensorState, SensorBelief)> {
        let prior = GpBelief::prior(self.kernel, self.cfg.obs_noise)?;
        let field = prior.joint_sampler(&self.points)?.sample(rng);
        let mut sensors = Vec::with_capacity(self.cfg.initial_sensors);
        let mut gp = prior;
        for k in 0..self.cfg.initial_sensors {
            let open: Vec<usize> = (0..self.cells())
                .filter(|&i| self.can_place(&sensors, self.coords(i)))
                .collect();
            if open.is_empty() {
                return Err(Error::Config(format!(
                    "{}x{} grid cannot host {} initial sensors {} cells apart (stuck after {k})",
                    self.cfg.width, self.cfg.height, self.cfg.initial_sensors, self.cfg.delta
                )));
            }
            let i = open[rng.random_range(0..open.len())];
            sensors.push(self.coords(i));
            gp = gp.condition(self.points[i], field[i])?;
        }
        let state = SensorState {
            field: Arc::new(field),
            sensors: sensors.clone(),
            placed: 0,
        };
        Ok((state, SensorBelief::new(gp, sensors, 0)))
    }

    /// Place action with the highest posterior mean, earliest on ties. When
    /// the grid is too crowded to place anything, observes the most uncertain
    /// cell instead.
    pub fn greedy_action(&self, belief: &SensorBelief) -> Result<SensorAction> {
        let (mean, var) = belief.gp.marginals(&self.points);
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in mean.iter().enumerate() {
            if self.can_place(&belief.sensors, self.coords(i)) && best.is_none_or(|(_, bm)| *m > bm) {
                best = Some((i, *m));
            }
        }
        if let Some((i, _)) = best {
            let (x, y) = self.coords(i);
            return Ok(SensorAction::place(x, y));
        }
        let i = (0..var.len())
            .reduce(|a, b| if var[b] > var[a] { b } else { a })
            .ok_or_else(|| Error::Domain("empty grid".into()))?;
        let (x, y) = self.coords(i);
        Ok(SensorAction::observe(x, y))
    }
}

/// Greedy baseline as a policy closure.
pub fn greedy_policy(model: &SensorPlacement, belief: &SensorBelief, _: &mut RngStream) -> Result<Decision<SensorAction>> {
    model.greedy_action(belief).map(Decision::new)
}

impl Pomdp for SensorPlacement {
    type State = SensorState;
    type Action = SensorAction;
    type Obs = f64;

    fn discount(&self) -> f64 {
        self.cfg.discount
    }

    fn actions(&self, s: &SensorState) -> Vec<SensorAction> {
        self.legal_actions(&s.sensors)
    }

    fn is_legal(&self, s: &SensorState, a: &SensorAction) -> bool {
        self.legal_for(&s.sensors, a)
    }

    fn sample_action(&self, s: &SensorState, rng: &mut RngStream) -> SensorAction {
        // rejection sampling is uniform over the legal set; observe actions
        // are always legal so this terminates quickly
        let n = self.cells();
        loop {
            let i = rng.random_range(0..2 * n);
            let (x, y) = self.coords(i % n);
            if i >= n {
                return SensorAction::observe(x, y);
            }
            if self.can_place(&s.sensors, (x, y)) {
                return SensorAction::place(x, y);
            }
        }
    }

    fn step(&self, s: &SensorState, a: &SensorAction, _: &mut RngStream) -> Step<SensorState, f64> {
        self.transition(s, a)
    }

    fn is_terminal(&self, s: &SensorState) -> bool {
        s.placed >= self.cfg.sensors_per_episode
    }

    fn obs_weight(&self, _: &SensorState, a: &SensorAction, next: &SensorState, obs: &f64) -> f64 {
        if next.field[self.index(a.x, a.y)] == *obs {
            1.0
        } else {
            0.0
        }
    }

    fn obs_key(&self, obs: &f64, bins: usize) -> Vec<i64> {
        let r = 3.0 * self.cfg.signal_variance.sqrt();
        let t = ((obs + r) / (2.0 * r)).clamp(0.0, 1.0 - 1e-12);
        vec![(t * bins as f64).floor() as i64]
    }

    fn reward_scale(&self) -> f64 {
        self.cfg.signal_variance.sqrt()
    }
}

/// GP belief plus the (fully observed) sensor layout.
#[derive(Clone, Debug)]
pub struct SensorBelief {
    pub gp: GpBelief,
    pub sensors: Vec<(usize, usize)>,
    pub placed: usize,
    sampler: Arc<OnceLock<FieldSampler>>,
}

impl SensorBelief {
    pub fn new(gp: GpBelief, sensors: Vec<(usize, usize)>, placed: usize) -> Self {
        Self {
            gp,
            sensors,
            placed,
            sampler: Arc::new(OnceLock::new()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SensorUpdater;

impl BeliefUpdater<SensorPlacement> for SensorUpdater {
    type Belief = SensorBelief;

    fn update(
        &self,
        model: &SensorPlacement,
        b: &SensorBelief,
        a: &SensorAction,
        o: &f64,
        _: &mut RngStream,
    ) -> Result<SensorBelief> {
        let gp = b.gp.condition(model.points[model.index(a.x, a.y)], *o)?;
        let mut sensors = b.sensors.clone();
        let mut placed = b.placed;
        if a.kind == ActionKind::Place {
            sensors.push(a.cell());
            placed += 1;
        }
        Ok(SensorBelief::new(gp, sensors, placed))
    }

    fn sample_state(&self, model: &SensorPlacement, b: &SensorBelief, rng: &mut RngStream) -> Result<SensorState> {
        let sampler = match b.sampler.get() {
            Some(s) => s,
            None => {
                let s = b.gp.joint_sampler(&model.points)?;
                b.sampler.get_or_init(|| s)
            }
        };
        Ok(SensorState {
            field: Arc::new(sampler.sample(rng)),
            sensors: b.sensors.clone(),
            placed: b.placed,
        })
    }
}

/// Placement reward `μ(x) − 1` (0 for observing) and the GP information term
/// `max(σ²(x) − σ_o, 0)`, for every candidate at once.
#[derive(Clone, Debug)]
pub struct SensorScore {
    points: Vec<Point>,
    width: usize,
}

impl SensorScore {
    pub fn new(model: &SensorPlacement) -> Self {
        Self {
            points: model.points.clone(),
            width: model.cfg.width,
        }
    }
}

impl ActionScore<SensorBelief, SensorAction> for SensorScore {
    fn score_terms(&self, b: &SensorBelief, actions: &[SensorAction]) -> Result<Vec<ScoreTerms>> {
        let (mean, var) = b.gp.marginals(&self.points);
        let noise = b.gp.noise();
        Ok(actions
            .iter()
            .map(|a| {
                let i = a.y * self.width + a.x;
                let info = (var[i] - noise).max(0.0);
                match a.kind {
                    ActionKind::Place => ScoreTerms::new(mean[i] - 1.0, info),
                    ActionKind::Observe => ScoreTerms::new(0.0, info),
                }
            })
            .collect())
    }
}
