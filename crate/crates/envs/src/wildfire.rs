//! Wildfire containment on a grid.
//!
//! Fire spreads stochastically up to two cells per step, biased by a wind
//! vector that drifts randomly. Each step the agent clears the fuel in a 3×3
//! block. Keep-out zones count down; fire reaching a zone before its counter
//! runs out costs `multiplier · counter`. Burn map, fuel and counters are fully
//! observed; the wind is measured with noise that grows with the distance from
//! the cleared cell to the fire.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use papomcpow::belief::{kalman_update, posterior_covariance, GaussianBelief, LinearGaussianObsModel};
use papomcpow::score::{info_gain_gaussian, ActionScore, ScoreConfig, ScoreTerms};
use papomcpow::{BeliefUpdater, Decision, Error, Pomdp, Result, RngStream, Step};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

/// Axis-aligned keep-out rectangle with its countdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Zone {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub counter: u32,
}

impl Zone {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    /// Chebyshev distance from a cell to the nearest zone cell; 0 inside.
    pub fn distance(&self, x: usize, y: usize) -> usize {
        let gap = |v: usize, lo: usize, len: usize| {
            if v < lo {
                lo - v
            } else if v >= lo + len {
                v + 1 - (lo + len)
            } else {
                0
            }
        };
        gap(x, self.x, self.width).max(gap(y, self.y, self.height))
    }

    fn overlaps(&self, other: &Zone) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

/// Truncated Gaussian for initial fuel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuelParams {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WildfireConfig {
    pub width: usize,
    pub height: usize,
    pub zones: Vec<Zone>,
    pub fuel: FuelParams,
    pub ignition_rate: f64,
    pub wind_influence: f64,
    pub wind_noise: f64,
    /// Wind measurement std per cell of distance to the fire.
    pub measurement_scale: f64,
    /// Shaped-reward weight on distance to the fire.
    pub theta: f64,
    /// Shaped-reward weight on distance to the nearest active zone.
    pub beta: f64,
    pub penalty_multiplier: f64,
    pub ignition_seeds: usize,
    pub discount: f64,
}

impl Default for WildfireConfig {
    fn default() -> Self {
        Self::with_grid(20, 20)
    }
}

impl WildfireConfig {
    /// Four square zones near the corners, counters staggered so the
    /// episode lasts as long as the largest one.
    pub fn with_grid(width: usize, height: usize) -> Self {
        let side = (width.min(height) / 4).max(1);
        let margin = (width.min(height) / 20).max(1);
        let far_x = width.saturating_sub(margin + side);
        let far_y = height.saturating_sub(margin + side);
        let zone = |x, y, counter| Zone {
            x,
            y,
            width: side,
            height: side,
            counter,
        };
        Self {
            width,
            height,
            zones: vec![zone(margin, margin, 10), zone(far_x, margin, 14), zone(margin, far_y, 18), zone(far_x, far_y, 22)],
            fuel: FuelParams {
                mean: 6.0,
                std: 2.0,
                min: 2.0,
                max: 10.0,
            },
            ignition_rate: 0.12,
            wind_influence: 0.6,
            wind_noise: 0.1,
            measurement_scale: 0.1,
            theta: -1.0,
            beta: -0.5,
            penalty_multiplier: 10.0,
            ignition_seeds: 1,
            discount: 0.95,
        }
    }

    /// Comparison scenario: three ignition points instead of one, so a single
    /// clearing action cannot put the fire out.
    pub fn benchmark(width: usize, height: usize) -> Self {
        Self {
            ignition_seeds: 3,
            ..Self::with_grid(width, height)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.width < 3 || self.height < 3 {
            return bad("wildfire grid must be at least 3x3".into());
        }
        for (i, z) in self.zones.iter().enumerate() {
            if z.width == 0 || z.height == 0 || z.x + z.width > self.width || z.y + z.height > self.height {
                return bad(format!("zone {i} is empty or out of bounds"));
            }
            if self.zones[..i].iter().any(|o| o.overlaps(z)) {
                return bad(format!("zone {i} overlaps another zone"));
            }
        }
        let f = &self.fuel;
        if !(f.min >= 0.0) || !(f.max >= f.min) || !(f.std >= 0.0) {
            return bad(format!("invalid fuel parameters {f:?}"));
        }
        if !(self.ignition_rate >= 0.0) || !(self.wind_noise >= 0.0) || !(self.penalty_multiplier >= 0.0) {
            return bad("ignition rate, wind noise and penalty multiplier must be non-negative".into());
        }
        if !(self.measurement_scale > 0.0) {
            return bad("measurement scale must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount must lie in [0, 1], got {}", self.discount));
        }
        Ok(())
    }

    /// Steps until every counter has run out.
    pub fn horizon(&self) -> usize {
        self.zones.iter().map(|z| z.counter as usize).max().unwrap_or(0).max(1)
    }

    /// 11 weights from 0.5 to 1.5 in steps of 0.1, subset mode, normalized.
    pub fn default_score_config() -> ScoreConfig {
        ScoreConfig::subset(ScoreConfig::linspace(0.5, 1.5, 0.1)).expect("valid weights")
    }
}

/// The fully observed part of the state.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub burning: Vec<bool>,
    pub fuel: Vec<f64>,
    pub counters: Vec<u32>,
}

impl World {
    pub fn any_burning(&self) -> bool {
        self.burning.iter().any(|b| *b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WildfireState {
    pub world: Arc<World>,
    pub wind: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct WildfireObs {
    pub wind: [f64; 2],
    pub world: Arc<World>,
}

impl PartialEq for WildfireObs {
    fn eq(&self, other: &Self) -> bool {
        self.wind == other.wind && (Arc::ptr_eq(&self.world, &other.world) || self.world == other.world)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Clear {
    pub x: usize,
    pub y: usize,
}

#[derive(Clone, Debug)]
pub struct Wildfire {
    cfg: WildfireConfig,
}

const SPREAD_RADIUS: i64 = 2;

impl Wildfire {
    pub fn new(cfg: WildfireConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &WildfireConfig {
        &self.cfg
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.cfg.width + x
    }

    fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.cfg.width, i / self.cfg.width)
    }

    fn cells(&self) -> usize {
        self.cfg.width * self.cfg.height
    }

    /// Spread weight from a burning cell to a cell at `offset`: inverse
    /// Chebyshev distance times `1 + influence · cos(wind, offset)`, floored at 0.
    pub fn spread_weight(&self, offset: (i64, i64), wind: [f64; 2]) -> f64 {
        let r = offset.0.abs().max(offset.1.abs());
        if r == 0 || r > SPREAD_RADIUS {
            return 0.0;
        }
        let (ox, oy) = (offset.0 as f64, offset.1 as f64);
        let wn = wind[0].hypot(wind[1]);
        let cos = if wn > 0.0 {
            (wind[0] * ox + wind[1] * oy) / (wn * ox.hypot(oy))
        } else {
            0.0
        };
        ((1.0 + self.cfg.wind_influence * cos) / r as f64).max(0.0)
    }

    pub fn sample_initial_state(&self, rng: &mut RngStream) -> Result<(WildfireState, WildfireBelief)> {
        let f = self.cfg.fuel;
        let normal = Normal::new(f.mean, f.std.max(1e-12)).map_err(|e| Error::Config(e.to_string()))?;
        let mut fuel = Vec::with_capacity(self.cells());
        for _ in 0..self.cells() {
            let v = if f.std == 0.0 || f.min == f.max {
                f.mean.clamp(f.min, f.max)
            } else {
                let mut draws = 0;
                loop {
                    let v = normal.sample(rng);
                    draws += 1;
                    if (f.min..=f.max).contains(&v) {
                        break v;
                    }
                    if draws > 10_000 {
                        return Err(Error::Config(format!("fuel truncation window {f:?} has negligible mass")));
                    }
                }
            };
            fuel.push(v);
        }
        let mut burning = vec![false; self.cells()];
        let (w, h) = (self.cfg.width, self.cfg.height);
        let (x0, x1) = (w / 3, (2 * w).div_ceil(3));
        let (y0, y1) = (h / 3, (2 * h).div_ceil(3));
        for _ in 0..self.cfg.ignition_seeds {
            let x = rng.random_range(x0..x1.max(x0 + 1));
            let y = rng.random_range(y0..y1.max(y0 + 1));
            let i = self.index(x, y);
            burning[i] = fuel[i] > 0.0;
        }
        let wind = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let world = Arc::new(World {
            burning,
            fuel,
            counters: self.cfg.zones.iter().map(|z| z.counter).collect(),
        });
        let belief = WildfireBelief {
            wind: GaussianBelief::isotropic(DVector::zeros(2), 1.0 / 3.0)?,
            world: world.clone(),
        };
        Ok((WildfireState { world, wind }, belief))
    }

    /// One spread step. Ignition pressure comes from the cells burning at the
    /// start of the step; burning cells then consume one unit of fuel and go
    /// out at zero; finally candidates ignite in row-major order.
    pub fn fire_step(&self, world: &World, wind: [f64; 2], rng: &mut RngStream) -> (World, [f64; 2]) {
        let (w, h) = (self.cfg.width as i64, self.cfg.height as i64);
        let mut pressure = vec![0.0; self.cells()];
        for (i, _) in world.burning.iter().enumerate().filter(|(_, b)| **b) {
            let (bx, by) = self.coords(i);
            for dy in -SPREAD_RADIUS..=SPREAD_RADIUS {
                for dx in -SPREAD_RADIUS..=SPREAD_RADIUS {
                    let (x, y) = (bx as i64 + dx, by as i64 + dy);
                    if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= w || y >= h {
                        continue;
                    }
                    pressure[self.index(x as usize, y as usize)] += self.spread_weight((dx, dy), wind);
                }
            }
        }
        let mut next = world.clone();
        for i in 0..self.cells() {
            if next.burning[i] {
                next.fuel[i] = (next.fuel[i] - 1.0).max(0.0);
                if next.fuel[i] <= 0.0 {
                    next.burning[i] = false;
                }
            }
        }
        let mut ignition = RngStream::new(rng.next_u64());
        for i in 0..self.cells() {
            if pressure[i] > 0.0 && !world.burning[i] && next.fuel[i] > 0.0 {
                let p = (self.cfg.ignition_rate * pressure[i]).min(1.0);
                if ignition.random::<f64>() < p {
                    next.burning[i] = true;
                }
            }
        }
        let mut wind = wind;
        if self.cfg.wind_noise > 0.0 {
            let n = Normal::new(0.0, self.cfg.wind_noise).expect("validated");
            wind[0] += n.sample(rng);
            wind[1] += n.sample(rng);
        }
        (next, wind)
    }

    /// Chebyshev distance from a cell to the nearest burning cell.
    pub fn fire_distance(&self, world: &World, x: usize, y: usize) -> Option<usize> {
        world
            .burning
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| {
                let (bx, by) = self.coords(i);
                bx.abs_diff(x).max(by.abs_diff(y))
            })
            .min()
    }

    /// Chebyshev distance of every cell to the fire (multi-source BFS over the
    /// 8-neighbourhood). `None` when nothing burns.
    pub fn fire_distance_map(&self, world: &World) -> Option<Vec<usize>> {
        let mut dist = vec![usize::MAX; self.cells()];
        let mut queue = VecDeque::new();
        for (i, b) in world.burning.iter().enumerate() {
            if *b {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        if queue.is_empty() {
            return None;
        }
        let (w, h) = (self.cfg.width as i64, self.cfg.height as i64);
        while let Some(i) = queue.pop_front() {
            let (x, y) = self.coords(i);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = self.index(nx as usize, ny as usize);
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        Some(dist)
    }

    fn zone_distance(&self, world: &World, x: usize, y: usize) -> Option<usize> {
        self.cfg
            .zones
            .iter()
            .zip(&world.counters)
            .filter(|(_, c)| **c > 0)
            .map(|(z, _)| z.distance(x, y))
            .min()
    }

    /// Wind-measurement noise std after clearing at `a`. With no fire the
    /// distance is taken as the grid's larger side.
    pub fn measurement_std(&self, world: &World, a: &Clear) -> f64 {
        let d = self
            .fire_distance(world, a.x, a.y)
            .unwrap_or(self.cfg.width.max(self.cfg.height));
        self.cfg.measurement_scale * d.max(1) as f64
    }

    /// `θ·d_f + β·d_k`; 0 when nothing burns.
    pub fn shaped_reward(&self, world: &World, a: &Clear) -> f64 {
        match self.fire_distance(world, a.x, a.y) {
            None => 0.0,
            Some(df) => {
                let dk = self.zone_distance(world, a.x, a.y).unwrap_or(0);
                self.cfg.theta * df as f64 + self.cfg.beta * dk as f64
            }
        }
    }

    fn legal(&self, world: &World, a: &Clear) -> bool {
        a.x < self.cfg.width && a.y < self.cfg.height && !world.burning[self.index(a.x, a.y)]
    }

    /// Step that rejects out-of-bounds or burning targets.
    pub fn checked_step(&self, s: &WildfireState, a: &Clear, rng: &mut RngStream) -> Result<Step<WildfireState, WildfireObs>> {
        if !self.legal(&s.world, a) {
            return Err(Error::InvalidAction {
                step: 0,
                detail: format!("cannot clear {a:?}: out of bounds or burning"),
            });
        }
        Ok(self.transition(s, a, rng))
    }

    fn transition(&self, s: &WildfireState, a: &Clear, rng: &mut RngStream) -> Step<WildfireState, WildfireObs> {
        let noise_std = self.measurement_std(&s.world, a);
        let mut cleared = (*s.world).clone();
        for y in a.y.saturating_sub(1)..=(a.y + 1).min(self.cfg.height - 1) {
            for x in a.x.saturating_sub(1)..=(a.x + 1).min(self.cfg.width - 1) {
                cleared.fuel[y * self.cfg.width + x] = 0.0;
            }
        }
        let (mut next, wind) = self.fire_step(&cleared, s.wind, rng);

        let mut reward = 0.0;
        for (k, zone) in self.cfg.zones.iter().enumerate() {
            if next.counters[k] == 0 {
                continue;
            }
            let reached = (zone.y..zone.y + zone.height)
                .any(|y| (zone.x..zone.x + zone.width).any(|x| next.burning[self.index(x, y)]));
            if reached {
                reward -= self.cfg.penalty_multiplier * next.counters[k] as f64;
                next.counters[k] = 0;
            }
        }
        for c in next.counters.iter_mut() {
            *c = c.saturating_sub(1);
        }

        let n = Normal::new(0.0, noise_std).expect("positive std");
        let measured = [wind[0] + n.sample(rng), wind[1] + n.sample(rng)];
        let world = Arc::new(next);
        Step {
            state: WildfireState {
                world: world.clone(),
                wind,
            },
            observation: WildfireObs { wind: measured, world },
            reward,
        }
    }

    fn ring(&self, zone: &Zone) -> Vec<(usize, usize)> {
        let (x0, y0) = (zone.x as i64 - 1, zone.y as i64 - 1);
        let (x1, y1) = ((zone.x + zone.width) as i64, (zone.y + zone.height) as i64);
        let mut out = Vec::new();
        // clockwise with y growing downward: top, right, bottom, left
        for x in x0..x1 {
            out.push((x, y0));
        }
        for y in y0..y1 {
            out.push((x1, y));
        }
        for x in (x0 + 1..=x1).rev() {
            out.push((x, y1));
        }
        for y in (y0 + 1..=y1).rev() {
            out.push((x0, y));
        }
        let (w, h) = (self.cfg.width as i64, self.cfg.height as i64);
        out.into_iter()
            .filter(|&(x, y)| x >= 0 && y >= 0 && x < w && y < h)
            .map(|(x, y)| (x as usize, y as usize))
            .collect()
    }

    /// Perimeter ring one cell outside the zone, clipped to the grid, in
    /// clockwise order from the top-left corner.
    pub fn perimeter(&self, zone: usize) -> Vec<(usize, usize)> {
        self.ring(&self.cfg.zones[zone])
    }

    /// Expert baseline: clear the border ring of the active zone nearest the
    /// fire, clockwise from its corner nearest the fire, then move on to the
    /// next-nearest zone. Falls back to the legal fuelled cell nearest the
    /// fire once every active border is clear.
    pub fn expert_action(&self, world: &World) -> Result<Clear> {
        let dist = self.fire_distance_map(world);
        let fire_d = |x: usize, y: usize| dist.as_ref().map_or(0, |d| d[self.index(x, y)]);
        let mut active: Vec<(usize, usize)> = Vec::new();
        for (k, zone) in self.cfg.zones.iter().enumerate() {
            if world.counters[k] == 0 {
                continue;
            }
            let d = (zone.y..zone.y + zone.height)
                .flat_map(|y| (zone.x..zone.x + zone.width).map(move |x| (x, y)))
                .map(|(x, y)| fire_d(x, y))
                .min()
                .unwrap_or(0);
            active.push((d, k));
        }
        active.sort();
        for &(_, k) in &active {
            let ring = self.perimeter(k);
            let start = (0..ring.len())
                .filter(|&i| self.is_corner(&self.cfg.zones[k], ring[i]))
                .min_by_key(|&i| (fire_d(ring[i].0, ring[i].1), i))
                .unwrap_or(0);
            for off in 0..ring.len() {
                let (x, y) = ring[(start + off) % ring.len()];
                let i = self.index(x, y);
                if world.fuel[i] > 0.0 && !world.burning[i] {
                    return Ok(Clear { x, y });
                }
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for i in 0..self.cells() {
            if world.burning[i] || world.fuel[i] <= 0.0 {
                continue;
            }
            let (x, y) = self.coords(i);
            let d = fire_d(x, y);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let i = match best {
            Some((_, i)) => i,
            None => (0..self.cells())
                .find(|&i| !world.burning[i])
                .ok_or_else(|| Error::Domain("every cell is burning".into()))?,
        };
        let (x, y) = self.coords(i);
        Ok(Clear { x, y })
    }

    fn is_corner(&self, zone: &Zone, (x, y): (usize, usize)) -> bool {
        let xs = [zone.x as i64 - 1, (zone.x + zone.width) as i64];
        let ys = [zone.y as i64 - 1, (zone.y + zone.height) as i64];
        xs.contains(&(x as i64)) && ys.contains(&(y as i64))
    }
}

/// Expert baseline as a policy closure.
pub fn expert_policy(model: &Wildfire, belief: &WildfireBelief, _: &mut RngStream) -> Result<Decision<Clear>> {
    model.expert_action(&belief.world).map(Decision::new)
}

impl Pomdp for Wildfire {
    type State = WildfireState;
    type Action = Clear;
    type Obs = WildfireObs;

    fn discount(&self) -> f64 {
        self.cfg.discount
    }

    fn actions(&self, s: &WildfireState) -> Vec<Clear> {
        (0..self.cells())
            .filter(|&i| !s.world.burning[i])
            .map(|i| {
                let (x, y) = self.coords(i);
                Clear { x, y }
            })
            .collect()
    }

    fn is_legal(&self, s: &WildfireState, a: &Clear) -> bool {
        self.legal(&s.world, a)
    }

    fn sample_action(&self, s: &WildfireState, rng: &mut RngStream) -> Clear {
        loop {
            let i = rng.random_range(0..self.cells());
            if !s.world.burning[i] {
                let (x, y) = self.coords(i);
                return Clear { x, y };
            }
        }
    }

    fn step(&self, s: &WildfireState, a: &Clear, rng: &mut RngStream) -> Step<WildfireState, WildfireObs> {
        self.transition(s, a, rng)
    }

    fn is_terminal(&self, s: &WildfireState) -> bool {
        s.world.counters.iter().all(|c| *c == 0)
    }

    fn obs_weight(&self, s: &WildfireState, a: &Clear, next: &WildfireState, o: &WildfireObs) -> f64 {
        if !(Arc::ptr_eq(&next.world, &o.world) || *next.world == *o.world) {
            return 0.0;
        }
        let std = self.measurement_std(&s.world, a);
        let dx = (o.wind[0] - next.wind[0]) / std;
        let dy = (o.wind[1] - next.wind[1]) / std;
        (-0.5 * (dx * dx + dy * dy)).exp()
    }

    fn obs_key(&self, o: &WildfireObs, bins: usize) -> Vec<i64> {
        let q = |v: f64| {
            let t = ((v + 2.0) / 4.0).clamp(0.0, 1.0 - 1e-12);
            (t * bins as f64).floor() as i64
        };
        let mut h = DefaultHasher::new();
        o.world.burning.hash(&mut h);
        o.world.counters.hash(&mut h);
        for f in &o.world.fuel {
            f.to_bits().hash(&mut h);
        }
        vec![q(o.wind[0]), q(o.wind[1]), h.finish() as i64]
    }

    fn reward_scale(&self) -> f64 {
        self.cfg.penalty_multiplier * self.cfg.zones.iter().map(|z| z.counter as f64).sum::<f64>() / self.cfg.zones.len().max(1) as f64
    }
}

/// Gaussian wind belief plus the observed world.
#[derive(Clone, Debug)]
pub struct WildfireBelief {
    pub wind: GaussianBelief,
    pub world: Arc<World>,
}

/// Kalman filter on the wind: random-walk prediction, then a direct
/// measurement whose noise depends on where the agent cleared.
#[derive(Clone, Copy, Debug, Default)]
pub struct WildfireUpdater;

impl WildfireUpdater {
    fn predicted(model: &Wildfire, b: &WildfireBelief) -> Result<GaussianBelief> {
        let q = model.cfg.wind_noise * model.cfg.wind_noise;
        b.wind.with_process_noise(&(DMatrix::identity(2, 2) * q))
    }

    fn obs_model(model: &Wildfire, world: &World, a: &Clear) -> Result<LinearGaussianObsModel> {
        let std = model.measurement_std(world, a);
        LinearGaussianObsModel::direct(2, std * std)
    }
}

impl BeliefUpdater<Wildfire> for WildfireUpdater {
    type Belief = WildfireBelief;

    fn update(&self, model: &Wildfire, b: &WildfireBelief, a: &Clear, o: &WildfireObs, _: &mut RngStream) -> Result<WildfireBelief> {
        let predicted = Self::predicted(model, b)?;
        let m = Self::obs_model(model, &b.world, a)?;
        let wind = kalman_update(&predicted, &m, &DVector::from_column_slice(&o.wind))?;
        Ok(WildfireBelief {
            wind,
            world: o.world.clone(),
        })
    }

    fn sample_state(&self, _: &Wildfire, b: &WildfireBelief, rng: &mut RngStream) -> Result<WildfireState> {
        let w = b.wind.sample(rng);
        Ok(WildfireState {
            world: b.world.clone(),
            wind: [w[0], w[1]],
        })
    }
}

/// Shaped reward for the reward term; wind information gain
/// `Tr log Σ⁻ − Tr log Σ⁺` for the information term.
#[derive(Clone, Debug)]
pub struct WildfireScore {
    model: Wildfire,
}

impl WildfireScore {
    pub fn new(model: &Wildfire) -> Self {
        Self { model: model.clone() }
    }
}

impl ActionScore<WildfireBelief, Clear> for WildfireScore {
    fn score_terms(&self, b: &WildfireBelief, actions: &[Clear]) -> Result<Vec<ScoreTerms>> {
        let m = &self.model;
        let predicted = WildfireUpdater::predicted(m, b)?;
        let Some(dist) = m.fire_distance_map(&b.world) else {
            return Ok(vec![ScoreTerms::default(); actions.len()]);
        };
        // information depends on the action only through its fire distance
        let mut info_cache: Vec<Option<f64>> = vec![None; m.cfg.width + m.cfg.height + 1];
        actions
            .iter()
            .map(|a| {
                let df = dist[m.index(a.x, a.y)];
                let dk = m.zone_distance(&b.world, a.x, a.y).unwrap_or(0);
                let reward = m.cfg.theta * df as f64 + m.cfg.beta * dk as f64;
                let slot = df.min(info_cache.len() - 1);
                let info = match info_cache[slot] {
                    Some(v) => v,
                    None => {
                        let obs = WildfireUpdater::obs_model(m, &b.world, a)?;
                        let v = info_gain_gaussian(predicted.cov(), &posterior_covariance(&predicted, &obs)?)?;
                        info_cache[slot] = Some(v);
                        v
                    }
                };
                Ok(ScoreTerms::new(reward, info))
            })
            .collect()
    }
}
