//! The random environment: Poisson initial counts, doubly-infinite lazy
//! random-walk trajectories, the uniform decision field and exact occupancy
//! windows.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag, CounterRng};

/// Model parameters and master seed; the single source of truth for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub rho: f64,
    pub p_circ: f64,
    pub p_bullet: f64,
    pub q0: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(rho: f64, p_circ: f64, p_bullet: f64, q0: f64, seed: u64) -> Result<Self> {
        let params = Self {
            rho,
            p_circ,
            p_bullet,
            q0,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} = {p} is not in [0, 1]")))
            }
        };
        prob("p_circ", self.p_circ)?;
        prob("p_bullet", self.p_bullet)?;
        if !(0.0..1.0).contains(&self.q0) {
            return Err(Error::config(format!("q0 = {} is not in [0, 1)", self.q0)));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::config(format!(
                "rho = {} must be finite and >= 0",
                self.rho
            )));
        }
        Ok(())
    }

    /// Drift on empty sites.
    pub fn v_circ(&self) -> f64 {
        2.0 * self.p_circ - 1.0
    }

    /// Drift on occupied sites.
    pub fn v_bullet(&self) -> f64 {
        2.0 * self.p_bullet - 1.0
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: i64,
    pub t: i64,
}

impl SpaceTimePoint {
    pub const ORIGIN: Self = Self { x: 0, t: 0 };

    pub const fn new(x: i64, t: i64) -> Self {
        Self { x, t }
    }

    pub const fn shift(self, dx: i64, dt: i64) -> Self {
        Self {
            x: self.x + dx,
            t: self.t + dt,
        }
    }

    /// `self + (l, l)`.
    pub const fn diagonal(self, l: i64) -> Self {
        self.shift(l, l)
    }
}

/// Particle `i` (1-based) of those starting at site `z` at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleId {
    pub z: i64,
    pub i: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SiteCount {
    z: i64,
    count: u32,
}

/// A finite initial configuration η, given as site counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SiteCount>", into = "Vec<SiteCount>")]
pub struct InitialConfig {
    sites: BTreeMap<i64, u32>,
}

impl TryFrom<Vec<SiteCount>> for InitialConfig {
    type Error = Error;

    fn try_from(entries: Vec<SiteCount>) -> Result<Self> {
        InitialConfig::from_counts(entries.into_iter().map(|e| (e.z, e.count)))
    }
}

impl From<InitialConfig> for Vec<SiteCount> {
    fn from(cfg: InitialConfig) -> Self {
        cfg.sites
            .into_iter()
            .map(|(z, count)| SiteCount { z, count })
            .collect()
    }
}

impl InitialConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a configuration from `(site, count)` pairs. Repeated sites add up;
    /// a zero count is rejected.
    pub fn from_counts(entries: impl IntoIterator<Item = (i64, u32)>) -> Result<Self> {
        let mut sites = BTreeMap::new();
        for (z, count) in entries {
            if count == 0 {
                return Err(Error::config(format!("site {z}: count must be >= 1")));
            }
            *sites.entry(z).or_insert(0) += count;
        }
        Ok(Self { sites })
    }

    /// One particle on each listed site (repeats stack).
    pub fn from_sites(sites: impl IntoIterator<Item = i64>) -> Self {
        let mut map = BTreeMap::new();
        for z in sites {
            *map.entry(z).or_insert(0) += 1;
        }
        Self { sites: map }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("site counts always serialize")
    }

    pub fn count(&self, z: i64) -> u32 {
        self.sites.get(&z).copied().unwrap_or(0)
    }

    /// Total number of particles |η|.
    pub fn total(&self) -> u32 {
        self.sites.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.sites.iter().map(|(&z, &c)| (z, c))
    }

    /// Occupied sites with multiplicity, sorted.
    pub fn positions(&self) -> Vec<i64> {
        self.iter()
            .flat_map(|(z, c)| std::iter::repeat_n(z, c as usize))
            .collect()
    }

    pub fn span(&self) -> Option<(i64, i64)> {
        Some((*self.sites.keys().next()?, *self.sites.keys().next_back()?))
    }

    pub fn shifted(&self, dz: i64) -> Self {
        Self {
            sites: self.sites.iter().map(|(&z, &c)| (z + dz, c)).collect(),
        }
    }
}

/// The shared uniform field `U`, one value in `[0, 1)` per space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformField {
    pub seed: u64,
}

impl UniformField {
    #[inline]
    pub fn at(&self, x: i64, t: i64) -> f64 {
        rng::unit_f64(rng::keyed(self.seed, tag::UNIFORM, x, t, 0))
    }
}

/// The lazy step kernel shared by every particle: stay with probability
/// `q0`, otherwise move ±1 with equal probability. Comparisons are done on the
/// 53-bit integer mantissa so that `u < p` is evaluated exactly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepKernel {
    stay: u64,
    left: u64,
}

impl StepKernel {
    pub(crate) fn new(q0: f64) -> Self {
        let scale = (1u64 << 53) as f64;
        let threshold = |p: f64| (p * scale).ceil() as u64;
        Self {
            stay: threshold(q0),
            left: threshold(q0 + 0.5 * (1.0 - q0)),
        }
    }

    #[inline(always)]
    pub(crate) fn step(&self, bits: u64) -> i64 {
        let m = bits >> 11;
        if m < self.stay {
            0
        } else if m < self.left {
            -1
        } else {
            1
        }
    }
}

/// A space-time box `[x_lo, x_hi] × [t_lo, t_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    pub x_lo: i64,
    pub x_hi: i64,
    pub t_lo: i64,
    pub t_hi: i64,
}

impl SpaceTimeBox {
    pub fn new(x: RangeInclusive<i64>, t: RangeInclusive<i64>) -> Result<Self> {
        let b = Self {
            x_lo: *x.start(),
            x_hi: *x.end(),
            t_lo: *t.start(),
            t_hi: *t.end(),
        };
        if b.x_lo > b.x_hi || b.t_lo > b.t_hi {
            return Err(Error::config(format!(
                "empty box [{}, {}] x [{}, {}]",
                b.x_lo, b.x_hi, b.t_lo, b.t_hi
            )));
        }
        Ok(b)
    }

    pub fn width(&self) -> usize {
        (self.x_hi - self.x_lo + 1) as usize
    }

    pub fn duration(&self) -> usize {
        (self.t_hi - self.t_lo + 1) as usize
    }

    pub fn contains(&self, x: i64, t: i64) -> bool {
        (self.x_lo..=self.x_hi).contains(&x) && (self.t_lo..=self.t_hi).contains(&t)
    }

    /// Horizontal truncation radius that makes a window over this box exact:
    /// a trajectory moves at most one site per step, so only particles
    /// starting within this distance of the box can enter it.
    pub fn sufficiency_margin(&self) -> i64 {
        self.t_lo.abs().max(self.t_hi.abs())
    }
}

/// A finite trajectory segment `S_{t_lo}, ..., S_{t_hi}` of one particle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub id: ParticleId,
    pub t_lo: i64,
    pub positions: Vec<i64>,
}

impl Trajectory {
    pub fn t_hi(&self) -> i64 {
        self.t_lo + self.positions.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<i64> {
        let k = usize::try_from(t - self.t_lo).ok()?;
        self.positions.get(k).copied()
    }
}

/// Exact occupancy counts `N(x, t)` over a space-time box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvironmentWindow {
    pub bbox: SpaceTimeBox,
    pub sufficiency_margin: i64,
    counts: Vec<u32>,
}

impl EnvironmentWindow {
    pub fn count(&self, x: i64, t: i64) -> Option<u32> {
        if !self.bbox.contains(x, t) {
            return None;
        }
        Some(self.counts[self.index(x, t)])
    }

    fn index(&self, x: i64, t: i64) -> usize {
        (t - self.bbox.t_lo) as usize * self.bbox.width() + (x - self.bbox.x_lo) as usize
    }

    /// `Σ_x N(x, t)` over the box width.
    pub fn slice_total(&self, t: i64) -> u64 {
        (self.bbox.x_lo..=self.bbox.x_hi)
            .filter_map(|x| self.count(x, t))
            .map(u64::from)
            .sum()
    }
}

/// A realized environment: model parameters, the initial configuration law
/// (Poisson or injected), optional superposed particles and optional uniform
/// overrides.
#[derive(Debug, Clone)]
pub struct Environment {
    params: ModelParams,
    base: Option<Arc<InitialConfig>>,
    extra: Arc<InitialConfig>,
    uniform_overrides: Arc<BTreeMap<(i64, i64), f64>>,
    poisson: Option<Poisson<f64>>,
    kernel: StepKernel,
    field: UniformField,
}

impl Environment {
    /// Poisson(ρ) initial counts drawn from the seed.
    pub fn poisson(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let poisson = if params.rho > 0.0 {
            Some(
                Poisson::new(params.rho)
                    .map_err(|e| Error::config(format!("rho = {}: {e}", params.rho)))?,
            )
        } else {
            None
        };
        Ok(Self {
            params,
            base: None,
            extra: Arc::new(InitialConfig::empty()),
            uniform_overrides: Arc::new(BTreeMap::new()),
            poisson,
            kernel: StepKernel::new(params.q0),
            field: UniformField { seed: params.seed },
        })
    }

    /// A fixed initial configuration η in place of the Poisson draw; `rho` is
    /// ignored.
    pub fn injected(params: ModelParams, config: InitialConfig) -> Result<Self> {
        let mut env = Self::poisson(params.with_rho(0.0))?;
        env.params.rho = params.rho;
        env.base = Some(Arc::new(config));
        Ok(env)
    }

    /// Either of the above, depending on whether a configuration is given.
    pub fn from_parts(params: ModelParams, config: Option<InitialConfig>) -> Result<Self> {
        match config {
            Some(cfg) => Self::injected(params, cfg),
            None => Self::poisson(params),
        }
    }

    /// Superposes extra particles on the same realization. They take indices
    /// after the existing particles at their site, so their trajectories come
    /// from streams the base configuration never uses.
    pub fn with_extra(mut self, extra: InitialConfig) -> Self {
        self.extra = Arc::new(extra);
        self
    }

    /// Pins `U` at one point, for hand-built scenarios.
    pub fn with_uniform(mut self, point: SpaceTimePoint, u: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::config(format!("uniform override {u} not in [0, 1)")));
        }
        Arc::make_mut(&mut self.uniform_overrides).insert((point.x, point.t), u);
        Ok(self)
    }

    /// Same environment law under another seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut env = self.clone();
        env.params.seed = seed;
        env.field = UniformField { seed };
        env
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn field(&self) -> UniformField {
        self.field
    }

    pub fn is_injected(&self) -> bool {
        self.base.is_some()
    }

    pub(crate) fn kernel(&self) -> StepKernel {
        self.kernel
    }

    #[inline]
    pub fn uniform(&self, x: i64, t: i64) -> f64 {
        if !self.uniform_overrides.is_empty() {
            if let Some(&u) = self.uniform_overrides.get(&(x, t)) {
                return u;
            }
        }
        self.field.at(x, t)
    }

    fn base_count(&self, z: i64) -> u32 {
        match (&self.base, &self.poisson) {
            (Some(cfg), _) => cfg.count(z),
            (None, Some(poisson)) => {
                let mut rng = CounterRng::new(rng::keyed(
                    self.params.seed,
                    tag::INITIAL_COUNT,
                    z,
                    0,
                    0,
                ));
                poisson.sample(&mut rng) as u32
            }
            (None, None) => 0,
        }
    }

    /// `N(z, 0)`, including superposed particles.
    pub fn initial_count(&self, z: i64) -> u32 {
        self.base_count(z) + self.extra.count(z)
    }

    pub fn particle_exists(&self, id: ParticleId) -> bool {
        id.i >= 1 && id.i <= self.initial_count(id.z)
    }

    /// All particles starting in `[lo, hi]`, ordered by site then index.
    pub fn particles_in(&self, lo: i64, hi: i64) -> Vec<ParticleId> {
        let mut out = Vec::new();
        if self.base.is_none() && self.poisson.is_none() && self.extra.is_empty() {
            return out;
        }
        for z in lo..=hi {
            for i in 1..=self.initial_count(z) {
                out.push(ParticleId { z, i });
            }
        }
        out
    }

    pub(crate) fn future_key(&self, id: ParticleId) -> u64 {
        rng::keyed(self.params.seed, tag::FUTURE_STEPS, id.z, id.i as i64, 0)
    }

    fn past_key(&self, id: ParticleId) -> u64 {
        rng::keyed(self.params.seed, tag::PAST_STEPS, id.z, id.i as i64, 0)
    }

    fn check(&self, id: ParticleId) -> Result<()> {
        if self.particle_exists(id) {
            Ok(())
        } else {
            Err(Error::NonexistentParticle { z: id.z, i: id.i })
        }
    }

    /// `S^{z,i}_t` for any signed `t`.
    pub fn position(&self, id: ParticleId, t: i64) -> Result<i64> {
        self.check(id)?;
        let (key, n) = if t >= 0 {
            (self.future_key(id), t)
        } else {
            (self.past_key(id), -t)
        };
        let mut x = id.z;
        for k in 0..n as u64 {
            x += self.kernel.step(rng::stream_word(key, k));
        }
        Ok(x)
    }

    /// The segment of `S^{z,i}` over `[t_lo, t_hi]`.
    pub fn trajectory(&self, id: ParticleId, t_lo: i64, t_hi: i64) -> Result<Trajectory> {
        self.check(id)?;
        if t_lo > t_hi {
            return Err(Error::config(format!("empty time range [{t_lo}, {t_hi}]")));
        }
        let mut positions = Vec::with_capacity((t_hi - t_lo + 1) as usize);
        self.fill_trajectory(id, t_lo, t_hi, &mut positions);
        Ok(Trajectory {
            id,
            t_lo,
            positions,
        })
    }

    /// Writes `S_{t_lo..=t_hi}` into `out` (cleared first). The particle must
    /// exist.
    pub(crate) fn fill_trajectory(&self, id: ParticleId, t_lo: i64, t_hi: i64, out: &mut Vec<i64>) {
        out.clear();
        let kernel = self.kernel;
        if t_lo < 0 {
            // walk backwards from 0 to t_lo, then reverse
            let key = self.past_key(id);
            let mut x = id.z;
            for k in 0..(-t_lo) as u64 {
                x += kernel.step(rng::stream_word(key, k));
                out.push(x);
            }
            out.reverse();
            out.truncate((t_hi.min(-1) - t_lo + 1) as usize);
        }
        if t_hi >= 0 {
            let key = self.future_key(id);
            let mut x = id.z;
            let start = t_lo.max(0);
            for k in 0..t_hi as u64 {
                if k as i64 >= start {
                    out.push(x);
                }
                x += kernel.step(rng::stream_word(key, k));
            }
            out.push(x);
        }
    }

    pub fn build_window(&self, bbox: SpaceTimeBox) -> EnvironmentWindow {
        self.build_window_with_margin(bbox, bbox.sufficiency_margin())
    }

    /// Window built from particles starting within `margin` of the box. Any
    /// margin at least the sufficiency margin gives identical counts.
    pub fn build_window_with_margin(&self, bbox: SpaceTimeBox, margin: i64) -> EnvironmentWindow {
        let mut counts = vec![0u32; bbox.width() * bbox.duration()];
        let mut buf = Vec::new();
        let mut window = EnvironmentWindow {
            bbox,
            sufficiency_margin: margin,
            counts: Vec::new(),
        };
        for id in self.particles_in(bbox.x_lo - margin, bbox.x_hi + margin) {
            self.fill_trajectory(id, bbox.t_lo, bbox.t_hi, &mut buf);
            for (k, &x) in buf.iter().enumerate() {
                let t = bbox.t_lo + k as i64;
                if bbox.contains(x, t) {
                    counts[window.index(x, t)] += 1;
                }
            }
        }
        window.counts = counts;
        window
    }
}

/// `N(z, 0)` for every `z` in `range`.
pub fn initial_counts(params: ModelParams, range: RangeInclusive<i64>) -> Result<BTreeMap<i64, u32>> {
    let env = Environment::poisson(params)?;
    Ok(range.map(|z| (z, env.initial_count(z))).collect())
}

/// `S^{z,i}_t` under the Poisson environment of `params`.
pub fn trajectory_position(params: ModelParams, particle: ParticleId, t: i64) -> Result<i64> {
    Environment::poisson(params)?.position(particle, t)
}

pub fn build_window(params: ModelParams, bbox: SpaceTimeBox) -> Result<EnvironmentWindow> {
    Ok(Environment::poisson(params)?.build_window(bbox))
}

pub fn uniform_at(params: ModelParams, point: SpaceTimePoint) -> f64 {
    UniformField { seed: params.seed }.at(point.x, point.t)
}
