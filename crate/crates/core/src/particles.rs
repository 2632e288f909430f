//! Particle bookkeeping shared by the walker, infection and regeneration code.
//!
//! Two representations are used. [`ParticleStream`] advances the current
//! positions of a set of particles one time step at a time and is what the
//! walker reads its occupancy from. [`ParticleWindow`] stores whole trajectory
//! segments over a time window for the cone computations.

use crate::env::{Environment, ParticleId, StepKernel};
use crate::error::{Error, Result};
use crate::rng;

/// Something that answers "is there a particle at `(x, t)`?".
pub trait Occupancy {
    fn is_occupied(&mut self, x: i64, t: i64) -> bool;
}

/// No particles anywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vacant;

impl Occupancy for Vacant {
    fn is_occupied(&mut self, _x: i64, _t: i64) -> bool {
        false
    }
}

impl<O: Occupancy + ?Sized> Occupancy for &mut O {
    fn is_occupied(&mut self, x: i64, t: i64) -> bool {
        (**self).is_occupied(x, t)
    }
}

/// Current positions of a set of particles, advanced forward in time from 0.
#[derive(Debug, Clone)]
pub struct ParticleStream {
    kernel: StepKernel,
    ids: Vec<ParticleId>,
    keys: Vec<u64>,
    pos: Vec<i64>,
    time: i64,
}

impl ParticleStream {
    /// All particles of `env` starting in `[lo, hi]`, at time 0.
    pub fn new(env: &Environment, lo: i64, hi: i64) -> Self {
        Self::from_ids(env, env.particles_in(lo, hi))
    }

    pub fn from_ids(env: &Environment, ids: Vec<ParticleId>) -> Self {
        let keys = ids.iter().map(|&id| env.future_key(id)).collect();
        let pos = ids.iter().map(|id| id.z).collect();
        Self {
            kernel: env.kernel(),
            ids,
            keys,
            pos,
            time: 0,
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn positions(&self) -> &[i64] {
        &self.pos
    }

    pub fn ids(&self) -> &[ParticleId] {
        &self.ids
    }

    /// Moves every particle from `time` to `time + 1`.
    #[inline]
    pub fn advance(&mut self) {
        let k = self.time as u64;
        let kernel = self.kernel;
        for (p, &key) in self.pos.iter_mut().zip(&self.keys) {
            *p += kernel.step(rng::stream_word(key, k));
        }
        self.time += 1;
    }

    /// Drops every particle for which `keep(position)` is false. Order of the
    /// remaining particles is not preserved.
    pub fn retain(&mut self, mut keep: impl FnMut(i64) -> bool) {
        let mut j = 0;
        while j < self.pos.len() {
            if keep(self.pos[j]) {
                j += 1;
            } else {
                self.pos.swap_remove(j);
                self.keys.swap_remove(j);
                self.ids.swap_remove(j);
            }
        }
    }

    pub fn count_at(&self, x: i64) -> usize {
        self.pos.iter().filter(|&&p| p == x).count()
    }
}

/// Exact occupancy for a single walker run, computed on the fly.
///
/// Holds every particle that can reach the walker before the last query time
/// and discards a particle as soon as it is too far from the walker to meet
/// it again: the gap between two nearest-neighbour paths closes by at most two
/// per step.
#[derive(Debug, Clone)]
pub struct StreamingOccupancy {
    stream: ParticleStream,
    start_x: i64,
    start_t: i64,
    last_query: i64,
}

impl StreamingOccupancy {
    /// Occupancy source for a walker started at `(x, t)`, `t >= 0`, that will
    /// query times `t, ..., t + steps - 1`.
    pub fn for_walker(env: &Environment, x: i64, t: i64, steps: usize) -> Result<Self> {
        if t < 0 {
            return Err(Error::config(format!("walker start time {t} must be >= 0")));
        }
        let reach = if steps == 0 { -1 } else { t + 2 * (steps as i64 - 1) };
        let stream = if reach < 0 {
            ParticleStream::from_ids(env, Vec::new())
        } else {
            ParticleStream::new(env, x - reach, x + reach)
        };
        Ok(Self {
            stream,
            start_x: x,
            start_t: t,
            last_query: t + steps as i64 - 1,
        })
    }

    pub fn remaining_particles(&self) -> usize {
        self.stream.len()
    }
}

impl Occupancy for StreamingOccupancy {
    fn is_occupied(&mut self, x: i64, t: i64) -> bool {
        assert!(
            t >= self.stream.time() && t <= self.last_query,
            "streaming occupancy queried at t={t} outside [{}, {}]",
            self.stream.time(),
            self.last_query
        );
        while self.stream.time() < t {
            self.stream.advance();
            let s = self.stream.time();
            if s < self.start_t {
                let slack = (self.start_t - s) + 2 * (self.last_query - self.start_t);
                let x0 = self.start_x;
                self.stream.retain(|p| (p - x0).abs() <= slack);
            }
        }
        let slack = 2 * (self.last_query - t);
        let mut hit = false;
        self.stream.retain(|p| {
            let d = (p - x).abs();
            hit |= d == 0;
            d <= slack
        });
        hit
    }
}

/// A stored trajectory segment over `[t_lo, t_lo + positions.len() - 1]`.
/// `id` is `None` for hand-built paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowedTrajectory {
    pub id: Option<ParticleId>,
    pub t_lo: i64,
    pub positions: Vec<i64>,
}

impl WindowedTrajectory {
    /// A hand-built path; consecutive positions must differ by at most one.
    pub fn explicit(t_lo: i64, positions: Vec<i64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::config("explicit trajectory is empty"));
        }
        if positions.windows(2).any(|w| (w[1] - w[0]).abs() > 1) {
            return Err(Error::config("explicit trajectory jumps by more than one site"));
        }
        Ok(Self {
            id: None,
            t_lo,
            positions,
        })
    }

    pub fn t_hi(&self) -> i64 {
        self.t_lo + self.positions.len() as i64 - 1
    }

    pub fn at(&self, t: i64) -> Option<i64> {
        let k = usize::try_from(t - self.t_lo).ok()?;
        self.positions.get(k).copied()
    }
}

/// Every particle that can visit a site range during a time window, with its
/// trajectory over that window.
#[derive(Debug, Clone)]
pub struct ParticleWindow {
    pub t_lo: i64,
    pub t_hi: i64,
    pub trajectories: Vec<WindowedTrajectory>,
}

impl ParticleWindow {
    /// Trajectories over `[t_lo, t_hi]` of all particles that can be in
    /// `[x_lo, x_hi]` at some time of the window.
    pub fn build(env: &Environment, x_lo: i64, x_hi: i64, t_lo: i64, t_hi: i64) -> Result<Self> {
        if x_lo > x_hi || t_lo > t_hi {
            return Err(Error::config("empty particle window"));
        }
        let m = t_lo.abs().max(t_hi.abs());
        let trajectories = env
            .particles_in(x_lo - m, x_hi + m)
            .into_iter()
            .map(|id| {
                let mut positions = Vec::new();
                env.fill_trajectory(id, t_lo, t_hi, &mut positions);
                WindowedTrajectory {
                    id: Some(id),
                    t_lo,
                    positions,
                }
            })
            .collect();
        Ok(Self {
            t_lo,
            t_hi,
            trajectories,
        })
    }

    /// A window made of hand-built paths only.
    pub fn from_trajectories(t_lo: i64, t_hi: i64, trajectories: Vec<WindowedTrajectory>) -> Result<Self> {
        for tr in &trajectories {
            if tr.t_lo != t_lo || tr.t_hi() != t_hi {
                return Err(Error::config("trajectory does not span the window"));
            }
        }
        Ok(Self {
            t_lo,
            t_hi,
            trajectories,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Occupancy of a subset of a [`ParticleWindow`]. Queries outside the window's
/// time range see no particles.
#[derive(Debug, Clone)]
pub struct WindowOccupancy<'a> {
    window: &'a ParticleWindow,
    keep: Vec<bool>,
}

impl<'a> WindowOccupancy<'a> {
    pub fn all(window: &'a ParticleWindow) -> Self {
        Self {
            window,
            keep: vec![true; window.len()],
        }
    }

    pub fn with_mask(window: &'a ParticleWindow, keep: Vec<bool>) -> Self {
        assert_eq!(keep.len(), window.len());
        Self { window, keep }
    }
}

impl Occupancy for WindowOccupancy<'_> {
    fn is_occupied(&mut self, x: i64, t: i64) -> bool {
        self.window
            .trajectories
            .iter()
            .zip(&self.keep)
            .any(|(tr, &k)| k && tr.at(t) == Some(x))
    }
}
