//! The infection process on environment particles and its front.
//!
//! At time 0 every particle on a nonnegative even site is infected. Whenever
//! particles share a site at time `n` and one of them is infected, all of them
//! are infected at time `n + 1`. The front `X̄_n` is the leftmost infected
//! particle.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, ParticleId, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::particles::{ParticleStream, StreamingOccupancy};
use crate::walker::{run_walker_on, WalkerPath};

/// Default bound on the rightward search for the first infected particle.
pub const SEED_SEARCH_CAP: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionState {
    pub time: u64,
    /// Sorted.
    pub infected: Vec<ParticleId>,
    /// Particles starting in this site range were simulated.
    pub window: (i64, i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontPath {
    pub positions: Vec<i64>,
}

impl FrontPath {
    pub fn horizon(&self) -> usize {
        self.positions.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionRun {
    pub front: FrontPath,
    pub state: InfectionState,
    /// Leftmost nonnegative even occupied site at time 0.
    pub first_seed_site: i64,
    /// Parity statements about the front are only guaranteed for `q0 = 0`.
    pub parity_guaranteed: bool,
}

/// Options for [`run_infection_with`].
#[derive(Debug, Clone, Copy)]
pub struct InfectionOptions {
    /// Extra sites simulated on both sides beyond the sufficiency window.
    pub extra_margin: i64,
    pub seed_search_cap: i64,
}

impl Default for InfectionOptions {
    fn default() -> Self {
        Self {
            extra_margin: 0,
            seed_search_cap: SEED_SEARCH_CAP,
        }
    }
}

fn first_seed_site(env: &Environment, cap: i64) -> Result<i64> {
    (0..=cap)
        .step_by(2)
        .find(|&z| env.initial_count(z) > 0)
        .ok_or(Error::NoSeedInfection { searched: cap })
}

/// Site range whose particles determine the front up to `horizon`: nothing
/// starting left of `-2T` can meet an infected particle by time `T`, and
/// nothing starting right of `z0 + 2T` can get left of the front.
fn sufficiency_range(z0: i64, horizon: i64) -> (i64, i64) {
    (-2 * horizon, z0 + 2 * horizon)
}

/// Mark-by-timestamp lookup table over a site range.
struct SiteMarks {
    lo: i64,
    stamp: Vec<u64>,
}

impl SiteMarks {
    fn new(lo: i64, hi: i64) -> Self {
        Self {
            lo,
            stamp: vec![u64::MAX; (hi - lo + 1) as usize],
        }
    }

    #[inline]
    fn mark(&mut self, x: i64, n: u64) {
        self.stamp[(x - self.lo) as usize] = n;
    }

    #[inline]
    fn is_marked(&self, x: i64, n: u64) -> bool {
        self.stamp[(x - self.lo) as usize] == n
    }
}

/// Drives the infection forward one time step at a time.
struct InfectionEngine {
    stream: ParticleStream,
    infected: Vec<bool>,
    marks: SiteMarks,
}

impl InfectionEngine {
    fn new(env: &Environment, lo: i64, hi: i64, horizon: i64) -> Self {
        let stream = ParticleStream::new(env, lo, hi);
        let infected = stream.ids().iter().map(|id| id.z >= 0 && id.z % 2 == 0).collect();
        Self {
            stream,
            infected,
            marks: SiteMarks::new(lo - horizon - 1, hi + horizon + 1),
        }
    }

    fn front(&self) -> i64 {
        self.stream
            .positions()
            .iter()
            .zip(&self.infected)
            .filter(|(_, &inf)| inf)
            .map(|(&p, _)| p)
            .min()
            .expect("the first seed particle is always infected")
    }

    /// Infects by co-location at the current time, then moves everyone.
    fn step(&mut self) {
        let n = self.stream.time() as u64;
        let pos = self.stream.positions();
        for (&p, &inf) in pos.iter().zip(&self.infected) {
            if inf {
                self.marks.mark(p, n);
            }
        }
        for (inf, &p) in self.infected.iter_mut().zip(pos) {
            if !*inf && self.marks.is_marked(p, n) {
                *inf = true;
            }
        }
        self.stream.advance();
    }

    fn state(&self, window: (i64, i64)) -> InfectionState {
        let infected: BTreeSet<ParticleId> = self
            .stream
            .ids()
            .iter()
            .zip(&self.infected)
            .filter(|(_, &inf)| inf)
            .map(|(&id, _)| id)
            .collect();
        InfectionState {
            time: self.stream.time() as u64,
            infected: infected.into_iter().collect(),
            window,
        }
    }
}

pub fn run_infection(env: &Environment, horizon: u64) -> Result<InfectionRun> {
    run_infection_with(env, horizon, InfectionOptions::default())
}

pub fn run_infection_with(env: &Environment, horizon: u64, opts: InfectionOptions) -> Result<InfectionRun> {
    let z0 = first_seed_site(env, opts.seed_search_cap)?;
    let t = horizon as i64;
    let (lo, hi) = sufficiency_range(z0, t);
    let window = (lo - opts.extra_margin, hi + opts.extra_margin);
    let mut engine = InfectionEngine::new(env, window.0, window.1, t);
    let mut front = Vec::with_capacity(horizon as usize + 1);
    front.push(engine.front());
    for _ in 0..horizon {
        engine.step();
        front.push(engine.front());
    }
    Ok(InfectionRun {
        front: FrontPath { positions: front },
        state: engine.state(window),
        first_seed_site: z0,
        parity_guaranteed: env.params().q0 == 0.0,
    })
}

/// Walker from the origin against the infection front on the same realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationReport {
    pub horizon: u64,
    /// Times `n` with `X_n > X̄_n`.
    pub violations: Vec<u64>,
    /// `X̄_n - X_n` even for every `n`.
    pub parity_ok: bool,
    /// `p• = 0` and `q0 = 0`: violations are then impossible.
    pub hypotheses_hold: bool,
    pub walker_final: i64,
    pub front_final: i64,
}

/// Paths and the report they produce.
#[derive(Debug, Clone)]
pub struct WalkerFront {
    pub walker: WalkerPath,
    pub front: InfectionRun,
    pub report: DominationReport,
}

pub fn compare_walker_front(env: &Environment, horizon: u64) -> Result<DominationReport> {
    Ok(walker_and_front(env, horizon)?.report)
}

pub fn walker_and_front(env: &Environment, horizon: u64) -> Result<WalkerFront> {
    let front = run_infection(env, horizon)?;
    let mut occ = StreamingOccupancy::for_walker(env, 0, 0, horizon as usize)?;
    let walker = run_walker_on(env, &mut occ, SpaceTimePoint::ORIGIN, horizon as usize);
    let pairs = walker.positions.iter().zip(&front.front.positions);
    let violations = pairs
        .clone()
        .enumerate()
        .filter(|(_, (x, f))| x > f)
        .map(|(n, _)| n as u64)
        .collect();
    let parity_ok = pairs.clone().all(|(x, f)| (f - x).rem_euclid(2) == 0);
    let p = env.params();
    let report = DominationReport {
        horizon,
        violations,
        parity_ok,
        hypotheses_hold: p.p_bullet == 0.0 && p.q0 == 0.0,
        walker_final: walker.last(),
        front_final: *front.front.positions.last().expect("non-empty"),
    };
    Ok(WalkerFront {
        walker,
        front,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{InitialConfig, ModelParams};
    use crate::walker::run_walker;

    fn params(rho: f64, p_bullet: f64, q0: f64, seed: u64) -> ModelParams {
        ModelParams::new(rho, 0.9, p_bullet, q0, seed).unwrap()
    }

    #[test]
    fn single_particle_front_is_its_trajectory() {
        let env = Environment::injected(params(0.0, 0.0, 0.0, 3), InitialConfig::from_sites([0])).unwrap();
        let run = run_infection(&env, 50).unwrap();
        let id = ParticleId { z: 0, i: 1 };
        let expected: Vec<i64> = (0..=50).map(|t| env.position(id, t).unwrap()).collect();
        assert_eq!(run.front.positions, expected);
        assert_eq!(run.state.infected, vec![id]);
    }

    #[test]
    fn meeting_particles_infect_on_the_next_step() {
        // Particle at -2 starts healthy; find a seed where it meets the
        // particle from 0 and check the infection timing.
        let cfg = InitialConfig::from_sites([-2, 0]);
        let healthy = ParticleId { z: -2, i: 1 };
        let sick = ParticleId { z: 0, i: 1 };
        let mut found = false;
        for seed in 0..200 {
            let env = Environment::injected(params(0.0, 0.0, 0.0, seed), cfg.clone()).unwrap();
            let meet = (0..30).find(|&n| env.position(healthy, n).unwrap() == env.position(sick, n).unwrap());
            let Some(m) = meet else { continue };
            found = true;
            let before = run_infection(&env, m as u64).unwrap();
            assert_eq!(before.state.infected, vec![sick]);
            let after = run_infection(&env, m as u64 + 1).unwrap();
            assert_eq!(after.state.infected, vec![healthy, sick]);
            let run = run_infection(&env, 40).unwrap();
            for n in 0..=40 {
                let s = env.position(sick, n).unwrap();
                let expected = if n > m { s.min(env.position(healthy, n).unwrap()) } else { s };
                assert_eq!(run.front.positions[n as usize], expected, "seed {seed} n {n}");
            }
        }
        assert!(found);
    }

    #[test]
    fn no_seed_infection_is_an_error() {
        let env = Environment::injected(params(0.0, 0.0, 0.0, 1), InitialConfig::from_sites([-4, 1, 3])).unwrap();
        let err = run_infection_with(
            &env,
            10,
            InfectionOptions {
                extra_margin: 0,
                seed_search_cap: 100,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoSeedInfection { .. }));
    }

    #[test]
    fn infected_set_grows_and_front_parity_holds() {
        let env = Environment::poisson(params(1.0, 0.0, 0.0, 9)).unwrap();
        let mut prev: Vec<ParticleId> = Vec::new();
        for t in [0u64, 5, 20, 60] {
            let run = run_infection(&env, t).unwrap();
            assert!(prev.iter().all(|id| run.state.infected.contains(id)));
            for (n, &f) in run.front.positions.iter().enumerate() {
                assert_eq!((f - n as i64).rem_euclid(2), 0);
            }
            for w in run.front.positions.windows(2) {
                assert!((w[1] - w[0]).abs() <= 2);
            }
            prev = run.state.infected;
        }
    }

    #[test]
    fn enlarging_the_window_changes_nothing() {
        for seed in 0..10 {
            let env = Environment::poisson(params(0.8, 0.0, 0.0, seed)).unwrap();
            let a = run_infection(&env, 150).unwrap();
            let b = run_infection_with(
                &env,
                150,
                InfectionOptions {
                    extra_margin: 40,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(a.front, b.front);
        }
    }

    #[test]
    fn impermeable_walker_stays_left_of_front() {
        for seed in 0..30 {
            let env = Environment::poisson(params(1.0, 0.0, 0.0, seed)).unwrap();
            let r = compare_walker_front(&env, 400).unwrap();
            assert!(r.hypotheses_hold);
            assert!(r.violations.is_empty(), "seed {seed}: {:?}", r.violations);
            assert!(r.parity_ok);
        }
    }

    #[test]
    fn walker_in_comparison_is_the_ordinary_walker() {
        let env = Environment::poisson(params(1.0, 0.3, 0.0, 4)).unwrap();
        let wf = walker_and_front(&env, 200).unwrap();
        assert_eq!(wf.walker, run_walker(&env, SpaceTimePoint::ORIGIN, 200).unwrap());
    }

    #[test]
    fn permeable_case_is_informational() {
        let env = Environment::poisson(params(1.0, 1.0, 0.0, 2)).unwrap();
        let r = compare_walker_front(&env, 300).unwrap();
        assert!(!r.hypotheses_hold);
        assert!(r.parity_ok);
    }
}
