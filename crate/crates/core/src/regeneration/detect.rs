//! Windowed detection of regeneration times and chains of regenerations.
//!
//! A record time `R_k` regenerates when no particle trajectory crosses both
//! cones at `Y_{R_k}` and the walker stays inside `∠(Y_{R_k})` afterwards.
//! Both conditions quantify over all time; here trajectories are restricted
//! to `[-past_window, horizon]` and the cone stay is checked for
//! `post_window` steps. A longer window can only turn a pass into a fail.

use serde::{Deserialize, Serialize};

use super::cone::{ConeProfile, ConeSlope};
use super::records::{kappa, RecordTracker};
use crate::env::{Environment, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::particles::ParticleWindow;
use crate::walker::{run_walker, WalkerPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegenerationConfig {
    pub slope: ConeSlope,
    /// Walker steps `T`.
    pub horizon: u64,
    /// Cone-stay requirement `H`.
    pub post_window: u64,
    /// Trajectories are followed back to time `-past_window`.
    pub past_window: u64,
}

impl RegenerationConfig {
    /// Past window defaults to `post_window`.
    pub fn new(v_star: f64, horizon: u64, post_window: u64) -> Result<Self> {
        let cfg = Self {
            slope: ConeSlope::from_v_star_f64(v_star)?,
            horizon,
            post_window,
            past_window: post_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_past_window(mut self, past_window: u64) -> Self {
        self.past_window = past_window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.post_window > self.horizon {
            return Err(Error::config(format!(
                "post window {} exceeds horizon {}",
                self.post_window, self.horizon
            )));
        }
        Ok(())
    }

    /// Last path index that can be tested.
    pub fn last_candidate(&self) -> Option<u64> {
        self.horizon.checked_sub(self.post_window)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDiagnostic {
    pub k: u64,
    pub time: u64,
    pub point: SpaceTimePoint,
    /// Steps spent in the forward cone before leaving it, capped at the post window.
    pub cone_stay: u64,
    /// Trajectories crossing both cones at the record point.
    pub crossing: u32,
    pub regenerates: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegenerationOutcome {
    pub config: RegenerationConfig,
    pub records_examined: usize,
    /// `𝓘`, or `None` if censored.
    pub index: Option<u64>,
    /// `τ = R_𝓘`, or `None` if censored.
    pub tau: Option<u64>,
    pub point: Option<SpaceTimePoint>,
    pub diagnostics: Vec<RecordDiagnostic>,
}

impl RegenerationOutcome {
    pub fn is_censored(&self) -> bool {
        self.tau.is_none()
    }
}

/// Successive regenerations, each found among the records relative to the
/// previous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegenerationChain {
    pub config: RegenerationConfig,
    pub times: Vec<u64>,
    pub positions: Vec<i64>,
    /// Candidate records tested along the chain.
    pub examined: usize,
    /// Candidates that failed.
    pub rejected: usize,
}

impl RegenerationChain {
    /// `(ΔX, Δt)` between consecutive regenerations. The stretch before the
    /// first one has a different law and is left out.
    pub fn increments(&self) -> Vec<(i64, u64)> {
        self.times
            .windows(2)
            .zip(self.positions.windows(2))
            .map(|(t, x)| (x[1] - x[0], t[1] - t[0]))
            .collect()
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.examined == 0 {
            0.0
        } else {
            self.rejected as f64 / self.examined as f64
        }
    }
}

/// Everything detection needs about one walker run: the path, per-point
/// crossing counts and the first cone exit after each point.
#[derive(Debug, Clone)]
pub struct RegenerationScan {
    pub config: RegenerationConfig,
    pub path: WalkerPath,
    crossing: Vec<u32>,
    next_exit: Vec<usize>,
}

impl RegenerationScan {
    /// Runs the walker from the origin and scans all particles that can
    /// matter inside the window.
    pub fn new(env: &Environment, config: RegenerationConfig) -> Result<Self> {
        config.validate()?;
        let path = run_walker(env, SpaceTimePoint::ORIGIN, config.horizon as usize)?;
        let mut scan = Self::bare(config, path);
        let Some((lo, hi)) = scan.candidate_span() else {
            return Ok(scan);
        };
        let (t_lo, t_hi) = (-(config.past_window as i64), config.horizon as i64);
        let reach = t_lo.abs().max(t_hi);
        let mut buf = Vec::new();
        let mut profile = ConeProfile::default();
        for id in env.particles_in(lo - reach, hi + reach) {
            env.fill_trajectory(id, t_lo, t_hi, &mut buf);
            scan.add_trajectory(t_lo, &buf, &mut profile);
        }
        Ok(scan)
    }

    /// Uses the trajectories of `window` instead of the environment's.
    pub fn from_window(config: RegenerationConfig, path: WalkerPath, window: &ParticleWindow) -> Result<Self> {
        config.validate()?;
        if path.steps() as u64 != config.horizon {
            return Err(Error::config("path length does not match the horizon"));
        }
        let mut scan = Self::bare(config, path);
        let mut profile = ConeProfile::default();
        for tr in &window.trajectories {
            scan.add_trajectory(tr.t_lo, &tr.positions, &mut profile);
        }
        Ok(scan)
    }

    fn bare(config: RegenerationConfig, path: WalkerPath) -> Self {
        let candidates = config.last_candidate().map_or(0, |c| c as usize + 1);
        let next_exit = next_cone_exit(config.slope, &path);
        Self {
            config,
            path,
            crossing: vec![0; candidates],
            next_exit,
        }
    }

    fn candidate_span(&self) -> Option<(i64, i64)> {
        let xs = &self.path.positions[..self.crossing.len()];
        Some((*xs.iter().min()?, *xs.iter().max()?))
    }

    fn add_trajectory(&mut self, t_lo: i64, positions: &[i64], profile: &mut ConeProfile) {
        let (Some(&lo), Some(&hi)) = (positions.iter().min(), positions.iter().max()) else {
            return;
        };
        // A crossing trajectory passes through the column of the apex.
        let xs = &self.path.positions[..self.crossing.len()];
        if !xs.iter().any(|&x| lo <= x && x <= hi) {
            return;
        }
        let slope = self.config.slope;
        profile.fill(slope, t_lo, positions);
        let start_t = self.path.start.t;
        for (n, (&x, c)) in xs.iter().zip(self.crossing.iter_mut()).enumerate() {
            if lo <= x && x <= hi {
                let t = start_t + n as i64;
                let key = slope.key(x, t);
                if profile.hits_forward_key(t, key) && profile.hits_backward_key(t, key) {
                    *c += 1;
                }
            }
        }
    }

    /// Crossing count at path index `n` (`n` must be a candidate).
    pub fn crossing(&self, n: usize) -> u32 {
        self.crossing[n]
    }

    pub fn candidates(&self) -> usize {
        self.crossing.len()
    }

    pub fn cone_stay(&self, n: usize) -> u64 {
        ((self.next_exit[n] - n - 1) as u64).min(self.config.post_window)
    }

    pub fn regenerates_at(&self, n: usize) -> bool {
        n < self.crossing.len()
            && self.crossing[n] == 0
            && self.next_exit[n] as u64 > n as u64 + self.config.post_window
    }

    fn diagnostic(&self, k: u64, n: usize) -> RecordDiagnostic {
        RecordDiagnostic {
            k,
            time: n as u64,
            point: self.path.point(n),
            cone_stay: self.cone_stay(n),
            crossing: self.crossing[n],
            regenerates: self.regenerates_at(n),
        }
    }

    /// Tests the records relative to path index `anchor` in order and stops
    /// at the first that regenerates.
    fn scan_from(&self, anchor: usize, mut on_record: impl FnMut(RecordDiagnostic)) -> Option<(u64, usize)> {
        let mut tracker = RecordTracker::new(self.config.slope, self.path.point(anchor));
        for n in anchor + 1..self.crossing.len() {
            if let Some(k) = tracker.observe(self.path.point(n)) {
                let d = self.diagnostic(k, n);
                on_record(d);
                if d.regenerates {
                    return Some((k, n));
                }
            }
        }
        None
    }

    pub fn outcome(&self) -> RegenerationOutcome {
        let mut diagnostics = Vec::new();
        let hit = self.scan_from(0, |d| diagnostics.push(d));
        for d in &diagnostics {
            assert_eq!(
                kappa(self.config.slope, self.path.start, d.point),
                Some(d.k as i64),
                "record index and cone index disagree"
            );
        }
        RegenerationOutcome {
            config: self.config,
            records_examined: diagnostics.len(),
            index: hit.map(|(k, _)| k),
            tau: hit.map(|(_, n)| n as u64),
            point: hit.map(|(_, n)| self.path.point(n)),
            diagnostics,
        }
    }

    pub fn chain(&self) -> RegenerationChain {
        let mut times = Vec::new();
        let mut positions = Vec::new();
        let (mut examined, mut passed) = (0usize, 0usize);
        let mut anchor = 0;
        while let Some((_, n)) = self.scan_from(anchor, |_| examined += 1) {
            passed += 1;
            times.push(n as u64);
            positions.push(self.path.at(n));
            anchor = n;
        }
        RegenerationChain {
            config: self.config,
            times,
            positions,
            examined,
            rejected: examined - passed,
        }
    }
}

/// For each index `n`, the first `s > n` with `Y_s ∉ ∠(Y_n)`, or
/// `path.steps() + 1` if there is none.
fn next_cone_exit(slope: ConeSlope, path: &WalkerPath) -> Vec<usize> {
    let len = path.steps() + 1;
    let keys: Vec<i64> = (0..len).map(|s| slope.point_key(path.point(s))).collect();
    // Along a path time only increases, so leaving ∠(Y_n) is the key dropping
    // below key(Y_n). Next-smaller-element with a stack.
    let mut out = vec![len; len];
    let mut stack: Vec<usize> = Vec::new();
    for (s, &k) in keys.iter().enumerate() {
        while let Some(&top) = stack.last() {
            if k < keys[top] {
                out[top] = s;
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(s);
    }
    out
}

pub fn detect_regeneration(env: &Environment, config: RegenerationConfig) -> Result<RegenerationOutcome> {
    Ok(RegenerationScan::new(env, config)?.outcome())
}

pub fn chain_regenerations(env: &Environment, config: RegenerationConfig) -> Result<RegenerationChain> {
    Ok(RegenerationScan::new(env, config)?.chain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ModelParams;
    use crate::particles::WindowedTrajectory;
    use crate::walker::LatticePath;

    fn cfg(horizon: u64, post: u64) -> RegenerationConfig {
        RegenerationConfig::new(0.5, horizon, post).unwrap()
    }

    #[test]
    fn all_right_path_regenerates_at_first_record() {
        let env = Environment::poisson(ModelParams::new(0.0, 1.0, 0.5, 0.0, 3).unwrap()).unwrap();
        let out = detect_regeneration(&env, cfg(50, 20)).unwrap();
        assert_eq!(out.index, Some(1));
        assert_eq!(out.tau, Some(1));
        assert_eq!(out.records_examined, 1);
    }

    #[test]
    fn post_window_longer_than_horizon_is_rejected() {
        assert!(RegenerationConfig::new(0.5, 10, 11).is_err());
    }

    #[test]
    fn crossing_trajectory_blocks_a_record() {
        // Straight walker; one particle sitting just left of Y_1 and then
        // jumping ahead of it crosses both cones at (1, 1) and nowhere later.
        let path = LatticePath {
            start: SpaceTimePoint::ORIGIN,
            positions: (0..=30).collect(),
        };
        let mut pos = vec![0; 4]; // t = -2..=1
        pos.extend([1, 2, 3, 4, 5, 6]); // t = 2..=7
        pos.extend(std::iter::repeat_n(6, 23)); // t = 8..=30
        let tr = WindowedTrajectory::explicit(-2, pos).unwrap();
        let window = ParticleWindow::from_trajectories(-2, 30, vec![tr]).unwrap();
        let config = cfg(30, 10).with_past_window(2);
        let scan = RegenerationScan::from_window(config, path, &window).unwrap();
        assert_eq!(scan.crossing(1), 1);
        let out = scan.outcome();
        assert!(out.diagnostics[0].crossing > 0);
        assert!(!out.diagnostics[0].regenerates);
        let tau = out.tau.unwrap();
        assert!(tau > 1);
        assert_eq!(scan.crossing(tau as usize), 0);
    }

    #[test]
    fn next_exit_matches_brute_force() {
        let env = Environment::poisson(ModelParams::new(0.3, 0.8, 0.3, 0.0, 11).unwrap()).unwrap();
        let path = run_walker(&env, SpaceTimePoint::ORIGIN, 300).unwrap();
        let slope = ConeSlope::from_v_star_f64(0.5).unwrap();
        let exits = next_cone_exit(slope, &path);
        for (n, &exit) in exits.iter().enumerate().take(301) {
            let cone = super::super::cone::ConeSpec::new(path.point(n), slope);
            let brute = (n + 1..=300).find(|&s| !cone.in_forward(path.point(s))).unwrap_or(301);
            assert_eq!(exit, brute);
        }
    }

    #[test]
    fn streamed_and_materialized_crossings_agree() {
        for seed in 0..5 {
            let env = Environment::poisson(ModelParams::new(0.3, 0.9, 0.5, 0.0, seed).unwrap()).unwrap();
            let config = cfg(200, 50).with_past_window(60);
            let scan = RegenerationScan::new(&env, config).unwrap();
            let xs = &scan.path.positions;
            let (lo, hi) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
            let window = ParticleWindow::build(&env, lo, hi, -60, 200).unwrap();
            let other = RegenerationScan::from_window(config, scan.path.clone(), &window).unwrap();
            for n in 0..scan.candidates() {
                assert_eq!(scan.crossing(n), other.crossing(n));
            }
        }
    }

    #[test]
    fn regenerations_satisfy_their_definition() {
        for seed in 0..20 {
            let env = Environment::poisson(ModelParams::new(0.1, 0.9, 0.5, 0.0, seed).unwrap()).unwrap();
            let config = cfg(600, 150);
            let scan = RegenerationScan::new(&env, config).unwrap();
            let out = scan.outcome();
            if let Some(tau) = out.tau {
                let y = scan.path.point(tau as usize);
                let cone = super::super::cone::ConeSpec::new(y, config.slope);
                for s in 0..=config.post_window as usize {
                    assert!(cone.in_forward(scan.path.point(tau as usize + s)));
                }
                assert_eq!(out.point, Some(y));
            }
            let chain = scan.chain();
            assert_eq!(chain.times.first().copied(), out.tau);
            assert!(chain.times.windows(2).all(|w| w[0] < w[1]));
            assert!(chain.rejected <= chain.examined);
            for &t in &chain.times {
                assert!(scan.regenerates_at(t as usize));
            }
        }
    }
}
