//! Influence fields: how far along the diagonal a point's crossing
//! trajectories keep crossing.

use serde::{Deserialize, Serialize};

use super::cone::{ConeProfile, ConeSlope, TrajectoryClass};
use crate::env::{Environment, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::particles::ParticleWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluenceFieldSample {
    pub y: SpaceTimePoint,
    /// Time range the trajectories were restricted to.
    pub window: (i64, i64),
    pub l_max: u64,
    /// `None` when every `l ≤ l_max` still has a crossing trajectory.
    pub value: Option<u64>,
}

impl InfluenceFieldSample {
    pub fn is_censored(&self) -> bool {
        self.value.is_none()
    }
}

/// Cone profiles of every trajectory in a window, computed once.
#[derive(Debug, Clone)]
pub struct ProfiledWindow {
    pub slope: ConeSlope,
    pub window: ParticleWindow,
    pub profiles: Vec<ConeProfile>,
}

impl ProfiledWindow {
    pub fn new(slope: ConeSlope, window: ParticleWindow) -> Self {
        let profiles = window
            .trajectories
            .iter()
            .map(|tr| ConeProfile::new(slope, tr.t_lo, &tr.positions))
            .collect();
        Self {
            slope,
            window,
            profiles,
        }
    }

    pub fn time_range(&self) -> (i64, i64) {
        (self.window.t_lo, self.window.t_hi)
    }

    /// Indices of trajectories crossing both cones at `y`.
    pub fn crossing_at(&self, y: SpaceTimePoint) -> Vec<usize> {
        (0..self.profiles.len())
            .filter(|&i| self.profiles[i].crosses(self.slope, y))
            .collect()
    }

    pub fn class(&self, i: usize, y: SpaceTimePoint) -> TrajectoryClass {
        self.profiles[i].classify(self.slope, y)
    }

    pub fn crosses(&self, i: usize, y: SpaceTimePoint) -> bool {
        self.profiles[i].crosses(self.slope, y)
    }

    /// `ω(W^⋈_y ∩ W^⋈_{y2})` inside the window.
    pub fn crossing_pair_count(&self, y: SpaceTimePoint, y2: SpaceTimePoint) -> usize {
        self.crossing_at(y).into_iter().filter(|&i| self.crosses(i, y2)).count()
    }
}

fn first_clear(candidates: &[usize], l_max: u64, mut crosses: impl FnMut(usize, i64) -> bool) -> Option<u64> {
    (0..=l_max).find(|&l| candidates.iter().all(|&i| !crosses(i, l as i64)))
}

/// `h(y)` restricted to the trajectories of `pw`.
pub fn influence_field_in(pw: &ProfiledWindow, y: SpaceTimePoint, l_max: u64) -> InfluenceFieldSample {
    let candidates = pw.crossing_at(y);
    let value = first_clear(&candidates, l_max, |i, l| pw.crosses(i, y.diagonal(l)));
    InfluenceFieldSample {
        y,
        window: pw.time_range(),
        l_max,
        value,
    }
}

/// `h(y)` with every particle trajectory of `env` restricted to `window`.
pub fn influence_field(
    env: &Environment,
    slope: ConeSlope,
    y: SpaceTimePoint,
    l_max: u64,
    window: (i64, i64),
) -> Result<InfluenceFieldSample> {
    let (t_lo, t_hi) = window;
    if t_lo > y.t || t_hi < y.t + l_max as i64 {
        return Err(Error::config(format!(
            "time window [{t_lo}, {t_hi}] does not cover [{}, {}]",
            y.t,
            y.t + l_max as i64
        )));
    }
    // Crossing trajectories pass through column y.x inside the window.
    let pw = ProfiledWindow::new(slope, ParticleWindow::build(env, y.x, y.x, t_lo, t_hi)?);
    Ok(influence_field_in(&pw, y, l_max))
}

/// The backward shift `⌊(1 − v̄)T′⌋` used by the local field.
pub fn local_shift(slope: ConeSlope, t_prime: u64) -> i64 {
    (slope.den() - slope.num()) * t_prime as i64 / slope.den()
}

/// `h^T(z)`: as `h`, but only counting trajectories that meet the forward and
/// not the backward cone at `z − (⌊(1 − v̄)T′⌋, 0)`.
pub fn local_influence_field_in(pw: &ProfiledWindow, z: SpaceTimePoint, t_prime: u64, l_max: u64) -> Option<u64> {
    let base = z.shift(-local_shift(pw.slope, t_prime), 0);
    let candidates: Vec<usize> = pw
        .crossing_at(z)
        .into_iter()
        .filter(|&i| pw.class(i, base) == TrajectoryClass::Forward)
        .collect();
    first_clear(&candidates, l_max, |i, l| pw.crosses(i, z.diagonal(l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ModelParams;
    use crate::particles::WindowedTrajectory;

    fn slope() -> ConeSlope {
        ConeSlope::new(1, 6).unwrap()
    }

    #[test]
    fn empty_environment_has_zero_field() {
        let env = Environment::poisson(ModelParams::new(0.0, 0.9, 0.5, 0.0, 1).unwrap()).unwrap();
        let h = influence_field(&env, slope(), SpaceTimePoint::ORIGIN, 10, (-50, 50)).unwrap();
        assert_eq!(h.value, Some(0));
    }

    #[test]
    fn hand_built_crossing_path() {
        // Sits at -1 up to time 0, then climbs at speed one: crosses both cones
        // at the origin and along the diagonal for a while, since the diagonal
        // moves at speed one as well.
        let mut pos: Vec<i64> = vec![-1; 11];
        pos.extend((0..20).map(|k| k as i64));
        let tr = WindowedTrajectory::explicit(-10, pos).unwrap();
        let w = ParticleWindow::from_trajectories(-10, 20, vec![tr]).unwrap();
        let pw = ProfiledWindow::new(slope(), w);
        assert_eq!(pw.crossing_at(SpaceTimePoint::ORIGIN), vec![0]);
        let h = influence_field_in(&pw, SpaceTimePoint::ORIGIN, 30);
        let l = h.value.expect("window is finite, so crossing stops");
        assert!(l >= 1);
        assert_eq!(pw.crossing_pair_count(SpaceTimePoint::ORIGIN, SpaceTimePoint::new(l as i64, l as i64)), 0);
        for m in 0..l as i64 {
            assert_eq!(pw.crossing_pair_count(SpaceTimePoint::ORIGIN, SpaceTimePoint::new(m, m)), 1);
        }
    }

    #[test]
    fn censoring_when_l_max_is_too_small() {
        let tr = WindowedTrajectory::explicit(-3, (-4..=6).map(|k| k.max(-1)).collect()).unwrap();
        let w = ParticleWindow::from_trajectories(-3, 7, vec![tr]).unwrap();
        let pw = ProfiledWindow::new(slope(), w);
        let h = influence_field_in(&pw, SpaceTimePoint::ORIGIN, 0);
        assert!(h.is_censored());
    }

    #[test]
    fn window_must_cover_diagonal() {
        let env = Environment::poisson(ModelParams::new(0.5, 0.9, 0.5, 0.0, 1).unwrap()).unwrap();
        assert!(influence_field(&env, slope(), SpaceTimePoint::ORIGIN, 10, (-5, 5)).is_err());
    }

    #[test]
    fn local_field_never_exceeds_the_plain_field() {
        for seed in 0..20 {
            let env = Environment::poisson(ModelParams::new(0.5, 0.9, 0.5, 0.0, seed).unwrap()).unwrap();
            let w = ParticleWindow::build(&env, -30, 30, -100, 100).unwrap();
            let pw = ProfiledWindow::new(slope(), w);
            for x in [-3, 0, 4] {
                let z = SpaceTimePoint::new(x, 7);
                let plain = influence_field_in(&pw, z, 40).value;
                let local = local_influence_field_in(&pw, z, 6, 40);
                if let (Some(p), Some(l)) = (plain, local) {
                    assert!(l <= p);
                }
                assert!(local.is_some() || plain.is_none());
            }
        }
    }
}
