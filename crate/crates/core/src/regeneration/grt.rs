//! Good record times and the filtered walker `W̃`.

use serde::{Deserialize, Serialize};

use super::cone::{ConeSlope, TrajectoryClass};
use super::influence::{local_influence_field_in, local_shift, ProfiledWindow};
use super::records::{record_times, Parallelogram, RecordSequence};
use crate::env::{Environment, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::particles::{ParticleWindow, WindowOccupancy};
use crate::walker::{run_walker_on, WalkerPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrtConfig {
    pub t_prime: u64,
    pub t_double_prime: u64,
}

impl GrtConfig {
    pub fn new(t_prime: u64, t_double_prime: u64) -> Result<Self> {
        if t_prime == 0 {
            return Err(Error::config("T' must be positive"));
        }
        Ok(Self {
            t_prime,
            t_double_prime,
        })
    }

    /// `δ = 1 / (4 ln(1/p•))`, defined for `p• ∈ (0, 1)`.
    pub fn delta(p_bullet: f64) -> Option<f64> {
        (p_bullet > 0.0 && p_bullet < 1.0).then(|| 1.0 / (4.0 * (1.0 / p_bullet).ln()))
    }
}

/// A walker run from the origin together with the windowed trajectories
/// around it.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub env: Environment,
    pub path: WalkerPath,
    pub records: RecordSequence,
    pub window: ProfiledWindow,
}

impl RunContext {
    /// Walker from the origin for `steps` steps. Trajectories are kept over
    /// `time_window` for every particle that can come within `steps + margin`
    /// of the origin.
    pub fn new(env: &Environment, slope: ConeSlope, steps: usize, time_window: (i64, i64), margin: i64) -> Result<Self> {
        let (t_lo, t_hi) = time_window;
        if t_lo > 0 || t_hi < steps as i64 {
            return Err(Error::config("time window must cover the walker run"));
        }
        let reach = steps as i64 + margin;
        let window = ParticleWindow::build(env, -reach, reach, t_lo, t_hi)?;
        let path = run_walker_on(env, &mut WindowOccupancy::all(&window), SpaceTimePoint::ORIGIN, steps);
        let records = record_times(&path, slope);
        Ok(Self {
            env: env.clone(),
            path,
            records,
            window: ProfiledWindow::new(slope, window),
        })
    }

    pub fn slope(&self) -> ConeSlope {
        self.window.slope
    }

    /// `true` for trajectories kept in `T̃_{y1,y2}`: not in `W̃_{y1}`, or
    /// meeting `⦬(y2)`.
    pub fn filter_mask(&self, y1: SpaceTimePoint, y2: SpaceTimePoint, grt: GrtConfig) -> Vec<bool> {
        let pw = &self.window;
        let boundary = Parallelogram::new(pw.slope, SpaceTimePoint::ORIGIN, y1, grt.t_prime)
            .map(|p| p.right_boundary())
            .unwrap_or_default();
        let shift = local_shift(pw.slope, grt.t_prime);
        let l = grt.t_double_prime as i64;
        (0..pw.profiles.len())
            .map(|i| {
                let in_tilde = boundary.iter().any(|&z| {
                    pw.class(i, z.shift(-shift, 0)) == TrajectoryClass::Forward
                        && pw.crosses(i, z)
                        && pw.crosses(i, z.diagonal(l))
                });
                let key = pw.slope.point_key(y2);
                !in_tilde || pw.profiles[i].hits_backward_key(y2.t, key)
            })
            .collect()
    }

    /// Walker from `y2` seeing only the trajectories with `keep` set.
    pub fn masked_walker(&self, keep: Vec<bool>, y2: SpaceTimePoint, steps: usize) -> WalkerPath {
        let mut occ = WindowOccupancy::with_mask(&self.window.window, keep);
        run_walker_on(&self.env, &mut occ, y2, steps)
    }

    /// `Ỹ^{y1,y2}`.
    pub fn filtered_walker(&self, y1: SpaceTimePoint, y2: SpaceTimePoint, steps: usize, grt: GrtConfig) -> WalkerPath {
        self.masked_walker(self.filter_mask(y1, y2, grt), y2, steps)
    }

    /// The walker from `y2` with every windowed trajectory present.
    pub fn unfiltered_walker(&self, y2: SpaceTimePoint, steps: usize) -> WalkerPath {
        self.masked_walker(vec![true; self.window.profiles.len()], y2, steps)
    }

    pub fn good_record_time(&self, k: u64, grt: GrtConfig) -> GrtReport {
        is_good_record_time(self, k, grt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrtReport {
    pub k: u64,
    /// `false` when record `k − T′` or `k` is missing; the conditions are then
    /// all reported as `false`.
    pub applicable: bool,
    pub local_fields_small: bool,
    pub diagonal_uniforms_small: bool,
    pub no_forward_crossers: bool,
    pub filtered_exits_right: bool,
}

impl GrtReport {
    pub fn is_good(&self) -> bool {
        self.applicable
            && self.local_fields_small
            && self.diagonal_uniforms_small
            && self.no_forward_crossers
            && self.filtered_exits_right
    }
}

pub fn is_good_record_time(ctx: &RunContext, k: u64, grt: GrtConfig) -> GrtReport {
    let mut report = GrtReport {
        k,
        applicable: false,
        local_fields_small: false,
        diagonal_uniforms_small: false,
        no_forward_crossers: false,
        filtered_exits_right: false,
    };
    let earlier = k.checked_sub(grt.t_prime).filter(|&j| j >= 1);
    let (Some(y1), Some(yk)) = (earlier.and_then(|j| ctx.records.point(&ctx.path, j)), ctx.records.point(&ctx.path, k))
    else {
        return report;
    };
    report.applicable = true;
    let pw = &ctx.window;
    let slope = pw.slope;
    let tpp = grt.t_double_prime;

    let p1 = Parallelogram::new(slope, SpaceTimePoint::ORIGIN, y1, grt.t_prime).expect("records lie in their cones");
    report.local_fields_small = p1
        .right_boundary()
        .into_iter()
        .all(|z| local_influence_field_in(pw, z, grt.t_prime, tpp).is_some());

    let p_bullet = ctx.env.params().p_bullet;
    report.diagonal_uniforms_small = (0..tpp as i64).all(|l| {
        let y = yk.diagonal(l);
        ctx.env.uniform(y.x, y.t) < p_bullet
    });

    let y2 = yk.diagonal(tpp as i64);
    report.no_forward_crossers =
        (0..pw.profiles.len()).all(|i| !(pw.class(i, yk) == TrajectoryClass::Forward && pw.crosses(i, y2)));

    let p2 = Parallelogram::new(slope, SpaceTimePoint::ORIGIN, y2, grt.t_prime).expect("diagonal stays in the cone");
    let walk = ctx.filtered_walker(y1, y2, p2.exit_budget(), grt);
    report.filtered_exits_right = p2.exit(&walk).is_some_and(|e| e.through_right);
    report
}
