//! Walker dynamics `X^y`, ghost walkers, the coupling events `G` and `Λ`, and
//! the empty-interval scan.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::particles::{Occupancy, StreamingOccupancy};

/// A nearest-neighbour lattice path started at `start`; `positions[k]` is the
/// site at time `start.t + k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub start: SpaceTimePoint,
    pub positions: Vec<i64>,
}

pub type WalkerPath = LatticePath;
pub type GhostPath = LatticePath;

impl LatticePath {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn at(&self, k: usize) -> i64 {
        self.positions[k]
    }

    pub fn last(&self) -> i64 {
        *self.positions.last().expect("paths are never empty")
    }

    /// Space-time point after `k` steps.
    pub fn point(&self, k: usize) -> SpaceTimePoint {
        SpaceTimePoint::new(self.positions[k], self.start.t + k as i64)
    }

    /// Unit steps and the parity `X_k - x - k` even.
    pub fn is_nearest_neighbour(&self) -> bool {
        self.positions[0] == self.start.x
            && self.positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1)
            && self
                .positions
                .iter()
                .enumerate()
                .all(|(k, &x)| (x - self.start.x - k as i64).rem_euclid(2) == 0)
    }
}

/// One walker step from `(x, t)`: right iff `u < p`, with `p = p∘` on empty
/// sites and `p•` on occupied ones.
#[inline]
fn walker_step(env: &Environment, occupied: bool, x: i64, t: i64) -> i64 {
    let p = env.params();
    let threshold = if occupied { p.p_bullet } else { p.p_circ };
    if env.uniform(x, t) < threshold {
        1
    } else {
        -1
    }
}

/// Runs `X^start` for `steps` steps against an arbitrary occupancy source.
pub fn run_walker_on(
    env: &Environment,
    occupancy: &mut impl Occupancy,
    start: SpaceTimePoint,
    steps: usize,
) -> WalkerPath {
    let mut positions = Vec::with_capacity(steps + 1);
    let mut x = start.x;
    positions.push(x);
    for k in 0..steps as i64 {
        let t = start.t + k;
        let occupied = occupancy.is_occupied(x, t);
        x += walker_step(env, occupied, x, t);
        positions.push(x);
    }
    LatticePath { start, positions }
}

/// Runs `X^start` for `steps` steps in `env`, with exact occupancy.
pub fn run_walker(env: &Environment, start: SpaceTimePoint, steps: usize) -> Result<WalkerPath> {
    let mut occ = StreamingOccupancy::for_walker(env, start.x, start.t, steps)?;
    Ok(run_walker_on(env, &mut occ, start, steps))
}

/// The ghost walker `X̄^{(x,t)}`: a homogeneous walk with drift `v∘` driven by
/// the same uniform field. It never looks at the particles.
pub fn run_ghost(env: &Environment, start: SpaceTimePoint, steps: usize) -> GhostPath {
    let p_circ = env.params().p_circ;
    let mut positions = Vec::with_capacity(steps + 1);
    let mut x = start.x;
    positions.push(x);
    for s in 0..steps as i64 {
        x += if env.uniform(x, start.t + s) < p_circ { 1 } else { -1 };
        positions.push(x);
    }
    LatticePath { start, positions }
}

/// `G` and `Λ` for the pair `X^{(x,t)}`, `X̄^{(x,t)}` over `[0, T]`, together
/// with the comparison `X_{t+s} >= X̄_s` for the walker started at the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub anchor: SpaceTimePoint,
    pub horizon: u64,
    /// Largest `s <= T` with `X^{(x,t)}_r = X̄_r` for every `r <= s`.
    pub g_holds_until: u64,
    pub lambda_holds: bool,
    /// Whether the comparison's hypotheses hold: `G` up to `T`, `X_t >= x`,
    /// and `X_t - x` even.
    pub domination_applicable: bool,
    /// `None` when not applicable.
    pub domination_ok: Option<bool>,
    /// Values of `s` with `X_{t+s} < X̄_s`.
    pub domination_violations: Vec<u64>,
}

impl CouplingReport {
    pub fn g_holds(&self) -> bool {
        self.g_holds_until == self.horizon
    }
}

/// Largest `s` with the two paths agreeing on `[0, s]`.
pub fn agreement_length(a: &LatticePath, b: &LatticePath) -> u64 {
    a.positions
        .iter()
        .zip(&b.positions)
        .take_while(|(x, y)| x == y)
        .count() as u64
        - 1
}

/// `X̄_s - x >= v∘ s / 2` for every `s` of the ghost path.
pub fn lambda_holds(ghost: &GhostPath, v_circ: f64) -> bool {
    ghost
        .positions
        .iter()
        .enumerate()
        .all(|(s, &x)| 2.0 * (x - ghost.start.x) as f64 >= v_circ * s as f64)
}

pub fn coupling_report(env: &Environment, anchor: SpaceTimePoint, horizon: u64) -> Result<CouplingReport> {
    if anchor.x.rem_euclid(2) != 0 {
        return Err(Error::config(format!(
            "coupling anchor x = {} must be even",
            anchor.x
        )));
    }
    if anchor.t < 0 {
        return Err(Error::config(format!(
            "coupling anchor t = {} must be >= 0",
            anchor.t
        )));
    }
    let steps = horizon as usize;
    let walker = run_walker(env, anchor, steps)?;
    let ghost = run_ghost(env, anchor, steps);
    let g_holds_until = agreement_length(&walker, &ghost);
    let lambda = lambda_holds(&ghost, env.params().v_circ());

    let mut report = CouplingReport {
        anchor,
        horizon,
        g_holds_until,
        lambda_holds: lambda,
        domination_applicable: false,
        domination_ok: None,
        domination_violations: Vec::new(),
    };
    if g_holds_until < horizon {
        return Ok(report);
    }
    let origin = run_walker(env, SpaceTimePoint::ORIGIN, anchor.t as usize + steps)?;
    let x_t = origin.at(anchor.t as usize);
    if x_t < anchor.x || (x_t - anchor.x).rem_euclid(2) != 0 {
        return Ok(report);
    }
    report.domination_applicable = true;
    report.domination_violations = (0..=steps)
        .filter(|&s| origin.at(anchor.t as usize + s) < ghost.at(s))
        .map(|s| s as u64)
        .collect();
    report.domination_ok = Some(report.domination_violations.is_empty());
    Ok(report)
}

/// Result of scanning the initial configuration for `4ℓ + 1` consecutive empty
/// sites to the left of the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmptyIntervalScan {
    pub ell: u64,
    pub search_bound: u64,
    /// Centre `Ẑ` of the first empty interval; `None` when censored.
    pub hat_z: Option<i64>,
    /// `Ẑ - ℓ`, moved up by one if odd.
    pub x_minus: Option<i64>,
    pub censored: bool,
}

pub fn find_empty_interval(env: &Environment, ell: u64, search_bound: u64) -> Result<EmptyIntervalScan> {
    if ell == 0 {
        return Err(Error::config("ell must be >= 1"));
    }
    let ell_i = ell as i64;
    let bound = search_bound as i64;
    let mut scan = EmptyIntervalScan {
        ell,
        search_bound,
        hat_z: None,
        x_minus: None,
        censored: true,
    };
    // Slide leftwards keeping the length of the current run of empty sites
    // ending (on the left) at the scanned site.
    let mut run = 0i64;
    let mut x = -1i64;
    while x >= -bound - 2 * ell_i {
        if env.initial_count(x) == 0 {
            run += 1;
        } else {
            run = 0;
        }
        // run covers [x, x + run - 1]; the candidate centre is x + 2ℓ.
        if run > 4 * ell_i {
            let z = x + 2 * ell_i;
            if z < -2 * ell_i && z >= -bound {
                let xm = if (z - ell_i).rem_euclid(2) == 0 {
                    z - ell_i
                } else {
                    z - ell_i + 1
                };
                scan.hat_z = Some(z);
                scan.x_minus = Some(xm);
                scan.censored = false;
                return Ok(scan);
            }
        }
        x -= 1;
    }
    Ok(scan)
}
