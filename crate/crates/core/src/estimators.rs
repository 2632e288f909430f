//! Monte Carlo estimators built on independent replicas.
//!
//! Replica `r` of an estimator runs on the environment seeded with
//! `derive_seed(params.seed, tag, r)`, so every result depends only on the
//! parameters and never on scheduling. Replicas run on the current rayon pool
//! and are reduced in replica order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, InitialConfig, ModelParams, SpaceTimePoint};
use crate::error::{Error, Result};
use crate::regeneration::{RegenerationConfig, RegenerationScan};
use crate::rng::{derive_seed, tag};
use crate::stats::{self, Interval};
use crate::walker::{coupling_report, run_walker, WalkerPath};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedMethod {
    ReplicaMean,
    Regenerative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub v_hat: f64,
    pub ci: Interval,
    /// Steps per replica (the horizon for regenerative estimates).
    pub n: u64,
    pub replicas: u64,
    pub method: SpeedMethod,
}

fn check_confidence(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("confidence level {level} must lie in (0, 1)")))
    }
}

fn check_positive(name: &str, value: u64) -> Result<()> {
    if value == 0 {
        Err(Error::config(format!("{name} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Environment of replica `r` for the experiment `tag`.
pub fn replica_env(params: &ModelParams, experiment: u64, r: u64) -> Result<Environment> {
    Environment::poisson(params.with_seed(derive_seed(params.seed, experiment, r)))
}

fn replica_walk(params: &ModelParams, experiment: u64, r: u64, steps: u64) -> Result<WalkerPath> {
    let env = replica_env(params, experiment, r)?;
    run_walker(&env, SpaceTimePoint::ORIGIN, steps as usize)
}

fn par_replicas<T: Send>(range: std::ops::Range<u64>, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    range.into_par_iter().map(f).collect()
}

pub fn estimate_speed(params: &ModelParams, n: u64, replicas: u64, confidence: f64) -> Result<SpeedEstimate> {
    params.validate()?;
    check_positive("n", n)?;
    check_positive("replicas", replicas)?;
    check_confidence(confidence)?;
    let speeds = par_replicas(0..replicas, |r| {
        Ok(replica_walk(params, tag::SPEED, r, n)?.last() as f64 / n as f64)
    })?;
    let v_hat = stats::mean(&speeds);
    let se = (stats::variance(&speeds) / replicas as f64).sqrt();
    Ok(SpeedEstimate {
        v_hat,
        ci: stats::normal_interval(v_hat, se, confidence),
        n,
        replicas,
        method: SpeedMethod::ReplicaMean,
    })
}

/// Frequency of `{∃ n ≤ horizon : sign(v⋆)·X_n < |v⋆|·n − L}`. Truncating at
/// the horizon can only miss events, so `p_hat` is biased low.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktrackEstimate {
    pub v_star: f64,
    pub l: f64,
    pub horizon: u64,
    pub replicas: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci: Interval,
}

/// Per replica, `min_{n ≤ horizon} (sign(v⋆)·X_n − |v⋆|·n)`. The event at
/// level `L` is `deficit < −L`, which makes nesting in `L` hold pathwise.
pub fn backtrack_deficits(params: &ModelParams, v_star: f64, horizon: u64, replicas: u64) -> Result<Vec<f64>> {
    params.validate()?;
    if v_star == 0.0 || !v_star.is_finite() {
        return Err(Error::config("v_star must be finite and nonzero"));
    }
    check_positive("replicas", replicas)?;
    let (sign, speed) = (v_star.signum(), v_star.abs());
    par_replicas(0..replicas, |r| {
        let path = replica_walk(params, tag::BACKTRACK, r, horizon)?;
        Ok(path
            .positions
            .iter()
            .enumerate()
            .map(|(n, &x)| sign * x as f64 - speed * n as f64)
            .fold(f64::INFINITY, f64::min))
    })
}

pub fn backtrack_from_deficits(
    deficits: &[f64],
    v_star: f64,
    l: f64,
    horizon: u64,
    confidence: f64,
) -> BacktrackEstimate {
    let replicas = deficits.len() as u64;
    let hits = deficits.iter().filter(|&&d| d < -l).count() as u64;
    BacktrackEstimate {
        v_star,
        l,
        horizon,
        replicas,
        hits,
        p_hat: hits as f64 / replicas.max(1) as f64,
        ci: stats::wilson_interval(hits, replicas, confidence),
    }
}

/// One estimate per entry of `ls`, all from the same replicas.
pub fn estimate_backtrack(
    params: &ModelParams,
    v_star: f64,
    ls: &[f64],
    horizon: u64,
    replicas: u64,
    confidence: f64,
) -> Result<Vec<BacktrackEstimate>> {
    check_confidence(confidence)?;
    let deficits = backtrack_deficits(params, v_star, horizon, replicas)?;
    Ok(ls
        .iter()
        .map(|&l| backtrack_from_deficits(&deficits, v_star, l, horizon, confidence))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltEntry {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    /// `Var̂(X_n) / n`.
    pub variance_ratio: f64,
    /// KS distance of `(X_n − n·v_ref) / √Var̂(X_n)` to the standard normal.
    pub ks_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub v_reference: f64,
    pub replicas: u64,
    pub entries: Vec<CltEntry>,
}

pub fn clt_diagnostic(params: &ModelParams, n_grid: &[u64], replicas: u64, v_reference: f64) -> Result<CltReport> {
    params.validate()?;
    if replicas < 100 {
        return Err(Error::config("the CLT diagnostic needs at least 100 replicas"));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let Some(&n_max) = grid.last() else {
        return Ok(CltReport {
            v_reference,
            replicas,
            entries: Vec::new(),
        });
    };
    if grid[0] == 0 {
        return Err(Error::config("n grid entries must be positive"));
    }
    let samples = par_replicas(0..replicas, |r| {
        let path = replica_walk(params, tag::CLT, r, n_max)?;
        Ok(grid.iter().map(|&n| path.at(n as usize) as f64).collect::<Vec<_>>())
    })?;
    let entries = grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let xs: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            let variance = stats::variance(&xs);
            let sd = variance.sqrt();
            let ks_distance = if sd > 0.0 {
                let z: Vec<f64> = xs.iter().map(|x| (x - n as f64 * v_reference) / sd).collect();
                stats::ks_distance_normal(&z)
            } else {
                1.0
            };
            CltEntry {
                n,
                mean: stats::mean(&xs),
                variance,
                variance_ratio: variance / n as f64,
                ks_distance,
            }
        })
        .collect();
    Ok(CltReport {
        v_reference,
        replicas,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub ci: Interval,
    pub successes: u64,
    pub replicas: u64,
}

impl ProbabilityEstimate {
    fn new(successes: u64, replicas: u64, confidence: f64) -> Self {
        Self {
            p_hat: successes as f64 / replicas.max(1) as f64,
            ci: stats::wilson_interval(successes, replicas, confidence),
            successes,
            replicas,
        }
    }
}

/// Frequency of `G_T ∩ Λ_T` for the walker and ghost from the origin, with the
/// particles of `config` and nothing else.
pub fn escape_probability(
    params: &ModelParams,
    config: &InitialConfig,
    horizon: u64,
    replicas: u64,
    confidence: f64,
) -> Result<ProbabilityEstimate> {
    params.validate()?;
    check_positive("replicas", replicas)?;
    check_confidence(confidence)?;
    let hits = par_replicas(0..replicas, |r| {
        let p = params.with_seed(derive_seed(params.seed, tag::ESCAPE, r));
        let env = Environment::injected(p, config.clone())?;
        let rep = coupling_report(&env, SpaceTimePoint::ORIGIN, horizon)?;
        Ok(rep.g_holds() && rep.lambda_holds)
    })?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(ProbabilityEstimate::new(successes, replicas, confidence))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub t: u64,
    pub survival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegenerativeOptions {
    /// Keep adding replicas until this many cycles are complete.
    pub target_cycles: usize,
    pub min_replicas: u64,
    pub max_replicas: u64,
    pub confidence: f64,
}

impl Default for RegenerativeOptions {
    fn default() -> Self {
        Self {
            target_cycles: 1000,
            min_replicas: 1,
            max_replicas: 10_000,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenerativeReport {
    pub config: RegenerationConfig,
    pub speed: SpeedEstimate,
    pub cycles: usize,
    pub replicas: u64,
    /// First regeneration time per replica, `None` if censored.
    pub taus: Vec<Option<u64>>,
    pub censored_fraction: f64,
    /// Empirical `P(τ > t)` at `t = 1, 2, 4, ...` up to the last testable time.
    pub survival: Vec<SurvivalPoint>,
    /// Fraction of tested records that failed along the chains.
    pub rejection_rate: f64,
    /// `(ΔX, Δt)` per completed cycle, replicas in order.
    pub increments: Vec<(i64, u64)>,
}

struct ReplicaRegen {
    tau: Option<u64>,
    increments: Vec<(i64, u64)>,
    examined: usize,
    rejected: usize,
}

fn regen_replica(params: &ModelParams, config: RegenerationConfig, r: u64) -> Result<ReplicaRegen> {
    let env = replica_env(params, tag::REGENERATION, r)?;
    let scan = RegenerationScan::new(&env, config)?;
    let chain = scan.chain();
    Ok(ReplicaRegen {
        tau: chain.times.first().copied(),
        increments: chain.increments(),
        examined: chain.examined,
        rejected: chain.rejected,
    })
}

/// Empirical survival of `τ` on a doubling grid. Censored replicas count as
/// surviving everywhere on the grid, which stops at the last testable time.
pub fn tau_survival(taus: &[Option<u64>], last_time: u64) -> Vec<SurvivalPoint> {
    let n = taus.len().max(1) as f64;
    std::iter::successors(Some(1u64), |&t| t.checked_mul(2))
        .take_while(|&t| t <= last_time)
        .map(|t| SurvivalPoint {
            t,
            survival: taus.iter().filter(|tau| tau.is_none_or(|v| v > t)).count() as f64 / n,
        })
        .collect()
}

/// Regenerative speed `ΣΔX / ΣΔt` over chained regeneration cycles, with a
/// delta-method interval, plus the tail of the first regeneration time.
pub fn regenerative_estimates(
    params: &ModelParams,
    config: RegenerationConfig,
    opts: RegenerativeOptions,
) -> Result<RegenerativeReport> {
    params.validate()?;
    config.validate()?;
    check_confidence(opts.confidence)?;
    if params.p_bullet <= 0.0 {
        return Err(Error::config("regenerative estimates need p_bullet > 0"));
    }
    const BATCH: u64 = 16;
    let mut taus = Vec::new();
    let mut increments = Vec::new();
    let (mut examined, mut rejected) = (0usize, 0usize);
    let mut next = 0u64;
    'outer: while next < opts.max_replicas {
        let end = (next + BATCH).min(opts.max_replicas);
        let batch = par_replicas(next..end, |r| regen_replica(params, config, r))?;
        for rep in batch {
            taus.push(rep.tau);
            increments.extend(rep.increments);
            examined += rep.examined;
            rejected += rep.rejected;
            next += 1;
            if increments.len() >= opts.target_cycles && next >= opts.min_replicas {
                break 'outer;
            }
        }
    }
    let cycles = increments.len();
    if cycles < 10 {
        return Err(Error::InsufficientRegenerations { found: cycles, needed: 10 });
    }
    let sum_x: f64 = increments.iter().map(|&(dx, _)| dx as f64).sum();
    let sum_t: f64 = increments.iter().map(|&(_, dt)| dt as f64).sum();
    let v_hat = sum_x / sum_t;
    let m = cycles as f64;
    let resid: Vec<f64> = increments.iter().map(|&(dx, dt)| dx as f64 - v_hat * dt as f64).collect();
    let s2 = resid.iter().map(|r| r * r).sum::<f64>() / (m - 1.0);
    let se = (s2 / m).sqrt() / (sum_t / m);
    let censored = taus.iter().filter(|t| t.is_none()).count();
    let replicas = taus.len() as u64;
    Ok(RegenerativeReport {
        config,
        speed: SpeedEstimate {
            v_hat,
            ci: stats::normal_interval(v_hat, se, opts.confidence),
            n: config.horizon,
            replicas,
            method: SpeedMethod::Regenerative,
        },
        cycles,
        replicas,
        censored_fraction: censored as f64 / replicas as f64,
        survival: tau_survival(&taus, config.last_candidate().unwrap_or(0)),
        rejection_rate: if examined == 0 { 0.0 } else { rejected as f64 / examined as f64 },
        taus,
        increments,
    })
}

/// `τ` for a fixed number of replicas, without chaining.
pub fn first_regeneration_times(params: &ModelParams, config: RegenerationConfig, replicas: u64) -> Result<Vec<Option<u64>>> {
    params.validate()?;
    config.validate()?;
    par_replicas(0..replicas, |r| {
        let env = replica_env(params, tag::REGENERATION, r)?;
        Ok(RegenerationScan::new(&env, config)?.outcome().tau)
    })
}
