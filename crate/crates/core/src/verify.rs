//! Pathwise invariant suites and oracle cross-checks.
//!
//! Each suite runs independent seeds derived from a master seed and counts
//! violations of an inequality that must hold on every realization. A correct
//! build reports zero violations.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, InitialConfig, ModelParams, SpaceTimePoint};
use crate::error::Result;
use crate::infection::compare_walker_front;
use crate::oracle::{exact_pmf_poisson, exact_walker_pmf};
use crate::regeneration::{ConeSlope, GrtConfig, RunContext};
use crate::rng::{derive_seed, keyed, tag};
use crate::walker::{coupling_report, run_walker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub seeds: u64,
    /// Comparisons whose hypotheses held.
    pub applicable: u64,
    pub violations: u64,
    /// Seeds with at least one violation (first few).
    pub failing_seeds: Vec<u64>,
    pub passed: bool,
}

impl SuiteReport {
    fn from_counts(name: &str, seeds: u64, per_seed: Vec<(u64, u64)>) -> Self {
        let applicable = per_seed.iter().map(|p| p.0).sum();
        let violations = per_seed.iter().map(|p| p.1).sum();
        let failing_seeds: Vec<u64> = per_seed
            .iter()
            .enumerate()
            .filter(|(_, p)| p.1 > 0)
            .map(|(i, _)| i as u64)
            .take(10)
            .collect();
        Self {
            name: name.to_string(),
            seeds,
            applicable,
            violations,
            failing_seeds,
            passed: violations == 0 && applicable > 0,
        }
    }
}

// (rho, p_circ, p_bullet, q0); the first four have v∘ >= v•.
const MIXED_PARAMS: [(f64, f64, f64, f64); 5] = [
    (0.5, 0.9, 0.2, 0.0),
    (1.0, 0.7, 0.3, 0.5),
    (0.2, 0.6, 0.6, 0.0),
    (2.0, 0.95, 0.05, 0.3),
    (0.8, 0.3, 0.7, 0.0),
];

fn suite_seed(master: u64, suite: u64, i: u64) -> u64 {
    derive_seed(master, tag::VERIFY ^ (suite << 8), i)
}

fn seed_env(master: u64, suite: u64, i: u64, set: &[(f64, f64, f64, f64)]) -> Result<Environment> {
    let (rho, pc, pb, q0) = set[i as usize % set.len()];
    Environment::poisson(ModelParams::new(rho, pc, pb, q0, suite_seed(master, suite, i))?)
}

fn run_seeds(seeds: u64, f: impl Fn(u64) -> Result<(u64, u64)> + Sync + Send) -> Result<Vec<(u64, u64)>> {
    (0..seeds).into_par_iter().map(f).collect()
}

/// Walkers from even starts `−4, −2, 0, 2` never change order.
pub fn start_monotonicity(master: u64, seeds: u64, steps: usize) -> Result<SuiteReport> {
    let per_seed = run_seeds(seeds, |i| {
        let env = seed_env(master, 1, i, &MIXED_PARAMS)?;
        let paths = [-4, -2, 0, 2]
            .map(|x| run_walker(&env, SpaceTimePoint::new(x, 0), steps))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut bad = 0;
        for pair in paths.windows(2) {
            bad += pair[0].positions.iter().zip(&pair[1].positions).filter(|(a, b)| a > b).count() as u64;
        }
        Ok((3 * (steps as u64 + 1), bad))
    })?;
    Ok(SuiteReport::from_counts("start-monotonicity", seeds, per_seed))
}

/// Sites of `count` extra particles for seed `s`, within `[-10, 10]`.
pub fn extra_particles(s: u64, count: u32) -> InitialConfig {
    InitialConfig::from_sites((0..count).map(|j| (keyed(s, tag::VERIFY, j as i64, 0, 0) % 21) as i64 - 10))
}

/// With `v∘ >= v•`, superposing particles never moves the walker right.
pub fn environment_monotonicity(master: u64, seeds: u64, steps: usize, extra: u32) -> Result<SuiteReport> {
    let per_seed = run_seeds(seeds, |i| {
        let env = seed_env(master, 2, i, &MIXED_PARAMS[..4])?;
        let more = env.clone().with_extra(extra_particles(env.params().seed, extra));
        let a = run_walker(&env, SpaceTimePoint::ORIGIN, steps)?;
        let b = run_walker(&more, SpaceTimePoint::ORIGIN, steps)?;
        let bad = a.positions.iter().zip(&b.positions).filter(|(x, y)| y > x).count() as u64;
        Ok((steps as u64 + 1, bad))
    })?;
    Ok(SuiteReport::from_counts("environment-monotonicity", seeds, per_seed))
}

const SPARSE_PARAMS: [(f64, f64, f64, f64); 4] = [
    (0.002, 0.9, 0.5, 0.0),
    (0.01, 0.9, 0.1, 0.5),
    (0.002, 0.8, 0.0, 0.0),
    (0.005, 0.95, 0.3, 0.3),
];

/// `X_{t+s} >= X̄^{(x,t)}_s` whenever the coupling hypotheses hold. Anchors
/// are taken at even times at or behind the walker, so that some of them
/// satisfy the hypotheses.
pub fn ghost_domination(master: u64, seeds: u64, horizon: u64) -> Result<SuiteReport> {
    let per_seed = run_seeds(seeds, |i| {
        let env = seed_env(master, 3, i, &SPARSE_PARAMS)?;
        let origin = run_walker(&env, SpaceTimePoint::ORIGIN, 50)?;
        let (mut applicable, mut bad) = (0, 0);
        for t in [0usize, 10, 20, 50] {
            for back in [0, 2, 6] {
                let anchor = SpaceTimePoint::new(origin.at(t) - back, t as i64);
                let r = coupling_report(&env, anchor, horizon)?;
                if r.domination_applicable {
                    applicable += 1;
                    bad += r.domination_violations.len() as u64;
                }
            }
        }
        Ok((applicable, bad))
    })?;
    Ok(SuiteReport::from_counts("ghost-domination", seeds, per_seed))
}

/// `X_n <= X̄_n` against the infection front, with `X̄_n − X_n` even, for
/// `p• = q0 = 0` and `ρ = 1`. A parity failure counts as a violation.
pub fn infection_domination(master: u64, seeds: u64, horizon: u64) -> Result<SuiteReport> {
    let per_seed = run_seeds(seeds, |i| {
        let params = ModelParams::new(1.0, 0.9, 0.0, 0.0, suite_seed(master, 4, i))?;
        let r = compare_walker_front(&Environment::poisson(params)?, horizon)?;
        Ok((horizon + 1, r.violations.len() as u64 + u64::from(!r.parity_ok)))
    })?;
    Ok(SuiteReport::from_counts("infection-domination", seeds, per_seed))
}

/// The filtered walker sees a subset of the particles, so with `v∘ >= v•` it
/// stays at or right of the walker run from the same point.
pub fn filtered_dominance(master: u64, seeds: u64) -> Result<SuiteReport> {
    let grt = GrtConfig::new(3, 2)?;
    let slope = ConeSlope::from_v_star_f64(0.5)?;
    let per_seed = run_seeds(seeds, |i| {
        let env = seed_env(master, 5, i, &[(0.6, 0.9, 0.2, 0.0), (0.3, 0.8, 0.4, 0.5)])?;
        let ctx = RunContext::new(&env, slope, 80, (-80, 160), 40)?;
        let (Some(y1), Some(yk)) = (ctx.records.point(&ctx.path, 1), ctx.records.point(&ctx.path, 4)) else {
            return Ok((0, 0));
        };
        let y2 = yk.diagonal(2);
        let filtered = ctx.filtered_walker(y1, y2, 40, grt);
        let full = ctx.unfiltered_walker(y2, 40);
        let bad = filtered.positions.iter().zip(&full.positions).filter(|(a, b)| a < b).count() as u64;
        Ok((1, bad))
    })?;
    Ok(SuiteReport::from_counts("filtered-dominance", seeds, per_seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub p_circ: f64,
    pub p_bullet: f64,
    pub q0: f64,
    pub config: Vec<i64>,
    pub n: usize,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub samples: u64,
    pub tolerance: f64,
    pub cases: Vec<OracleCase>,
    pub max_tv: f64,
    pub passed: bool,
}

pub const ORACLE_PAIRS: [(f64, f64); 5] = [(0.75, 0.25), (0.9, 0.1), (0.5, 0.5), (0.6, 0.9), (0.3, 0.8)];

pub fn oracle_configs() -> Vec<Vec<i64>> {
    vec![vec![], vec![0], vec![1], vec![2], vec![0, 0], vec![-1, 1], vec![0, 2]]
}

/// Empirical laws of `X_1, …, X_max_n` from `samples` walkers on a fixed
/// configuration.
pub fn empirical_pmfs(base: &Environment, max_n: usize, samples: u64, stream: u64) -> Result<Vec<BTreeMap<i64, u64>>> {
    let paths: Vec<Vec<i64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let env = base.reseeded(derive_seed(base.params().seed, stream, s));
            Ok(run_walker(&env, SpaceTimePoint::ORIGIN, max_n)?.positions)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![BTreeMap::new(); max_n + 1];
    for p in &paths {
        for (n, &x) in p.iter().enumerate() {
            *out[n].entry(x).or_insert(0) += 1;
        }
    }
    Ok(out)
}

/// Exact pmf against Monte Carlo for `n <= 5`, every configuration, both
/// laziness values and every `(p∘, p•)` pair.
pub fn oracle_equivalence(master: u64, samples: u64, tolerance: f64) -> Result<OracleReport> {
    let max_n = 5;
    let mut cases = Vec::new();
    let mut stream = 0;
    for &(pc, pb) in &ORACLE_PAIRS {
        for q0 in [0.0, 0.5] {
            for sites in oracle_configs() {
                stream += 1;
                let config = InitialConfig::from_sites(sites.iter().copied());
                let params = ModelParams::new(0.0, pc, pb, q0, derive_seed(master, tag::VERIFY, stream))?;
                let env = Environment::injected(params, config.clone())?;
                let counts = empirical_pmfs(&env, max_n, samples, tag::VERIFY)?;
                for (n, c) in counts.iter().enumerate().skip(1) {
                    let exact = exact_walker_pmf(pc, pb, q0, &config, n)?;
                    cases.push(OracleCase {
                        p_circ: pc,
                        p_bullet: pb,
                        q0,
                        config: sites.clone(),
                        n,
                        tv: exact.tv_distance_to_counts(c),
                    });
                }
            }
        }
    }
    let max_tv = cases.iter().map(|c| c.tv).fold(0.0, f64::max);
    Ok(OracleReport {
        samples,
        tolerance,
        cases,
        max_tv,
        passed: max_tv <= tolerance,
    })
}

/// Total variation between the Poisson-environment oracle and Monte Carlo.
pub fn poisson_oracle_tv(params: &ModelParams, n: usize, samples: u64) -> Result<f64> {
    let exact = exact_pmf_poisson(params, n, 1e-12)?;
    let counts: Vec<i64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let env = Environment::poisson(params.with_seed(derive_seed(params.seed, tag::VERIFY, s)))?;
            Ok(run_walker(&env, SpaceTimePoint::ORIGIN, n)?.last())
        })
        .collect::<Result<_>>()?;
    let mut hist = BTreeMap::new();
    for x in counts {
        *hist.entry(x).or_insert(0u64) += 1;
    }
    Ok(exact.tv_distance_to_counts(&hist))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// 50 seeds and smaller oracle samples instead of 500 seeds.
    pub quick: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub quick: bool,
    pub suites: Vec<SuiteReport>,
    pub oracle: OracleReport,
    pub poisson_oracle_tv: f64,
    pub poisson_oracle_tolerance: f64,
    pub passed: bool,
}

pub fn run_verify(opts: VerifyOptions) -> Result<VerifyReport> {
    let m = opts.seed;
    let (seeds, samples, tol, infection_t) = if opts.quick {
        (50, 20_000, 0.02, 500)
    } else {
        (500, 100_000, 0.01, 2000)
    };
    let suites = vec![
        start_monotonicity(m, seeds, 300)?,
        environment_monotonicity(m, seeds, 300, 5)?,
        ghost_domination(m, seeds, 500)?,
        infection_domination(m, seeds, infection_t)?,
        filtered_dominance(m, seeds)?,
    ];
    let oracle = oracle_equivalence(m, samples, tol)?;
    let pparams = ModelParams::new(0.2, 0.8, 0.3, 0.0, m)?;
    let (psamples, ptol) = if opts.quick { (50_000, 0.015) } else { (1_000_000, 0.005) };
    let poisson_tv = poisson_oracle_tv(&pparams, 4, psamples)?;
    let passed = suites.iter().all(|s| s.passed) && oracle.passed && poisson_tv <= ptol;
    Ok(VerifyReport {
        quick: opts.quick,
        suites,
        oracle,
        poisson_oracle_tv: poisson_tv,
        poisson_oracle_tolerance: ptol,
        passed,
    })
}
