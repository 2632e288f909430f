//! Parameter-grid sweeps of the replica-mean speed.
//!
//! Rows depend only on the configuration. Wall-clock quantities live in the
//! manifest, next to the hash of the serialized rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::ModelParams;
use crate::error::{Error, Result};
use crate::estimators::{estimate_speed, DEFAULT_CONFIDENCE};
use crate::rng::{keyed, tag};
use crate::stats::Interval;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub p_circ: Vec<f64>,
    #[serde(default)]
    pub p_bullet: Vec<f64>,
    #[serde(default)]
    pub q0: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.rho.len() * self.p_circ.len() * self.p_bullet.len() * self.q0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid coordinates in row-major order (`rho` slowest, `q0` fastest).
    pub fn coordinates(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.rho.len() {
            for j in 0..self.p_circ.len() {
                for k in 0..self.p_bullet.len() {
                    for l in 0..self.q0.len() {
                        out.push([i, j, k, l]);
                    }
                }
            }
        }
        out
    }

    fn values(&self, c: [usize; 4]) -> (f64, f64, f64, f64) {
        (self.rho[c[0]], self.p_circ[c[1]], self.p_bullet[c[2]], self.q0[c[3]])
    }
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: Grid,
    pub n: u64,
    pub replicas: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub seed: u64,
    /// JSONL destination; the manifest goes next to it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks every grid point and estimator setting.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for &rho in &g.rho {
            ModelParams::new(rho, 0.5, 0.5, 0.0, 0)?;
        }
        for &p in &g.p_circ {
            ModelParams::new(0.0, p, 0.5, 0.0, 0)?;
        }
        for &p in &g.p_bullet {
            ModelParams::new(0.0, 0.5, p, 0.0, 0)?;
        }
        for &q in &g.q0 {
            ModelParams::new(0.0, 0.5, 0.5, q, 0)?;
        }
        if self.n == 0 || self.replicas == 0 {
            return Err(Error::config("n and replicas must be at least 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::config(format!("confidence {} must lie in (0, 1)", self.confidence)));
        }
        Ok(())
    }
}

/// Seed of the grid point with coordinates `c`.
pub fn point_seed(master: u64, c: [usize; 4]) -> u64 {
    let h = keyed(master, tag::SWEEP, c[0] as i64, c[1] as i64, c[2] as i64);
    keyed(h, tag::SWEEP, c[3] as i64, 0, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Positive,
    Negative,
    Inconclusive,
}

impl Phase {
    pub fn from_interval(ci: &Interval) -> Self {
        if ci.lo > 0.0 {
            Phase::Positive
        } else if ci.hi < 0.0 {
            Phase::Negative
        } else {
            Phase::Inconclusive
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Positive => "positive",
            Phase::Negative => "negative",
            Phase::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub rho: f64,
    pub p_circ: f64,
    pub p_bullet: f64,
    pub q0: f64,
    pub seed: u64,
    pub n: u64,
    pub v_hat: f64,
    pub ci: Interval,
    pub phase: Phase,
    pub replicas: u64,
}

pub fn classify_phase(row: &SweepRow) -> Phase {
    Phase::from_interval(&row.ci)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub config: SweepConfig,
    pub seed: u64,
    pub rows: usize,
    /// sha256 of the JSONL rows.
    pub rows_sha256: String,
    pub timestamp_unix: u64,
    pub wall_seconds: f64,
    /// Per grid point, in row order.
    pub point_wall_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub manifest: Manifest,
}

impl SweepResult {
    pub fn rows_jsonl(&self) -> Result<String> {
        rows_jsonl(&self.rows)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.rows_jsonl()?)?;
        Ok(())
    }

    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &self.manifest)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rho", "p_circ", "p_bullet", "q0", "v_hat", "ci_lo", "ci_hi", "phase", "replicas"])?;
        for r in &self.rows {
            w.write_record([
                r.rho.to_string(),
                r.p_circ.to_string(),
                r.p_bullet.to_string(),
                r.q0.to_string(),
                r.v_hat.to_string(),
                r.ci.lo.to_string(),
                r.ci.hi.to_string(),
                r.phase.as_str().to_string(),
                r.replicas.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows to `output` and the manifest to `output.manifest.json`.
    pub fn write_outputs(&self, output: &Path) -> Result<PathBuf> {
        self.write_jsonl(output)?;
        let manifest = manifest_path(output);
        self.write_manifest(&manifest)?;
        Ok(manifest)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn rows_jsonl(rows: &[SweepRow]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn rows_hash(rows: &[SweepRow]) -> Result<String> {
    Ok(hex::encode(Sha256::digest(rows_jsonl(rows)?.as_bytes())))
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let started = Instant::now();
    let grid = &config.grid;
    let timed: Vec<(SweepRow, f64)> = grid
        .coordinates()
        .into_par_iter()
        .enumerate()
        .map(|(index, c)| {
            let t0 = Instant::now();
            let (rho, p_circ, p_bullet, q0) = grid.values(c);
            let seed = point_seed(config.seed, c);
            let params = ModelParams::new(rho, p_circ, p_bullet, q0, seed)?;
            let est = estimate_speed(&params, config.n, config.replicas, config.confidence)?;
            let row = SweepRow {
                index,
                rho,
                p_circ,
                p_bullet,
                q0,
                seed,
                n: config.n,
                v_hat: est.v_hat,
                ci: est.ci,
                phase: Phase::from_interval(&est.ci),
                replicas: est.replicas,
            };
            Ok((row, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (rows, point_wall_seconds): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.to_string(),
        config: config.clone(),
        seed: config.seed,
        rows: rows.len(),
        rows_sha256: rows_hash(&rows)?,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        wall_seconds: started.elapsed().as_secs_f64(),
        point_wall_seconds,
    };
    Ok(SweepResult { rows, manifest })
}

/// Runs the sweep on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(config: &SweepConfig, workers: usize) -> Result<SweepResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}
