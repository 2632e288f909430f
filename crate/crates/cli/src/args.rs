use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rwdre_core::io::Format;
use rwdre_core::{Error, InitialConfig, ModelParams, Result};

#[derive(Debug, Parser)]
#[command(name = "rwdre", version, about = "Random walk in a dynamic environment of lazy random walks")]
pub struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// JSON file with option values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walker path from the origin.
    Simulate(SimulateArgs),
    /// Ghost walker and the walker/ghost coupling report.
    Ghost(GhostArgs),
    /// Infection front and its comparison with the walker.
    Infection(InfectionArgs),
    /// Regeneration detection, or regenerative estimates over replicas.
    Regen(RegenArgs),
    /// Exact law of X_n for small n.
    Oracle(OracleArgs),
    /// Parameter-grid sweep of the speed.
    Sweep(SweepArgs),
    /// Pathwise invariant suites and oracle cross-checks.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Ghost(_) => "ghost",
            Command::Infection(_) => "infection",
            Command::Regen(_) => "regen",
            Command::Oracle(_) => "oracle",
            Command::Sweep(_) => "sweep",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub p_circ: Option<f64>,
    #[arg(long)]
    pub p_bullet: Option<f64>,
    #[arg(long)]
    pub q0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Fixed initial configuration as comma-separated sites (repeats allowed)
    /// instead of the Poisson draw.
    #[arg(long)]
    pub sites: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GhostArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Anchor site (even).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<i64>,
    /// Anchor time.
    #[arg(long)]
    pub t: Option<i64>,
    /// Also scan for 4ℓ + 1 empty sites left of the origin.
    #[arg(long)]
    pub ell: Option<u64>,
    #[arg(long)]
    pub sites: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InfectionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub sites: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RegenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub v_star: Option<f64>,
    /// Walker steps T.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Cone-stay requirement H.
    #[arg(long)]
    pub post_window: Option<u64>,
    /// With more than one replica, chain regenerations and estimate the speed.
    #[arg(long)]
    pub replicas: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub sites: Option<String>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Steps per replica.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    /// JSONL rows; the manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV export.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// 50 seeds instead of 500.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Option values from a config file. Keys mirror the flags with dashes
/// replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rho: Option<f64>,
    pub p_circ: Option<f64>,
    pub p_bullet: Option<f64>,
    pub q0: Option<f64>,
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub replicas: Option<u64>,
    pub horizon: Option<u64>,
    pub v_star: Option<f64>,
    pub ell: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub post_window: Option<u64>,
    pub sites: Option<String>,
    pub tail_tol: Option<f64>,
    pub x: Option<i64>,
    pub t: Option<i64>,
    pub quick: Option<bool>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    pub fn params(&self, m: &ModelArgs) -> Result<ModelParams> {
        ModelParams::new(
            m.rho.or(self.rho).unwrap_or(0.0),
            m.p_circ.or(self.p_circ).unwrap_or(0.5),
            m.p_bullet.or(self.p_bullet).unwrap_or(0.5),
            m.q0.or(self.q0).unwrap_or(0.0),
            m.seed.or(self.seed).unwrap_or(0),
        )
    }

    pub fn format(&self, o: &OutputArgs) -> Result<Format> {
        match o.format.as_ref().or(self.format.as_ref()) {
            Some(s) => s.parse(),
            None => Ok(Format::Csv),
        }
    }

    pub fn out(&self, o: &OutputArgs) -> Option<PathBuf> {
        o.out.clone().or_else(|| self.out.clone())
    }

    pub fn sites(&self, flag: &Option<String>) -> Result<Option<InitialConfig>> {
        flag.as_ref().or(self.sites.as_ref()).map(|s| parse_sites(s)).transpose()
    }
}

/// `"0,2,2"` → one particle at 0 and two at 2. The empty string is the empty
/// configuration.
pub fn parse_sites(s: &str) -> Result<InitialConfig> {
    let sites = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|e| Error::Config(format!("bad site {t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(InitialConfig::from_sites(sites))
}
