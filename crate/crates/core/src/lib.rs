//! Random walk in a dynamic random environment of lazy simple random walks.

pub mod env;
pub mod estimators;
pub mod error;
pub mod io;
pub mod infection;
pub mod oracle;
pub mod particles;
pub mod regeneration;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod verify;
pub mod walker;

pub use env::{
    EnvironmentWindow, Environment, InitialConfig, ModelParams, ParticleId, SpaceTimeBox, SpaceTimePoint, Trajectory,
    UniformField,
};
pub use error::{Error, Result};
pub use infection::{compare_walker_front, run_infection, DominationReport, FrontPath, InfectionRun, InfectionState};
pub use walker::{
    coupling_report, find_empty_interval, run_ghost, run_walker, CouplingReport, EmptyIntervalScan, GhostPath,
    LatticePath, WalkerPath,
};
pub use estimators::{estimate_speed, regenerative_estimates, RegenerativeOptions, RegenerativeReport, SpeedEstimate};
pub use oracle::{exact_pmf_poisson, exact_walker_pmf, ExactPmf};
pub use regeneration::{ConeSlope, RegenerationConfig, RegenerationOutcome, RegenerationScan};
pub use sweep::{run_sweep, Phase, SweepConfig, SweepResult, SweepRow};
