//! Cones, record times, influence fields, good record times and regeneration
//! detection.

pub mod cone;
pub mod detect;
pub mod grt;
pub mod influence;
pub mod records;

pub use cone::{cone_classify, ConeProfile, ConeSide, ConeSlope, ConeSpec, TrajectoryClass};
pub use detect::{
    chain_regenerations, detect_regeneration, RecordDiagnostic, RegenerationChain, RegenerationConfig,
    RegenerationOutcome, RegenerationScan,
};
pub use grt::{is_good_record_time, GrtConfig, GrtReport, RunContext};
pub use influence::{
    influence_field, influence_field_in, local_influence_field_in, InfluenceFieldSample, ProfiledWindow,
};
pub use records::{kappa, record_times, ExitReport, Parallelogram, ParallelogramRow, RecordSequence};
