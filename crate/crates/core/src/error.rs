use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("particle ({z}, {i}) does not exist in this environment")]
    NonexistentParticle { z: i64, i: u32 },

    #[error("no initially infected particle on an even site in [0, {searched}]")]
    NoSeedInfection { searched: i64 },

    #[error(
        "state space guard exceeded: {particles} particles over {steps} steps \
         (~{estimate:.3e} joint states; limits K <= {max_particles}, n <= {max_steps})"
    )]
    StateSpace {
        particles: u32,
        steps: usize,
        estimate: f64,
        max_particles: u32,
        max_steps: usize,
    },

    #[error("insufficient regenerations: {found} completed cycles, need at least {needed}")]
    InsufficientRegenerations { found: usize, needed: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Configuration problems are the caller's fault; everything else is not.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::StateSpace { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
