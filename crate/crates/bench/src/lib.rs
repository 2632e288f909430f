//! Fixtures shared by the benchmarks in `benches/`.

use rwdre_core::{Environment, ModelParams};

/// Poisson environment with the given density and `p∘ = 0.9`, `p• = 0.3`.
pub fn env(rho: f64, seed: u64) -> Environment {
    Environment::poisson(ModelParams::new(rho, 0.9, 0.3, 0.0, seed).expect("valid")).expect("valid")
}

/// The impermeable setting used for the infection comparison.
pub fn blocking_env(seed: u64) -> Environment {
    Environment::poisson(ModelParams::new(1.0, 0.9, 0.0, 0.0, seed).expect("valid")).expect("valid")
}
