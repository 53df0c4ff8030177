//! Experiment harness: manifests, seeded training execution, evaluation
//! against built-in controls, and service-statistics export. The `skyslice`
//! binary in this crate exposes all of it on the command line.

pub mod eval;
pub mod manifest;
pub mod policy;
pub mod runner;
pub mod stats;
pub mod sysinfo;

use skyslice::config::{ClassRange, ScenarioConfig, ScenarioKind};

/// Desk-scale rural scenario for quick learning checks: two drones,
/// twenty users (10/6/4 across classes), 200-step episodes, and a faster
/// value-learning cadence.
pub fn reduced_rural() -> ScenarioConfig {
    let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
    config.n_drones = 2;
    config.max_steps = 200;
    config.users_a = ClassRange { min: 10, max: 10 };
    config.users_b = ClassRange { min: 6, max: 6 };
    config.users_c = ClassRange { min: 4, max: 4 };
    config.agents.madqn.train_every = 4;
    config
}
