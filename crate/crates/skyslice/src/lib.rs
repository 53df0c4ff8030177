//! Seed-reproducible multi-UAV 5G network-slicing simulator with three
//! centralized-training/decentralized-execution multi-agent RL learners.
//!
//! The crate models a fleet of drone base stations serving three user
//! priority classes on a bounded grid: an air-to-ground channel with
//! LoS/NLoS states, shadowing and Rician fading ([`channel`]); per-class
//! latency/throughput/SINR metrics and QoS scores ([`qos`]); an itemized
//! QoS-energy reward ledger ([`rewards`]); the world dynamics with
//! collision avoidance, battery management and a relocatable charging
//! station ([`world`]); a self-contained MLP/optimizer kit ([`nn`]); and
//! three learners — MAPPO, MADDPG and MADQN — sharing one global
//! observation ([`agents`]).
//!
//! Everything is deterministic under a seed: identical `(config, seed)`
//! pairs produce bit-identical trajectories.
//!
//! ```
//! use skyslice::config::ScenarioConfig;
//! use skyslice::world::{JointAction, WorldState};
//!
//! let config = ScenarioConfig::load("rural").unwrap();
//! let (mut world, obs) = WorldState::reset(&config, 7);
//! assert_eq!(obs.len(), 36);
//! let outcome = world.step(&config, &JointAction::zeros(config.n_drones)).unwrap();
//! assert!(outcome.reward.identities_hold(config.qos_weight, config.energy_weight));
//! ```

pub mod agents;
pub mod channel;
pub mod config;
pub mod error;
pub mod nn;
pub mod observation;
pub mod qos;
pub mod rewards;
pub mod rng;
pub mod world;

pub use config::{ScenarioConfig, ScenarioKind, UserClass};
pub use error::{ConfigError, SimError};
pub use observation::{ObsLayout, Observation};
pub use rewards::RewardBreakdown;
pub use world::{JointAction, StepOutcome, WorldState};

#[cfg(doctest)]
mod book;
