//! The three centralized-training/decentralized-execution learners and
//! their shared machinery: prioritized replay, on-policy rollouts, and
//! the discrete action grid.
//!
//! All learners consume the same global observation vector. MADQN shares
//! one Q-network across drones; MAPPO and MADDPG keep one actor per drone
//! with a centralized critic. The scalar reward is shared by all agents.

pub mod action_grid;
pub mod checkpoint;
pub mod maddpg;
pub mod madqn;
pub mod mappo;
pub mod replay;
mod sum_tree;

pub use action_grid::ActionGrid;
pub use maddpg::{MaddpgAgent, Transition};
pub use madqn::{DqnTransition, MadqnAgent};
pub use mappo::{clip_surrogate, ActStep, MappoAgent, MappoLosses};
pub use replay::{compute_advantages, Advantages, ReplayBuffer, RolloutBuffer, RolloutStep};

use crate::config::ScenarioConfig;
use crate::error::SimError;
use crate::observation::ObsLayout;
use crate::rng::Stream;
use crate::world::JointAction;

/// Fixed per-entry input scaling applied by every learner before its
/// networks. The observation contract stays raw; this is conditioning
/// inside the agents so grid coordinates, percentages, user counts and
/// Mbps-scale metrics land on comparable magnitudes.
pub fn observation_scales(config: &ScenarioConfig) -> Vec<f64> {
    let layout = ObsLayout::new(config.n_drones);
    let mut scales = vec![1.0; layout.len()];
    for i in layout.positions() {
        scales[i] = 1.0 / config.grid_extent.max(1.0);
    }
    for i in layout.batteries() {
        scales[i] = 1.0 / 100.0;
    }
    let count_caps = [
        config.users_a.max.max(1) as f64,
        config.users_b.max.max(1) as f64,
        config.users_c.max.max(1) as f64,
    ];
    for (k, i) in layout.counts().enumerate() {
        scales[i] = 1.0 / count_caps[k];
    }
    for i in layout.velocities() {
        scales[i] = 1.0 / config.v_max.max(1e-9);
    }
    // QoS block: latency in [1, 40] ms, throughput on the order of the
    // class targets, SINR tens of dB.
    let qos_start = layout.qos().start;
    for (k, i) in layout.qos().enumerate() {
        let _ = qos_start;
        scales[i] = match k % 3 {
            0 => 1.0 / 40.0,
            1 => 1.0 / 1000.0,
            _ => 1.0 / 40.0,
        };
    }
    scales
}

pub(crate) fn apply_scale(obs: &[f64], scale: &[f64]) -> Vec<f64> {
    debug_assert_eq!(obs.len(), scale.len());
    obs.iter().zip(scale).map(|(x, s)| x * s).collect()
}

/// Which learner drives the fleet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Mappo,
    Maddpg,
    Madqn,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Mappo => "mappo",
            Algo::Maddpg => "maddpg",
            Algo::Madqn => "madqn",
        }
    }
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mappo" => Ok(Algo::Mappo),
            "maddpg" => Ok(Algo::Maddpg),
            "madqn" => Ok(Algo::Madqn),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// One learner with everything it owns: networks, targets, optimizer
/// state, exploration state, and experience storage.
#[derive(Clone, Debug)]
pub enum AgentBundle {
    Mappo(MappoAgent),
    Maddpg(MaddpgAgent),
    Madqn(MadqnAgent),
}

impl AgentBundle {
    /// Build a fresh bundle for a scenario, drawing initial parameters
    /// from `rng`.
    pub fn new(algo: Algo, config: &ScenarioConfig, rng: &mut Stream) -> Self {
        let obs_dim = config.observation_dim();
        let n = config.n_drones;
        let v_max = config.v_max;
        let scales = observation_scales(config);
        match algo {
            Algo::Mappo => AgentBundle::Mappo(MappoAgent::new(
                obs_dim,
                n,
                v_max,
                scales,
                config.agents.mappo.clone(),
                rng,
            )),
            Algo::Maddpg => AgentBundle::Maddpg(MaddpgAgent::new(
                obs_dim,
                n,
                v_max,
                scales,
                config.agents.maddpg.clone(),
                rng,
            )),
            Algo::Madqn => AgentBundle::Madqn(MadqnAgent::new(
                obs_dim,
                n,
                v_max,
                scales,
                config.agents.madqn.clone(),
                rng,
            )),
        }
    }

    pub fn algo(&self) -> Algo {
        match self {
            AgentBundle::Mappo(_) => Algo::Mappo,
            AgentBundle::Maddpg(_) => Algo::Maddpg,
            AgentBundle::Madqn(_) => Algo::Madqn,
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            AgentBundle::Mappo(a) => a.obs_dim,
            AgentBundle::Maddpg(a) => a.obs_dim,
            AgentBundle::Madqn(a) => a.obs_dim,
        }
    }

    pub fn n_drones(&self) -> usize {
        match self {
            AgentBundle::Mappo(a) => a.n_drones,
            AgentBundle::Maddpg(a) => a.n_drones,
            AgentBundle::Madqn(a) => a.n_drones,
        }
    }

    /// Deterministic evaluation action: epsilon off, mean action.
    pub fn act_greedy(&self, obs: &[f64]) -> Result<JointAction, SimError> {
        match self {
            AgentBundle::Mappo(a) => a.act_greedy(obs),
            AgentBundle::Maddpg(a) => a.act_greedy(obs),
            AgentBundle::Madqn(a) => {
                let idx = a.act_greedy(obs)?;
                Ok(a.joint_action(&idx))
            }
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), SimError> {
        checkpoint::save_bundle(path, self)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        checkpoint::load_bundle(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, ScenarioKind};

    #[test]
    fn bundle_dimensions_follow_scenario() {
        let mut config = ScenarioConfig::preset(ScenarioKind::Rural);
        config.n_drones = 3;
        let mut rng = Stream::from_seed(1);
        for algo in [Algo::Mappo, Algo::Maddpg, Algo::Madqn] {
            let bundle = AgentBundle::new(algo, &config, &mut rng);
            assert_eq!(bundle.obs_dim(), 30);
            assert_eq!(bundle.n_drones(), 3);
            let obs = vec![0.0; 30];
            let action = bundle.act_greedy(&obs).unwrap();
            assert_eq!(action.0.len(), 3);
        }
    }

    #[test]
    fn table_hyperparameters_reach_agents() {
        let config = ScenarioConfig::preset(ScenarioKind::Urban);
        let mut rng = Stream::from_seed(2);
        let AgentBundle::Madqn(dqn) = AgentBundle::new(Algo::Madqn, &config, &mut rng) else {
            unreachable!()
        };
        assert_eq!(dqn.params.gamma, 0.01);
        assert_eq!(dqn.params.tau, 0.01);
        assert_eq!(dqn.buffer.capacity(), 50_000);
        assert_eq!(dqn.grid.size(), 27);
        let AgentBundle::Maddpg(ddpg) = AgentBundle::new(Algo::Maddpg, &config, &mut rng) else {
            unreachable!()
        };
        assert_eq!(ddpg.params.gamma, 1.0);
        assert_eq!(ddpg.params.epsilon, 0.1);
        let AgentBundle::Mappo(ppo) = AgentBundle::new(Algo::Mappo, &config, &mut rng) else {
            unreachable!()
        };
        assert_eq!(ppo.params.gamma, 0.99);
        assert_eq!(ppo.params.clip, 0.2);
        assert_eq!(ppo.params.tau, 0.005);
    }
}
