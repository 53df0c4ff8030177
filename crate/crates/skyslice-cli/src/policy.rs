//! Uniform facade over the three learners and the two built-in controls,
//! so one training loop drives them all.

use anyhow::Result;
use skyslice::agents::{
    ActStep, AgentBundle, Algo, DqnTransition, MaddpgAgent, MadqnAgent, MappoAgent, Transition,
};
use skyslice::config::ScenarioConfig;
use skyslice::rng::Stream;
use skyslice::world::{JointAction, StepOutcome};

/// Per-step context a policy may need when observing an outcome.
pub enum ActMeta {
    None,
    DqnIndices(Vec<usize>),
    PpoStep(ActStep),
}

pub enum Policy {
    Mappo(MappoAgent),
    Maddpg { agent: MaddpgAgent, step: usize },
    Madqn { agent: MadqnAgent, step: usize },
    Random { n_drones: usize, v_max: f64 },
    Hover { n_drones: usize },
}

impl Policy {
    pub fn new_learner(algo: Algo, config: &ScenarioConfig, rng: &mut Stream) -> Self {
        match AgentBundle::new(algo, config, rng) {
            AgentBundle::Mappo(a) => Policy::Mappo(a),
            AgentBundle::Maddpg(a) => Policy::Maddpg { agent: a, step: 0 },
            AgentBundle::Madqn(a) => Policy::Madqn { agent: a, step: 0 },
        }
    }

    pub fn from_bundle(bundle: AgentBundle) -> Self {
        match bundle {
            AgentBundle::Mappo(a) => Policy::Mappo(a),
            AgentBundle::Maddpg(a) => Policy::Maddpg { agent: a, step: 0 },
            AgentBundle::Madqn(a) => Policy::Madqn { agent: a, step: 0 },
        }
    }

    pub fn random(config: &ScenarioConfig) -> Self {
        Policy::Random {
            n_drones: config.n_drones,
            v_max: config.v_max,
        }
    }

    pub fn hover(config: &ScenarioConfig) -> Self {
        Policy::Hover {
            n_drones: config.n_drones,
        }
    }

    pub fn is_learner(&self) -> bool {
        matches!(
            self,
            Policy::Mappo(_) | Policy::Maddpg { .. } | Policy::Madqn { .. }
        )
    }

    /// Exploratory action for training.
    pub fn act(&mut self, obs: &[f64], rng: &mut Stream) -> Result<(JointAction, ActMeta)> {
        match self {
            Policy::Mappo(agent) => {
                let step = agent.act(obs, rng)?;
                Ok((step.action.clone(), ActMeta::PpoStep(step)))
            }
            Policy::Maddpg { agent, .. } => Ok((agent.act(obs, rng)?, ActMeta::None)),
            Policy::Madqn { agent, .. } => {
                let indices = agent.act(obs, rng)?;
                Ok((agent.joint_action(&indices), ActMeta::DqnIndices(indices)))
            }
            Policy::Random { n_drones, v_max } => {
                let action = JointAction(
                    (0..*n_drones)
                        .map(|_| {
                            [
                                rng.uniform_range(-*v_max, *v_max),
                                rng.uniform_range(-*v_max, *v_max),
                                rng.uniform_range(-*v_max, *v_max),
                            ]
                        })
                        .collect(),
                );
                Ok((action, ActMeta::None))
            }
            Policy::Hover { n_drones } => Ok((JointAction::zeros(*n_drones), ActMeta::None)),
        }
    }

    /// Deterministic action for evaluation.
    pub fn act_greedy(&self, obs: &[f64], rng: &mut Stream) -> Result<JointAction> {
        match self {
            Policy::Mappo(agent) => Ok(agent.act_greedy(obs)?),
            Policy::Maddpg { agent, .. } => Ok(agent.act_greedy(obs)?),
            Policy::Madqn { agent, .. } => {
                let indices = agent.act_greedy(obs)?;
                Ok(agent.joint_action(&indices))
            }
            Policy::Random { n_drones, v_max } => Ok(JointAction(
                (0..*n_drones)
                    .map(|_| {
                        [
                            rng.uniform_range(-*v_max, *v_max),
                            rng.uniform_range(-*v_max, *v_max),
                            rng.uniform_range(-*v_max, *v_max),
                        ]
                    })
                    .collect(),
            )),
            Policy::Hover { n_drones } => Ok(JointAction::zeros(*n_drones)),
        }
    }

    /// Feed back one transition; learners store it and update on their
    /// own cadence.
    pub fn observe(
        &mut self,
        prev_obs: &[f64],
        meta: ActMeta,
        action: &JointAction,
        outcome: &StepOutcome,
        rng: &mut Stream,
    ) -> Result<()> {
        match self {
            Policy::Mappo(agent) => {
                let ActMeta::PpoStep(step) = meta else {
                    anyhow::bail!("mappo observe without act metadata");
                };
                agent.record(prev_obs, &step, outcome.reward.total, outcome.done);
                if agent.ready() {
                    agent.update(outcome.observation.as_slice(), rng)?;
                }
            }
            Policy::Maddpg { agent, step } => {
                agent.record(Transition {
                    obs: prev_obs.to_vec(),
                    actions: action.flat(),
                    reward: outcome.reward.total,
                    next_obs: outcome.observation.as_slice().to_vec(),
                    done: outcome.done,
                });
                *step += 1;
                if *step % agent.params.train_every.max(1) == 0 {
                    agent.learn(rng)?;
                }
            }
            Policy::Madqn { agent, step } => {
                let ActMeta::DqnIndices(indices) = meta else {
                    anyhow::bail!("madqn observe without act metadata");
                };
                agent.record(DqnTransition {
                    obs: prev_obs.to_vec(),
                    action_indices: indices,
                    reward: outcome.reward.total,
                    next_obs: outcome.observation.as_slice().to_vec(),
                    done: outcome.done,
                });
                *step += 1;
                if *step % agent.params.train_every.max(1) == 0 {
                    agent.learn(rng)?;
                }
            }
            Policy::Random { .. } | Policy::Hover { .. } => {}
        }
        Ok(())
    }

    /// Episode-boundary bookkeeping (exploration decay).
    pub fn end_episode(&mut self) {
        if let Policy::Madqn { agent, .. } = self {
            agent.end_episode();
        }
    }

    /// Snapshot into a checkpointable bundle, if this policy learns.
    pub fn to_bundle(&self) -> Option<AgentBundle> {
        match self {
            Policy::Mappo(a) => {
                let mut a = a.clone();
                // Rollouts never cross a checkpoint boundary.
                a.rollout.clear(a.policy_version);
                Some(AgentBundle::Mappo(a))
            }
            Policy::Maddpg { agent, .. } => Some(AgentBundle::Maddpg(agent.clone())),
            Policy::Madqn { agent, .. } => Some(AgentBundle::Madqn(agent.clone())),
            Policy::Random { .. } | Policy::Hover { .. } => None,
        }
    }
}
