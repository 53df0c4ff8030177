//! Deterministic actor-critic learner with a centralized critic.
//!
//! Each drone owns a deterministic actor mapping the global observation to
//! a bounded displacement. A single centralized critic scores the
//! observation together with the joint action of all drones, so its input
//! width is `obs_dim + 3 * n_drones`. Exploration replaces an actor's
//! output with a uniform draw from the velocity box at rate epsilon.
//! Learning regresses the critic on one-step TD targets built from the
//! target networks, ascends each actor along the critic's action
//! gradient, and soft-updates all targets.

use super::apply_scale;
use super::replay::{ReplayBuffer, PRIORITY_EPS};
use crate::config::MaddpgParams;
use crate::error::SimError;
use crate::nn::{soft_update, Activation, Adam, Gradients, Network};
use crate::rng::Stream;
use crate::world::JointAction;

/// TD-error gradient clip for the critic regression; the reward's sharp
/// energy edge produces 1e5-scale targets that must not dominate.
const TD_CLIP: f64 = 10.0;

/// One stored interaction; `actions` is the flattened joint command.
#[derive(Clone, Debug)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct MaddpgAgent {
    pub params: MaddpgParams,
    pub n_drones: usize,
    pub obs_dim: usize,
    pub v_max: f64,
    pub obs_scale: Vec<f64>,
    pub actors: Vec<Network>,
    pub actor_targets: Vec<Network>,
    pub critic: Network,
    pub critic_target: Network,
    pub actor_opts: Vec<Adam>,
    pub critic_opt: Adam,
    pub buffer: ReplayBuffer<Transition>,
    pub learn_calls: u64,
}

impl MaddpgAgent {
    pub fn new(
        obs_dim: usize,
        n_drones: usize,
        v_max: f64,
        obs_scale: Vec<f64>,
        params: MaddpgParams,
        rng: &mut Stream,
    ) -> Self {
        let actor_sizes = [obs_dim, params.hidden[0], params.hidden[1], 3];
        let actors: Vec<Network> = (0..n_drones)
            .map(|_| Network::mlp(&actor_sizes, Activation::Relu, Activation::Tanh, rng))
            .collect();
        let actor_targets = actors.clone();
        let critic_sizes = [
            obs_dim + 3 * n_drones,
            params.hidden[0],
            params.hidden[1],
            1,
        ];
        let critic = Network::mlp(&critic_sizes, Activation::Relu, Activation::Linear, rng);
        let critic_target = critic.clone();
        let actor_opts = actors
            .iter()
            .map(|a| Adam::new(a, params.learning_rate))
            .collect();
        let critic_opt = Adam::new(&critic, params.learning_rate);
        let buffer = ReplayBuffer::new(
            params.buffer_size,
            params.priority_alpha,
            params.beta0,
            params.beta_anneal_steps,
        );
        Self {
            params,
            n_drones,
            obs_dim,
            v_max,
            obs_scale,
            actors,
            actor_targets,
            critic,
            critic_target,
            actor_opts,
            critic_opt,
            buffer,
            learn_calls: 0,
        }
    }

    pub fn critic_input_dim(&self) -> usize {
        self.obs_dim + 3 * self.n_drones
    }

    fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        apply_scale(obs, &self.obs_scale)
    }

    /// Critic input: scaled observation followed by the joint action
    /// normalized to the velocity bound.
    fn critic_input(&self, obs_scaled: &[f64], actions: &[f64]) -> Vec<f64> {
        let mut input = obs_scaled.to_vec();
        input.extend(actions.iter().map(|a| a / self.v_max));
        input
    }

    fn actor_action(net: &Network, obs_scaled: &[f64], v_max: f64) -> Result<[f64; 3], SimError> {
        let y = net.infer(obs_scaled)?;
        Ok([v_max * y[0], v_max * y[1], v_max * y[2]])
    }

    /// Epsilon-greedy around the deterministic actors: with rate epsilon a
    /// drone's command is drawn uniformly from the velocity box.
    pub fn act(&self, obs: &[f64], rng: &mut Stream) -> Result<JointAction, SimError> {
        let scaled = self.scaled(obs);
        let mut out = Vec::with_capacity(self.n_drones);
        for actor in &self.actors {
            let a = if rng.uniform() < self.params.epsilon {
                [
                    rng.uniform_range(-self.v_max, self.v_max),
                    rng.uniform_range(-self.v_max, self.v_max),
                    rng.uniform_range(-self.v_max, self.v_max),
                ]
            } else {
                Self::actor_action(actor, &scaled, self.v_max)?
            };
            out.push(a);
        }
        Ok(JointAction(out))
    }

    pub fn act_greedy(&self, obs: &[f64]) -> Result<JointAction, SimError> {
        let scaled = self.scaled(obs);
        let mut out = Vec::with_capacity(self.n_drones);
        for actor in &self.actors {
            out.push(Self::actor_action(actor, &scaled, self.v_max)?);
        }
        Ok(JointAction(out))
    }

    pub fn record(&mut self, transition: Transition) {
        self.buffer.push(transition);
    }

    /// Joint action of the target actors for a next-state observation.
    fn target_joint_action(&self, obs_scaled: &[f64]) -> Result<Vec<f64>, SimError> {
        let mut joint = Vec::with_capacity(3 * self.n_drones);
        for target in &self.actor_targets {
            let a = Self::actor_action(target, obs_scaled, self.v_max)?;
            joint.extend_from_slice(&a);
        }
        Ok(joint)
    }

    /// One prioritized actor-critic update. Returns `None` while the
    /// buffer holds fewer than one batch.
    pub fn learn(&mut self, rng: &mut Stream) -> Result<Option<(f64, f64)>, SimError> {
        let batch_size = self.params.batch_size;
        let Some(batch) = self.buffer.sample(batch_size, rng) else {
            return Ok(None);
        };
        let gamma = self.params.gamma;
        let scale = 1.0 / batch_size as f64;

        // Critic regression toward one-step TD targets.
        let mut critic_grads = Gradients::zeros_like(&self.critic);
        let mut new_priorities = Vec::with_capacity(batch_size);
        let mut critic_loss = 0.0;
        for (slot, &idx) in batch.indices.iter().enumerate() {
            let weight = batch.weights[slot];
            let item = self.buffer.get(idx).clone();
            let next_scaled = self.scaled(&item.next_obs);
            let next_joint = self.target_joint_action(&next_scaled)?;
            let next_input = self.critic_input(&next_scaled, &next_joint);
            let q_next = self.critic_target.infer(&next_input)?[0];
            let not_done = if item.done { 0.0 } else { 1.0 };
            let target = item.reward + gamma * not_done * q_next;

            let obs_scaled = self.scaled(&item.obs);
            let input = self.critic_input(&obs_scaled, &item.actions);
            let (q, cache) = self.critic.forward(&input)?;
            let td = q[0] - target;
            // Huber regression keeps the sharp-edge transitions bounded.
            let clipped = td.clamp(-TD_CLIP, TD_CLIP);
            critic_loss += weight * (clipped * (td - 0.5 * clipped)) * scale;
            let (g, _) = self.critic.backward(&cache, &[weight * clipped * scale])?;
            critic_grads.add(&g);
            new_priorities.push(td.abs() + PRIORITY_EPS);
        }
        self.buffer
            .update_priorities(&batch.indices, &new_priorities);
        self.critic_opt.step(&mut self.critic, &critic_grads)?;

        // Actor ascent along the critic's action gradient, one drone at a
        // time, with the other drones' actions taken from the buffer.
        let mut actor_loss = 0.0;
        for drone in 0..self.n_drones {
            let mut grads = Gradients::zeros_like(&self.actors[drone]);
            for &idx in &batch.indices {
                let item = self.buffer.get(idx).clone();
                let obs_scaled = self.scaled(&item.obs);
                let (y, actor_cache) = self.actors[drone].forward(&obs_scaled)?;
                let mut input = self.critic_input(&obs_scaled, &item.actions);
                // The critic sees actions normalized by v_max, so the
                // actor's tanh output feeds in directly.
                for d in 0..3 {
                    input[self.obs_dim + 3 * drone + d] = y[d];
                }
                let (q, critic_cache) = self.critic.forward(&input)?;
                actor_loss -= q[0] * scale;
                // d(-q)/d(critic input), sliced at this drone's action.
                let (_, dinput) = self.critic.backward(&critic_cache, &[-scale])?;
                let dy: Vec<f64> = (0..3)
                    .map(|d| dinput[self.obs_dim + 3 * drone + d])
                    .collect();
                let (g, _) = self.actors[drone].backward(&actor_cache, &dy)?;
                grads.add(&g);
            }
            self.actor_opts[drone].step(&mut self.actors[drone], &grads)?;
        }

        for drone in 0..self.n_drones {
            soft_update(
                &mut self.actor_targets[drone],
                &self.actors[drone],
                self.params.tau,
            )?;
        }
        soft_update(&mut self.critic_target, &self.critic, self.params.tau)?;
        self.learn_calls += 1;
        Ok(Some((critic_loss, actor_loss)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MaddpgParams;

    fn small_agent(seed: u64) -> MaddpgAgent {
        let params = MaddpgParams {
            hidden: [16, 16],
            batch_size: 8,
            buffer_size: 64,
            ..MaddpgParams::default()
        };
        let mut rng = Stream::from_seed(seed);
        MaddpgAgent::new(6, 2, 1.0, vec![1.0; 6], params, &mut rng)
    }

    #[test]
    fn critic_width_matches_fleet() {
        let agent = small_agent(1);
        assert_eq!(agent.critic_input_dim(), 6 + 3 * 2);
        assert_eq!(agent.critic.input_dim(), 12);
        // The headline fleet: 36-dim observation, 4 drones.
        let mut rng = Stream::from_seed(2);
        let big = MaddpgAgent::new(36, 4, 1.0, vec![1.0; 36], MaddpgParams::default(), &mut rng);
        assert_eq!(big.critic.input_dim(), 48);
    }

    #[test]
    fn greedy_matches_act_without_exploration() {
        let mut agent = small_agent(3);
        agent.params.epsilon = 0.0;
        let obs = vec![0.2, -0.4, 0.6, 0.0, 0.1, -0.1];
        let mut rng = Stream::from_seed(4);
        assert_eq!(
            agent.act(&obs, &mut rng).unwrap(),
            agent.act_greedy(&obs).unwrap()
        );
    }

    #[test]
    fn actions_stay_inside_velocity_box() {
        let agent = small_agent(5);
        let mut rng = Stream::from_seed(6);
        for trial in 0..200 {
            let obs: Vec<f64> = (0..6).map(|i| ((trial * 7 + i) as f64).sin() * 3.0).collect();
            for a in agent.act(&obs, &mut rng).unwrap().0 {
                for x in a {
                    assert!((-1.0..=1.0).contains(&x), "component {x}");
                }
            }
        }
    }

    #[test]
    fn full_exploration_matches_uniform_moments() {
        let mut agent = small_agent(7);
        agent.params.epsilon = 1.0;
        let obs = vec![0.0; 6];
        let mut rng = Stream::from_seed(8);
        let n = 10_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let a = agent.act(&obs, &mut rng).unwrap();
            let x = a.0[0][0];
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        // Uniform on [-1, 1]: mean 0, variance 1/3.
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn terminal_transitions_use_pure_reward_target() {
        let mut agent = small_agent(9);
        // All-done transitions: the critic must regress toward the reward
        // alone regardless of gamma.
        for i in 0..16 {
            agent.record(Transition {
                obs: vec![0.1 * i as f64; 6],
                actions: vec![0.0; 6],
                reward: 3.0,
                next_obs: vec![0.0; 6],
                done: true,
            });
        }
        let mut rng = Stream::from_seed(10);
        for _ in 0..300 {
            agent.learn(&mut rng).unwrap().unwrap();
        }
        let mut input = vec![0.1 * 4.0; 6];
        input.extend_from_slice(&[0.0; 6]);
        let q = agent.critic.infer(&input).unwrap()[0];
        assert!((q - 3.0).abs() < 0.5, "critic value {q} should approach 3");
    }

    #[test]
    fn learn_is_noop_until_batch_available() {
        let mut agent = small_agent(11);
        let mut rng = Stream::from_seed(12);
        assert!(agent.learn(&mut rng).unwrap().is_none());
    }

    #[test]
    fn targets_move_a_tau_fraction() {
        let mut agent = small_agent(13);
        for i in 0..8 {
            agent.record(Transition {
                obs: vec![0.05 * i as f64; 6],
                actions: vec![0.1; 6],
                reward: 1.0,
                next_obs: vec![0.05 * i as f64 + 0.01; 6],
                done: false,
            });
        }
        let online_before = agent.critic.clone();
        let target_before = agent.critic_target.clone();
        let mut rng = Stream::from_seed(14);
        agent.learn(&mut rng).unwrap().unwrap();
        // target_after = tau * online_after + (1 - tau) * target_before.
        let tau = agent.params.tau;
        for (l, layer) in agent.critic_target.layers.iter().enumerate() {
            for (i, w) in layer.weights.iter().enumerate() {
                let expect = tau * agent.critic.layers[l].weights[i]
                    + (1.0 - tau) * target_before.layers[l].weights[i];
                assert!((w - expect).abs() < 1e-12);
            }
        }
        assert_ne!(agent.critic, online_before);
    }
}
