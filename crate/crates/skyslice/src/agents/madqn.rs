//! Value-based learner over the discretized action grid.
//!
//! One Q-network is shared by all drones (parameter sharing): it maps the
//! global observation to one head per drone, and each drone's discrete
//! action is the argmax of its own head. Heads use a dueling split — a
//! scalar state-value stream plus `grid.size()` mean-centered advantages
//! — so the shared-reward offset (which can be enormous next to the
//! per-action differences) lands in the value stream instead of drowning
//! the action ranking. Exploration is epsilon-greedy with a per-episode
//! multiplicative decay onto a floor. Learning draws prioritized batches,
//! regresses each head onto its own one-step TD target against the
//! target network under a Huber loss, refreshes priorities from the TD
//! magnitudes, and soft-updates the target.

use super::action_grid::ActionGrid;
use super::replay::{ReplayBuffer, PRIORITY_EPS};
use super::apply_scale;
use crate::config::MadqnParams;
use crate::error::SimError;
use crate::nn::{soft_update, Activation, Adam, Gradients, Network};
use crate::rng::Stream;
use crate::world::JointAction;

/// TD-error gradient clip: errors beyond this magnitude (the reward's
/// sharp energy edge reaches 1e5) contribute a bounded gradient so one
/// extreme transition cannot wreck the regression on ordinary ones.
const TD_CLIP: f64 = 1000.0;

/// One stored interaction. Actions are grid indices, one per drone.
#[derive(Clone, Debug)]
pub struct DqnTransition {
    pub obs: Vec<f64>,
    pub action_indices: Vec<usize>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct MadqnAgent {
    pub params: MadqnParams,
    pub n_drones: usize,
    pub obs_dim: usize,
    pub obs_scale: Vec<f64>,
    pub grid: ActionGrid,
    pub q: Network,
    pub q_target: Network,
    pub optimizer: Adam,
    pub epsilon: f64,
    pub buffer: ReplayBuffer<DqnTransition>,
    pub learn_calls: u64,
}

impl MadqnAgent {
    pub fn new(
        obs_dim: usize,
        n_drones: usize,
        v_max: f64,
        obs_scale: Vec<f64>,
        params: MadqnParams,
        rng: &mut Stream,
    ) -> Self {
        let grid = ActionGrid::symmetric3(v_max, params.points_per_dim);
        // Per drone: one value output plus grid.size() advantage outputs.
        let sizes = [
            obs_dim,
            params.hidden[0],
            params.hidden[1],
            n_drones * (1 + grid.size()),
        ];
        let q = Network::mlp(&sizes, Activation::Relu, Activation::Linear, rng);
        let q_target = q.clone();
        let optimizer = Adam::new(&q, params.learning_rate);
        let buffer = ReplayBuffer::new(
            params.buffer_size,
            params.priority_alpha,
            params.beta0,
            params.beta_anneal_steps,
        );
        let epsilon = params.epsilon_start;
        Self {
            params,
            n_drones,
            obs_dim,
            obs_scale,
            grid,
            q,
            q_target,
            optimizer,
            epsilon,
            buffer,
            learn_calls: 0,
        }
    }

    fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        apply_scale(obs, &self.obs_scale)
    }

    /// Action values of one drone's dueling head:
    /// `q(a) = value + advantage(a) - mean(advantage)`.
    pub fn head_q(&self, raw: &[f64], drone: usize) -> Vec<f64> {
        let g = self.grid.size();
        let base = drone * (1 + g);
        let value = raw[base];
        let adv = &raw[base + 1..base + 1 + g];
        let mean = adv.iter().sum::<f64>() / g as f64;
        adv.iter().map(|a| value + a - mean).collect()
    }

    fn argmax(head: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in head.iter().enumerate() {
            if *v > head[best] {
                best = i;
            }
        }
        best
    }

    /// Epsilon-greedy per-drone action indices.
    pub fn act(&self, obs: &[f64], rng: &mut Stream) -> Result<Vec<usize>, SimError> {
        let raw = self.q.infer(&self.scaled(obs))?;
        let mut out = Vec::with_capacity(self.n_drones);
        for drone in 0..self.n_drones {
            let idx = if rng.uniform() < self.epsilon {
                rng.uniform_usize(self.grid.size())
            } else {
                Self::argmax(&self.head_q(&raw, drone))
            };
            out.push(idx);
        }
        Ok(out)
    }

    /// Greedy action indices (evaluation policy).
    pub fn act_greedy(&self, obs: &[f64]) -> Result<Vec<usize>, SimError> {
        let raw = self.q.infer(&self.scaled(obs))?;
        Ok((0..self.n_drones)
            .map(|d| Self::argmax(&self.head_q(&raw, d)))
            .collect())
    }

    /// Decode indices into the joint displacement command.
    pub fn joint_action(&self, indices: &[usize]) -> JointAction {
        JointAction(
            indices
                .iter()
                .map(|&i| {
                    let v = self.grid.vector(i);
                    [v[0], v[1], v[2]]
                })
                .collect(),
        )
    }

    pub fn record(&mut self, transition: DqnTransition) {
        self.buffer.push(transition);
    }

    /// Per-episode exploration decay onto the floor.
    pub fn end_episode(&mut self) {
        self.epsilon = (self.params.epsilon_decay * self.epsilon).max(self.params.epsilon_min);
    }

    /// One prioritized TD update. Returns `None` while the buffer holds
    /// fewer than one batch.
    pub fn learn(&mut self, rng: &mut Stream) -> Result<Option<f64>, SimError> {
        let batch_size = self.params.batch_size;
        let Some(batch) = self.buffer.sample(batch_size, rng) else {
            return Ok(None);
        };
        let g = self.grid.size();
        let gamma = self.params.gamma;
        let out_dim = self.q.output_dim();
        let mut grads = Gradients::zeros_like(&self.q);
        let mut new_priorities = Vec::with_capacity(batch_size);
        let mut loss_acc = 0.0;
        let scale = 1.0 / (batch_size * self.n_drones) as f64;
        for (slot, &idx) in batch.indices.iter().enumerate() {
            let weight = batch.weights[slot];
            let item = self.buffer.get(idx).clone();
            let (raw_now, cache) = self.q.forward(&self.scaled(&item.obs))?;
            let raw_next = self.q_target.infer(&self.scaled(&item.next_obs))?;
            let mut output_grad = vec![0.0; out_dim];
            let mut td_sum = 0.0;
            for drone in 0..self.n_drones {
                let q_next = self.head_q(&raw_next, drone);
                let best_next = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let not_done = if item.done { 0.0 } else { 1.0 };
                let target = item.reward + gamma * not_done * best_next;
                let taken = item.action_indices[drone];
                let q_now = self.head_q(&raw_now, drone);
                let td = q_now[taken] - target;
                td_sum += td.abs();
                // Huber regression: quadratic within TD_CLIP, linear
                // beyond, so the gradient magnitude stays bounded.
                let clipped = td.clamp(-TD_CLIP, TD_CLIP);
                loss_acc += weight * (clipped * (td - 0.5 * clipped)) * scale;
                // Chain through the dueling split: q = v + a_t - mean(a).
                let gval = weight * clipped * scale;
                let base = drone * (1 + g);
                output_grad[base] += gval;
                for j in 0..g {
                    let indicator = if j == taken { 1.0 } else { 0.0 };
                    output_grad[base + 1 + j] += gval * (indicator - 1.0 / g as f64);
                }
            }
            let (item_grads, _) = self.q.backward(&cache, &output_grad)?;
            grads.add(&item_grads);
            new_priorities.push(td_sum / self.n_drones as f64 + PRIORITY_EPS);
        }
        self.buffer
            .update_priorities(&batch.indices, &new_priorities);
        self.optimizer.step(&mut self.q, &grads)?;
        soft_update(&mut self.q_target, &self.q, self.params.tau)?;
        self.learn_calls += 1;
        Ok(Some(loss_acc))
    }
}
