//! On-policy actor-critic learner with a clipped surrogate objective.
//!
//! Each drone owns a stochastic Gaussian policy head over the shared
//! global observation: the actor emits a mean and a per-dimension
//! log-spread, the sample is squashed through `tanh` and scaled to the
//! velocity bound, and the log-probability carries the squash correction.
//! A single centralized critic provides state values for generalized
//! advantage estimation. Updates run several epochs of minibatch ascent
//! on the clipped surrogate with a value loss and an entropy bonus, then
//! discard the rollout — storage is never reused across policy versions.

use super::apply_scale;
use super::replay::{compute_advantages, RolloutBuffer, RolloutStep};
use crate::config::MappoParams;
use crate::error::SimError;
use crate::nn::{Activation, Adam, Gradients, Network};
use crate::rng::Stream;
use crate::world::JointAction;

const LOG_STD_MIN: f64 = -5.0;
const LOG_STD_MAX: f64 = 2.0;
const LOG_TAU: f64 = 1.8378770664093453; // ln(2*pi)
/// Value-error gradient clip; returns near the reward's sharp energy
/// edge reach 1e5 and must not dominate the critic regression.
const VALUE_CLIP: f64 = 10.0;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(1 - tanh(z)^2)` without catastrophic cancellation.
fn log_one_minus_tanh_sq(z: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - z - softplus(-2.0 * z))
}

/// Clipped surrogate and its derivative with respect to the ratio.
///
/// The surrogate is `min(ratio * adv, clamp(ratio, 1-clip, 1+clip) * adv)`;
/// when the clamped branch is active and the ratio sits outside the band,
/// the derivative is zero.
pub fn clip_surrogate(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let banded = ratio.clamp(1.0 - clip, 1.0 + clip);
    let clipped = banded * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else if (1.0 - clip..=1.0 + clip).contains(&ratio) {
        (clipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// What `act` hands back for one step.
#[derive(Clone, Debug)]
pub struct ActStep {
    pub action: JointAction,
    /// Pre-squash Gaussian samples, flattened per drone.
    pub presquash: Vec<f64>,
    pub logprob: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MappoLosses {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug)]
pub struct MappoAgent {
    pub params: MappoParams,
    pub n_drones: usize,
    pub obs_dim: usize,
    pub v_max: f64,
    pub obs_scale: Vec<f64>,
    /// One actor per drone; the head emits 3 means then 3 log-spreads.
    pub actors: Vec<Network>,
    pub critic: Network,
    pub actor_opts: Vec<Adam>,
    pub critic_opt: Adam,
    pub policy_version: u64,
    pub rollout: RolloutBuffer,
}

struct HeadSample {
    mean: [f64; 3],
    log_std: [f64; 3],
    /// 1 where the raw log-spread is inside the clamp band.
    clamp_mask: [f64; 3],
}

impl MappoAgent {
    pub fn new(
        obs_dim: usize,
        n_drones: usize,
        v_max: f64,
        obs_scale: Vec<f64>,
        params: MappoParams,
        rng: &mut Stream,
    ) -> Self {
        let actor_sizes = [obs_dim, params.hidden[0], params.hidden[1], 6];
        let actors: Vec<Network> = (0..n_drones)
            .map(|_| Network::mlp(&actor_sizes, Activation::Relu, Activation::Linear, rng))
            .collect();
        let critic_sizes = [obs_dim, params.hidden[0], params.hidden[1], 1];
        let critic = Network::mlp(&critic_sizes, Activation::Relu, Activation::Linear, rng);
        let actor_opts = actors
            .iter()
            .map(|a| Adam::new(a, params.learning_rate))
            .collect();
        let critic_opt = Adam::new(&critic, params.learning_rate);
        let horizon = params.horizon;
        Self {
            params,
            n_drones,
            obs_dim,
            v_max,
            obs_scale,
            actors,
            critic,
            actor_opts,
            critic_opt,
            policy_version: 0,
            rollout: RolloutBuffer::new(horizon, 0),
        }
    }

    fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        apply_scale(obs, &self.obs_scale)
    }

    fn head_from_output(y: &[f64]) -> HeadSample {
        let mut mean = [0.0; 3];
        let mut log_std = [0.0; 3];
        let mut clamp_mask = [0.0; 3];
        for d in 0..3 {
            mean[d] = y[d];
            let raw = y[3 + d];
            log_std[d] = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            clamp_mask[d] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                1.0
            } else {
                0.0
            };
        }
        HeadSample {
            mean,
            log_std,
            clamp_mask,
        }
    }

    /// Log-density of one drone's pre-squash sample plus the squash
    /// correction for the bounded action.
    fn drone_logprob(&self, head: &HeadSample, z: &[f64]) -> f64 {
        let mut logp = 0.0;
        for d in 0..3 {
            let std = head.log_std[d].exp();
            let t = (z[d] - head.mean[d]) / std;
            logp += -0.5 * t * t - head.log_std[d] - 0.5 * LOG_TAU;
            logp -= self.v_max.ln() + log_one_minus_tanh_sq(z[d]);
        }
        logp
    }

    /// Joint log-probability of a stored pre-squash sample under the
    /// current policy.
    pub fn log_prob(&self, obs: &[f64], presquash: &[f64]) -> Result<f64, SimError> {
        let scaled = self.scaled(obs);
        let mut total = 0.0;
        for (i, actor) in self.actors.iter().enumerate() {
            let y = actor.infer(&scaled)?;
            let head = Self::head_from_output(&y);
            total += self.drone_logprob(&head, &presquash[3 * i..3 * i + 3]);
        }
        Ok(total)
    }

    /// Sample the joint action; returns everything the rollout stores.
    pub fn act(&self, obs: &[f64], rng: &mut Stream) -> Result<ActStep, SimError> {
        let scaled = self.scaled(obs);
        let mut actions = Vec::with_capacity(self.n_drones);
        let mut presquash = Vec::with_capacity(3 * self.n_drones);
        let mut logprob = 0.0;
        for actor in &self.actors {
            let y = actor.infer(&scaled)?;
            let head = Self::head_from_output(&y);
            let mut z = [0.0; 3];
            for d in 0..3 {
                z[d] = head.mean[d] + head.log_std[d].exp() * rng.normal();
            }
            logprob += self.drone_logprob(&head, &z);
            actions.push([
                self.v_max * z[0].tanh(),
                self.v_max * z[1].tanh(),
                self.v_max * z[2].tanh(),
            ]);
            presquash.extend_from_slice(&z);
        }
        let value = self.critic.infer(&scaled)?[0];
        Ok(ActStep {
            action: JointAction(actions),
            presquash,
            logprob,
            value,
        })
    }

    /// Deterministic mean action (evaluation policy).
    pub fn act_greedy(&self, obs: &[f64]) -> Result<JointAction, SimError> {
        let scaled = self.scaled(obs);
        let mut actions = Vec::with_capacity(self.n_drones);
        for actor in &self.actors {
            let y = actor.infer(&scaled)?;
            actions.push([
                self.v_max * y[0].tanh(),
                self.v_max * y[1].tanh(),
                self.v_max * y[2].tanh(),
            ]);
        }
        Ok(JointAction(actions))
    }

    pub fn record(&mut self, obs: &[f64], step: &ActStep, reward: f64, done: bool) {
        self.rollout.push(RolloutStep {
            obs: obs.to_vec(),
            presquash: step.presquash.clone(),
            logprob: step.logprob,
            value: step.value,
            reward,
            done,
        });
    }

    pub fn ready(&self) -> bool {
        self.rollout.is_full()
    }

    /// Run the clipped-surrogate update over the collected rollout, then
    /// discard it and advance the policy version.
    pub fn update(&mut self, bootstrap_obs: &[f64], rng: &mut Stream) -> Result<MappoLosses, SimError> {
        if self.rollout.policy_version != self.policy_version {
            return Err(SimError::StaleRollout {
                rollout: self.rollout.policy_version,
                current: self.policy_version,
            });
        }
        let bootstrap = self.critic.infer(&self.scaled(bootstrap_obs))?[0];
        let adv = compute_advantages(
            &self.rollout,
            bootstrap,
            self.params.gamma,
            self.params.gae_lambda,
        )?;
        let n = self.rollout.len();
        let minibatch = self.params.minibatch.max(1).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut losses = MappoLosses::default();
        let mut loss_batches = 0usize;
        for _epoch in 0..self.params.epochs {
            // Fisher-Yates shuffle on the exploration stream.
            for i in (1..n).rev() {
                let j = rng.uniform_usize(i + 1);
                order.swap(i, j);
            }
            for chunk in order.chunks(minibatch) {
                let scale = 1.0 / chunk.len() as f64;
                let mut actor_grads: Vec<Gradients> = self
                    .actors
                    .iter()
                    .map(Gradients::zeros_like)
                    .collect();
                let mut critic_grads = Gradients::zeros_like(&self.critic);
                let mut batch_losses = MappoLosses::default();
                for &idx in chunk {
                    let step = &self.rollout.steps[idx];
                    let obs_scaled = self.scaled(&step.obs);
                    let advantage = adv.normalized[idx];
                    let ret = adv.returns[idx];

                    // Joint log-probability under the current parameters.
                    let mut heads = Vec::with_capacity(self.n_drones);
                    let mut caches = Vec::with_capacity(self.n_drones);
                    let mut new_logp = 0.0;
                    for (i, actor) in self.actors.iter().enumerate() {
                        let (y, cache) = actor.forward(&obs_scaled)?;
                        let head = Self::head_from_output(&y);
                        new_logp +=
                            self.drone_logprob(&head, &step.presquash[3 * i..3 * i + 3]);
                        heads.push(head);
                        caches.push(cache);
                    }
                    let ratio = (new_logp - step.logprob).exp();
                    let (surrogate, dsurr_dratio) =
                        clip_surrogate(ratio, advantage, self.params.clip);
                    let dloss_dlogp = -dsurr_dratio * ratio;
                    batch_losses.policy -= surrogate * scale;

                    let mut entropy = 0.0;
                    for (i, head) in heads.iter().enumerate() {
                        let z = &step.presquash[3 * i..3 * i + 3];
                        let mut out_grad = vec![0.0; 6];
                        for d in 0..3 {
                            let std = head.log_std[d].exp();
                            let centered = z[d] - head.mean[d];
                            let dlogp_dmean = centered / (std * std);
                            let dlogp_dlogstd =
                                (centered * centered) / (std * std) - 1.0;
                            out_grad[d] = dloss_dlogp * dlogp_dmean * scale;
                            out_grad[3 + d] = (dloss_dlogp * dlogp_dlogstd
                                - self.params.entropy_coef)
                                * head.clamp_mask[d]
                                * scale;
                            entropy += head.log_std[d] + 0.5 * (LOG_TAU + 1.0);
                        }
                        let (g, _) = self.actors[i].backward(&caches[i], &out_grad)?;
                        actor_grads[i].add(&g);
                    }
                    batch_losses.entropy += entropy * scale;

                    let (v, vcache) = self.critic.forward(&obs_scaled)?;
                    let verr = v[0] - ret;
                    // Huber value regression: sharp-edge returns get a
                    // bounded gradient.
                    let clipped = verr.clamp(-VALUE_CLIP, VALUE_CLIP);
                    batch_losses.value += clipped * (verr - 0.5 * clipped) * scale;
                    let (g, _) = self.critic.backward(&vcache, &[clipped * scale])?;
                    critic_grads.add(&g);
                }
                for (i, g) in actor_grads.iter().enumerate() {
                    self.actor_opts[i].step(&mut self.actors[i], g)?;
                }
                self.critic_opt.step(&mut self.critic, &critic_grads)?;
                losses.policy += batch_losses.policy;
                losses.value += batch_losses.value;
                losses.entropy += batch_losses.entropy;
                loss_batches += 1;
            }
        }
        if loss_batches > 0 {
            losses.policy /= loss_batches as f64;
            losses.value /= loss_batches as f64;
            losses.entropy /= loss_batches as f64;
        }
        self.policy_version += 1;
        self.rollout.clear(self.policy_version);
        Ok(losses)
    }
}
