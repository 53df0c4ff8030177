//! Experience storage: a prioritized replay ring for the off-policy
//! learners and a strictly on-policy rollout buffer.

use super::sum_tree::SumTree;
use crate::error::SimError;
use crate::rng::Stream;

/// Priority floor added to TD magnitudes so no stored item starves.
pub const PRIORITY_EPS: f64 = 1e-3;

/// Prioritized replay ring. Items are sampled with probability
/// proportional to `priority^alpha` and corrected with annealed
/// importance-sampling weights.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<T>,
    write_pos: usize,
    tree: SumTree,
    alpha: f64,
    beta0: f64,
    beta_anneal_steps: usize,
    samples_drawn: usize,
    max_priority: f64,
}

/// Indices and importance weights of one sampled batch.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub beta: f64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize, alpha: f64, beta0: f64, beta_anneal_steps: usize) -> Self {
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(4096)),
            write_pos: 0,
            tree: SumTree::new(capacity),
            alpha,
            beta0,
            beta_anneal_steps,
            samples_drawn: 0,
            max_priority: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.items[idx]
    }

    /// Store a transition at the ring position, giving it the maximum
    /// priority seen so far so it is sampled at least once.
    pub fn push(&mut self, item: T) {
        let idx = if self.items.len() < self.capacity {
            self.items.push(item);
            self.items.len() - 1
        } else {
            let idx = self.write_pos;
            self.items[idx] = item;
            idx
        };
        self.write_pos = (idx + 1) % self.capacity;
        self.tree.update(idx, self.max_priority.powf(self.alpha));
    }

    /// Importance-sampling exponent, annealed linearly from `beta0` to 1.
    pub fn beta(&self) -> f64 {
        if self.beta_anneal_steps == 0 {
            return 1.0;
        }
        let frac = self.samples_drawn as f64 / self.beta_anneal_steps as f64;
        (self.beta0 + (1.0 - self.beta0) * frac).min(1.0)
    }

    /// Draw a prioritized batch. Returns `None` while the buffer holds
    /// fewer than `batch` items — the caller treats that as a no-op.
    pub fn sample(&mut self, batch: usize, rng: &mut Stream) -> Option<SampleBatch> {
        if self.items.len() < batch {
            return None;
        }
        let beta = self.beta();
        self.samples_drawn += 1;
        let total = self.tree.total();
        let n = self.items.len() as f64;
        let mut indices = Vec::with_capacity(batch);
        let mut weights = Vec::with_capacity(batch);
        for _ in 0..batch {
            let target = rng.uniform() * total;
            let idx = self.tree.find(target).min(self.items.len() - 1);
            let prob = self.tree.get(idx) / total;
            indices.push(idx);
            weights.push((n * prob).powf(-beta));
        }
        let w_max = weights.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        for w in weights.iter_mut() {
            *w /= w_max;
        }
        Some(SampleBatch {
            indices,
            weights,
            beta,
        })
    }

    /// Refresh priorities from TD magnitudes (a floor is added so every
    /// priority stays positive).
    pub fn update_priorities(&mut self, indices: &[usize], td_magnitudes: &[f64]) {
        debug_assert_eq!(indices.len(), td_magnitudes.len());
        for (idx, td) in indices.iter().zip(td_magnitudes) {
            let raw = td.abs() + PRIORITY_EPS;
            self.max_priority = self.max_priority.max(raw);
            self.tree.update(*idx, raw.powf(self.alpha));
        }
    }

    /// Set a raw priority directly; the stored sampling mass is
    /// `priority^alpha`.
    pub fn set_raw_priority(&mut self, idx: usize, priority: f64) {
        self.max_priority = self.max_priority.max(priority);
        self.tree.update(idx, priority.powf(self.alpha));
    }
}

/// One step of an on-policy trajectory.
#[derive(Clone, Debug)]
pub struct RolloutStep {
    pub obs: Vec<f64>,
    /// Pre-squash Gaussian samples, one triple per drone.
    pub presquash: Vec<f64>,
    pub logprob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Short-horizon on-policy storage, discarded after every update and
/// never reused across policy versions.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    pub steps: Vec<RolloutStep>,
    pub horizon: usize,
    pub policy_version: u64,
}

impl RolloutBuffer {
    pub fn new(horizon: usize, policy_version: u64) -> Self {
        Self {
            steps: Vec::with_capacity(horizon),
            horizon,
            policy_version,
        }
    }

    pub fn push(&mut self, step: RolloutStep) {
        self.steps.push(step);
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() >= self.horizon
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn clear(&mut self, new_version: u64) {
        self.steps.clear();
        self.policy_version = new_version;
    }
}

/// Generalized advantage estimates plus discounted returns.
#[derive(Clone, Debug)]
pub struct Advantages {
    pub raw: Vec<f64>,
    /// Zero-mean unit-variance rescaling of `raw`.
    pub normalized: Vec<f64>,
    pub returns: Vec<f64>,
}

/// GAE over a completed rollout with a bootstrap value for the state
/// after the final step.
pub fn compute_advantages(
    rollout: &RolloutBuffer,
    bootstrap_value: f64,
    gamma: f64,
    gae_lambda: f64,
) -> Result<Advantages, SimError> {
    if rollout.steps.is_empty() {
        return Err(SimError::EmptyRollout);
    }
    let n = rollout.steps.len();
    let mut raw = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let step = &rollout.steps[t];
        let not_done = if step.done { 0.0 } else { 1.0 };
        let delta = step.reward + gamma * not_done * next_value - step.value;
        let adv = delta + gamma * gae_lambda * not_done * next_adv;
        raw[t] = adv;
        next_value = step.value;
        next_adv = adv;
    }
    let returns: Vec<f64> = raw
        .iter()
        .zip(&rollout.steps)
        .map(|(a, s)| a + s.value)
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let var = raw.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let normalized = raw.iter().map(|a| (a - mean) / (std + 1e-8)).collect();
    Ok(Advantages {
        raw,
        normalized,
        returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_signals_until_filled() {
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(16, 0.6, 0.4, 100);
        let mut rng = Stream::from_seed(1);
        assert!(buf.sample(4, &mut rng).is_none());
        for i in 0..4 {
            buf.push(i);
        }
        assert!(buf.sample(4, &mut rng).is_some());
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(4, 0.6, 0.4, 100);
        for i in 0..6 {
            buf.push(i);
        }
        assert_eq!(buf.len(), 4);
        let stored: Vec<u32> = (0..4).map(|i| *buf.get(i)).collect();
        assert_eq!(stored, vec![4, 5, 2, 3]);
    }

    #[test]
    fn priority_law_two_items() {
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(2, 0.6, 1.0, 0);
        buf.push(0);
        buf.push(1);
        buf.set_raw_priority(0, 8.0);
        buf.set_raw_priority(1, 1.0);
        let mut rng = Stream::from_seed(3);
        let mut counts = [0usize; 2];
        for _ in 0..10_000 {
            let batch = buf.sample(2, &mut rng).unwrap();
            for idx in batch.indices {
                counts[idx] += 1;
            }
        }
        let ratio = counts[0] as f64 / counts[1] as f64;
        let expect = 8f64.powf(0.6);
        assert!(
            (ratio - expect).abs() / expect < 0.05,
            "ratio {ratio} vs {expect}"
        );
    }

    #[test]
    fn uniform_priorities_sample_uniformly() {
        let n = 8;
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(n, 0.6, 1.0, 0);
        for i in 0..n as u32 {
            buf.push(i);
        }
        let mut rng = Stream::from_seed(5);
        let mut counts = vec![0usize; n];
        let draws = 40_000;
        for _ in 0..draws / n {
            let batch = buf.sample(n, &mut rng).unwrap();
            for idx in batch.indices {
                counts[idx] += 1;
            }
        }
        let expected = draws as f64 / n as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 7 degrees of freedom; p = 0.01 critical value is 18.48.
        assert!(chi2 < 18.48, "chi2 {chi2}");
    }

    #[test]
    fn weights_uniform_when_priorities_equal() {
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(8, 0.6, 0.4, 10);
        for i in 0..8 {
            buf.push(i);
        }
        let mut rng = Stream::from_seed(7);
        let batch = buf.sample(8, &mut rng).unwrap();
        for w in batch.weights {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_anneals_to_one() {
        let mut buf: ReplayBuffer<u32> = ReplayBuffer::new(4, 0.6, 0.4, 10);
        for i in 0..4 {
            buf.push(i);
        }
        assert!((buf.beta() - 0.4).abs() < 1e-12);
        let mut rng = Stream::from_seed(9);
        for _ in 0..20 {
            buf.sample(2, &mut rng);
        }
        assert_eq!(buf.beta(), 1.0);
    }

    fn constant_rollout(n: usize, reward: f64, value: f64) -> RolloutBuffer {
        let mut r = RolloutBuffer::new(n, 0);
        for _ in 0..n {
            r.push(RolloutStep {
                obs: vec![0.0],
                presquash: vec![0.0],
                logprob: 0.0,
                value,
                reward,
                done: false,
            });
        }
        r
    }

    #[test]
    fn undiscounted_returns_hand_case() {
        let rollout = constant_rollout(3, 1.0, 0.0);
        let adv = compute_advantages(&rollout, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(adv.returns, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn perfect_values_give_zero_raw_advantage() {
        // value(t) equals the remaining undiscounted return.
        let mut rollout = RolloutBuffer::new(3, 0);
        for v in [3.0, 2.0, 1.0] {
            rollout.push(RolloutStep {
                obs: vec![0.0],
                presquash: vec![0.0],
                logprob: 0.0,
                value: v,
                reward: 1.0,
                done: false,
            });
        }
        let adv = compute_advantages(&rollout, 0.0, 1.0, 1.0).unwrap();
        for a in adv.raw {
            assert!(a.abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let mut rollout = RolloutBuffer::new(2, 0);
        for (r, v) in [(1.0, 0.5), (2.0, 0.25)] {
            rollout.push(RolloutStep {
                obs: vec![0.0],
                presquash: vec![0.0],
                logprob: 0.0,
                value: v,
                reward: r,
                done: false,
            });
        }
        let gamma = 0.9;
        let adv = compute_advantages(&rollout, 0.125, gamma, 0.0).unwrap();
        assert!((adv.raw[0] - (1.0 + gamma * 0.25 - 0.5)).abs() < 1e-12);
        assert!((adv.raw[1] - (2.0 + gamma * 0.125 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn empty_rollout_errors() {
        let rollout = RolloutBuffer::new(4, 0);
        assert!(matches!(
            compute_advantages(&rollout, 0.0, 0.99, 0.95),
            Err(SimError::EmptyRollout)
        ));
    }
}
