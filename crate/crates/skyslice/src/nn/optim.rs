//! Adaptive-moment optimizer and soft target updates.

use super::network::{Gradients, Network};
use crate::error::SimError;

/// Adam state: per-parameter first/second moment accumulators plus the
/// step count used for bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    /// Moment accumulators, for checkpointing.
    pub(crate) fn moments(&self) -> (&[(Vec<f64>, Vec<f64>)], &[(Vec<f64>, Vec<f64>)]) {
        (&self.m, &self.v)
    }

    /// Rebuild optimizer state captured by a checkpoint.
    pub(crate) fn from_parts(
        learning_rate: f64,
        step_count: u64,
        m: Vec<(Vec<f64>, Vec<f64>)>,
        v: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count,
            m,
            v,
        }
    }
}

impl Adam {
    pub fn new(net: &Network, learning_rate: f64) -> Self {
        let zeros: Vec<(Vec<f64>, Vec<f64>)> = net
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. Rejects non-finite gradients so a training bug surfaces
    /// at the step that produced it.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<(), SimError> {
        if grads.layers.len() != net.layers.len() {
            return Err(SimError::ShapeMismatch(
                "gradient does not match network depth".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(SimError::NonFiniteGradient);
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            if gw.len() != layer.weights.len() || gb.len() != layer.biases.len() {
                return Err(SimError::ShapeMismatch(format!(
                    "gradient shapes at layer {l} do not match"
                )));
            }
            let (mw, mb) = &mut self.m[l];
            let (vw, vb) = &mut self.v[l];
            for i in 0..layer.weights.len() {
                let g = gw[i];
                mw[i] = self.beta1 * mw[i] + (1.0 - self.beta1) * g;
                vw[i] = self.beta2 * vw[i] + (1.0 - self.beta2) * g * g;
                layer.weights[i] -=
                    self.learning_rate * (mw[i] / bc1) / ((vw[i] / bc2).sqrt() + self.eps);
            }
            for i in 0..layer.biases.len() {
                let g = gb[i];
                mb[i] = self.beta1 * mb[i] + (1.0 - self.beta1) * g;
                vb[i] = self.beta2 * vb[i] + (1.0 - self.beta2) * g * g;
                layer.biases[i] -=
                    self.learning_rate * (mb[i] / bc1) / ((vb[i] / bc2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Blend `online` into `target`: `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut Network, online: &Network, tau: f64) -> Result<(), SimError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(SimError::InvalidTau(tau));
    }
    if !target.same_shape(online) {
        return Err(SimError::ShapeMismatch(
            "target and online architectures differ".into(),
        ));
    }
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        for (tw, ow) in t.weights.iter_mut().zip(&o.weights) {
            *tw = tau * ow + (1.0 - tau) * *tw;
        }
        for (tb, ob) in t.biases.iter_mut().zip(&o.biases) {
            *tb = tau * ob + (1.0 - tau) * *tb;
        }
    }
    Ok(())
}
