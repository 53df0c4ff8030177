//! Finite-difference verification of the analytic gradients.
//!
//! Central differences over every parameter against the backward pass.
//! Slow by construction; meant for small networks and test-time checks.

use super::network::{Gradients, Network};
use crate::error::SimError;

/// Squared-error loss specification: `0.5 * Σ (net(input) - target)²`.
#[derive(Clone, Debug)]
pub struct SquaredErrorLoss {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl SquaredErrorLoss {
    pub fn loss(&self, net: &Network) -> Result<f64, SimError> {
        let y = net.infer(&self.input)?;
        Ok(y.iter()
            .zip(&self.target)
            .map(|(a, b)| 0.5 * (a - b) * (a - b))
            .sum())
    }

    /// Analytic gradients via the backward pass.
    pub fn gradients(&self, net: &Network) -> Result<Gradients, SimError> {
        let (y, cache) = net.forward(&self.input)?;
        let dy: Vec<f64> = y.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let (grads, _) = net.backward(&cache, &dy)?;
        Ok(grads)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub param_count: usize,
    pub tolerance: f64,
    pub pass: bool,
}

const FD_STEP: f64 = 1e-5;

/// Relative error with a denominator floor of 1e-6: gradients below the
/// floor are held to absolute agreement at the f64 central-difference
/// noise scale instead of a meaningless ratio of rounding residues.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Compare the network's own backward pass against central differences.
pub fn check_gradients(
    net: &Network,
    loss: &SquaredErrorLoss,
    tolerance: f64,
) -> Result<GradCheckReport, SimError> {
    let analytic = loss.gradients(net)?;
    compare_gradients(net, loss, &analytic, tolerance)
}

/// Compare externally supplied gradients against central differences.
/// Feeding deliberately wrong gradients is the negative control.
pub fn compare_gradients(
    net: &Network,
    loss: &SquaredErrorLoss,
    analytic: &Gradients,
    tolerance: f64,
) -> Result<GradCheckReport, SimError> {
    let flat = analytic.flat();
    let n = net.param_count();
    if flat.len() != n {
        return Err(SimError::ShapeMismatch(
            "gradient size does not match parameter count".into(),
        ));
    }
    let mut probe = net.clone();
    let mut max_rel_error: f64 = 0.0;
    for idx in 0..n {
        let original = probe.param(idx);
        *probe.param_mut(idx) = original + FD_STEP;
        let plus = loss.loss(&probe)?;
        *probe.param_mut(idx) = original - FD_STEP;
        let minus = loss.loss(&probe)?;
        *probe.param_mut(idx) = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        max_rel_error = max_rel_error.max(relative_error(flat[idx], numeric));
    }
    Ok(GradCheckReport {
        max_rel_error,
        param_count: n,
        tolerance,
        pass: max_rel_error < tolerance,
    })
}
