//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! The only architecture family is the fixed MLP: affine layers with a
//! per-layer activation. Parameters are `f64` throughout; initialization
//! is fan-in-scaled uniform and seed-controlled.

use crate::error::SimError;
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative as a function of the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self, SimError> {
        match tag {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Linear),
            other => Err(SimError::Checkpoint(format!("unknown activation tag {other}"))),
        }
    }
}

/// One affine layer. Weights are row-major `[output × input]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
}

/// Intermediates kept by `forward` so `backward` can run.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    preacts: Vec<Vec<f64>>,
}

/// Gradients with the same shapes as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in w.iter_mut().zip(ow) {
                *x += *y;
            }
            for (x, y) in b.iter_mut().zip(ob) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in self.layers.iter_mut() {
            for x in w.iter_mut() {
                *x *= factor;
            }
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b.iter()).all(|x| x.is_finite()))
    }

    /// Flat view in the same order as [`Network::param`] indices.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl Network {
    /// Fully-connected network over `sizes` (input, hidden..., output).
    /// Hidden layers use `hidden`, the last layer uses `head`.
    pub fn mlp(sizes: &[usize], hidden: Activation, head: Activation, rng: &mut Stream) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for i in 0..sizes.len() - 1 {
            let (input, output) = (sizes[i], sizes[i + 1]);
            let activation = if i + 2 == sizes.len() { head } else { hidden };
            let bound = 1.0 / (input as f64).sqrt();
            let weights = (0..input * output)
                .map(|_| rng.uniform_range(-bound, bound))
                .collect();
            let biases = (0..output).map(|_| rng.uniform_range(-bound, bound)).collect();
            layers.push(Layer {
                input,
                output,
                weights,
                biases,
                activation,
            });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Flat parameter accessors, ordered layer by layer, weights before
    /// biases. Used by finite differencing and checkpoint tests.
    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weights.len() {
                return l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in self.layers.iter_mut() {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return &mut l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn same_shape(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.input == b.input && a.output == b.output)
    }

    /// Forward pass returning the output and the cache for `backward`.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), SimError> {
        if input.len() != self.input_dim() {
            return Err(SimError::InputDim {
                got: input.len(),
                expected: self.input_dim(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.output];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.input..(o + 1) * layer.input];
                let mut acc = layer.biases[o];
                for (w, xi) in row.iter().zip(&x) {
                    acc += w * xi;
                }
                *zo = acc;
            }
            inputs.push(x);
            x = z.iter().map(|&v| layer.activation.apply(v)).collect();
            preacts.push(z);
        }
        Ok((x, ForwardCache { inputs, preacts }))
    }

    /// Forward pass without keeping intermediates.
    pub fn infer(&self, input: &[f64]) -> Result<Vec<f64>, SimError> {
        self.forward(input).map(|(y, _)| y)
    }

    /// Exact reverse-mode gradients of a scalar loss with respect to every
    /// parameter, given `d loss / d output`. Also returns
    /// `d loss / d input` for chaining through earlier computations.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<(Gradients, Vec<f64>), SimError> {
        if cache.inputs.len() != self.layers.len() || cache.preacts.len() != self.layers.len() {
            return Err(SimError::ShapeMismatch(
                "cache does not match network depth".into(),
            ));
        }
        if output_grad.len() != self.output_dim() {
            return Err(SimError::ShapeMismatch(format!(
                "output gradient has {} entries, network emits {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut dy = output_grad.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let z = &cache.preacts[l];
            let x = &cache.inputs[l];
            if z.len() != layer.output || x.len() != layer.input {
                return Err(SimError::ShapeMismatch(format!(
                    "cache shapes at layer {l} do not match"
                )));
            }
            let (gw, gb) = &mut grads.layers[l];
            let mut dx = vec![0.0; layer.input];
            for o in 0..layer.output {
                let dz = dy[o] * layer.activation.derivative(z[o]);
                gb[o] += dz;
                let row = &layer.weights[o * layer.input..(o + 1) * layer.input];
                let grow = &mut gw[o * layer.input..(o + 1) * layer.input];
                for i in 0..layer.input {
                    grow[i] += dz * x[i];
                    dx[i] += dz * row[i];
                }
            }
            dy = dx;
        }
        Ok((grads, dy))
    }
}
