//! Minimal function-approximation kit: dense MLPs, exact reverse-mode
//! gradients, an adaptive first-order optimizer, soft target updates,
//! finite-difference verification, and bit-exact checkpoints.

pub mod checkpoint;
pub mod gradcheck;
pub mod network;
pub mod optim;

pub use gradcheck::{check_gradients, compare_gradients, GradCheckReport, SquaredErrorLoss};
pub use network::{Activation, ForwardCache, Gradients, Layer, Network};
pub use optim::{soft_update, Adam};
