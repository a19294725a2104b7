//! Minimal numerical core: shaped f64 arrays, dense feed-forward
//! networks, reverse-mode gradients with respect to parameters and
//! inputs, and first-order optimizers. Everything is deterministic
//! given explicit seeds and pure unless ownership is transferred.

mod array;
pub mod checkpoint;
pub mod gradcheck;
mod heads;
mod mlp;
mod optim;

pub use array::{Array, ParameterSet};
pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use heads::{grad, loss_value, softplus, GradResult, LossHead};

pub use mlp::{
    argmax, mlp_backward, mlp_forward, mlp_forward_trace, mlp_init, Activation, ForwardTrace,
    Mlp, MlpSpec,
};
pub use optim::{adam_step, polyak_update, AdamState};

use crate::error::{Error, Result};

/// Stable softmax over a slice (max subtraction before exponentiation).
/// Exponentials are floored at the smallest positive normal so outputs
/// stay strictly positive even for extreme logit gaps.
pub fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    debug_assert!(!logits.is_empty());
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|&z| (z - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Log-probabilities `z - max - ln(sum exp)`; always finite, matching
/// [`softmax_slice`] up to the underflow floor.
pub fn log_softmax_slice(logits: &[f64]) -> Vec<f64> {
    debug_assert!(!logits.is_empty());
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits
        .iter()
        .map(|&z| (z - max).exp())
        .sum::<f64>()
        .ln();
    logits.iter().map(|&z| z - max - log_sum).collect()
}

/// Softmax of a non-empty 1-D array: outputs in (0, 1) summing to 1.
pub fn softmax(logits: &Array) -> Result<Array> {
    if logits.shape().len() != 1 || logits.is_empty() {
        return Err(Error::Shape(format!(
            "softmax expects a non-empty 1-D array, got shape {:?}",
            logits.shape()
        )));
    }
    Array::new(vec![logits.len()], softmax_slice(logits.data()))
}
