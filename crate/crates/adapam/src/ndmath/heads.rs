//! Registered scalar loss heads and the gradient entry point.
//!
//! Every loss in the system is a shallow composition of an MLP forward
//! pass with one of these heads, so gradients are computed by pairing
//! an analytic head derivative with the shared reverse pass instead of
//! a general graph engine.

use crate::error::{Error, Result};
use crate::ndmath::array::{Array, ParameterSet};
use crate::ndmath::mlp::{mlp_backward, mlp_forward_trace, MlpSpec};
use crate::ndmath::softmax_slice;

/// Scalar loss heads that can be composed with a network forward pass.
#[derive(Debug, Clone)]
pub enum LossHead {
    /// Softmax cross-entropy to a target class: `-log softmax(z)[target]`.
    CrossEntropy { target: usize },
    /// `0.5 * (z[index] - target)^2` on one raw output coordinate.
    HalfSquaredError { index: usize, target: f64 },
    /// Policy-gradient surrogate
    /// `-weight * log softmax(z)[action] - entropy_coeff * H(softmax(z))`.
    WeightedLogProb {
        action: usize,
        weight: f64,
        entropy_coeff: f64,
    },
    /// Binary cross-entropy on a single logit against `label` in {0, 1}.
    BinaryCrossEntropy { label: f64 },
    /// Targeted attack objective
    /// `||x - original||_2^2 + margin_weight * max(max_{a != target} z_a - z_target + confidence, 0)`.
    /// The distance term acts on the network input, the margin term on
    /// the logits.
    CwObjective {
        target: usize,
        original: Array,
        margin_weight: f64,
        confidence: f64,
    },
}

/// Loss value plus gradients with respect to parameters and input.
#[derive(Debug, Clone)]
pub struct GradResult {
    pub loss: f64,
    pub d_params: ParameterSet,
    pub d_input: Array,
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LossHead {
    /// Loss contribution of the logits plus d loss / d logits.
    pub fn loss_and_dlogits(&self, logits: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            LossHead::CrossEntropy { target } => {
                check_index(*target, logits.len())?;
                let p = softmax_slice(logits);
                let loss = -p[*target].ln();
                let mut d = p;
                d[*target] -= 1.0;
                Ok((loss, d))
            }
            LossHead::HalfSquaredError { index, target } => {
                check_index(*index, logits.len())?;
                let diff = logits[*index] - target;
                let mut d = vec![0.0; logits.len()];
                d[*index] = diff;
                Ok((0.5 * diff * diff, d))
            }
            LossHead::WeightedLogProb {
                action,
                weight,
                entropy_coeff,
            } => {
                check_index(*action, logits.len())?;
                let p = softmax_slice(logits);
                let entropy: f64 = -p.iter().map(|&pi| pi * pi.ln()).sum::<f64>();
                let loss = -weight * p[*action].ln() - entropy_coeff * entropy;
                let d: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(k, &pk)| {
                        let one_hot = if k == *action { 1.0 } else { 0.0 };
                        weight * (pk - one_hot) + entropy_coeff * pk * (pk.ln() + entropy)
                    })
                    .collect();
                Ok((loss, d))
            }
            LossHead::BinaryCrossEntropy { label } => {
                if logits.len() != 1 {
                    return Err(Error::Shape(format!(
                        "binary cross-entropy expects 1 logit, got {}",
                        logits.len()
                    )));
                }
                let z = logits[0];
                let loss = softplus(z) - label * z;
                Ok((loss, vec![sigmoid(z) - label]))
            }
            LossHead::CwObjective {
                target,
                margin_weight,
                confidence,
                ..
            } => {
                if logits.len() < 2 {
                    return Err(Error::Argument(
                        "attack margin needs at least two actions".into(),
                    ));
                }
                check_index(*target, logits.len())?;
                let (best_other, best_val) = logits
                    .iter()
                    .enumerate()
                    .filter(|(a, _)| a != target)
                    .fold((usize::MAX, f64::NEG_INFINITY), |acc, (a, &v)| {
                        if v > acc.1 {
                            (a, v)
                        } else {
                            acc
                        }
                    });
                let margin = best_val - logits[*target] + confidence;
                let mut d = vec![0.0; logits.len()];
                if margin > 0.0 {
                    d[best_other] = *margin_weight;
                    d[*target] = -*margin_weight;
                }
                Ok((margin_weight * margin.max(0.0), d))
            }
        }
    }

    /// Loss contribution of the input itself plus d loss / d input,
    /// for heads that depend on the input outside the network path.
    fn input_term(&self, input: &Array) -> Result<Option<(f64, Vec<f64>)>> {
        match self {
            LossHead::CwObjective { original, .. } => {
                if original.len() != input.len() {
                    return Err(Error::Shape(format!(
                        "original length {} vs input length {}",
                        original.len(),
                        input.len()
                    )));
                }
                let mut loss = 0.0;
                let mut d = vec![0.0; input.len()];
                for (slot, (&x, &o)) in d.iter_mut().zip(input.data().iter().zip(original.data()))
                {
                    let diff = x - o;
                    loss += diff * diff;
                    *slot = 2.0 * diff;
                }
                Ok(Some((loss, d)))
            }
            _ => Ok(None),
        }
    }
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::Argument(format!(
            "index {index} out of range for {len} outputs"
        )));
    }
    Ok(())
}

/// Analytic gradient of `head` composed with the network at `input`.
pub fn grad(
    params: &ParameterSet,
    spec: &MlpSpec,
    input: &Array,
    head: &LossHead,
) -> Result<GradResult> {
    let trace = mlp_forward_trace(params, spec, input)?;
    let (mut loss, d_logits) = head.loss_and_dlogits(trace.logits())?;
    let (d_params, mut d_input) = mlp_backward(params, spec, &trace, &d_logits)?;
    if let Some((extra_loss, extra_d)) = head.input_term(input)? {
        loss += extra_loss;
        for (slot, e) in d_input.data_mut().iter_mut().zip(extra_d) {
            *slot += e;
        }
    }
    Ok(GradResult {
        loss,
        d_params,
        d_input,
    })
}

/// Loss value only (same composition as [`grad`], no reverse pass).
pub fn loss_value(
    params: &ParameterSet,
    spec: &MlpSpec,
    input: &Array,
    head: &LossHead,
) -> Result<f64> {
    let trace = mlp_forward_trace(params, spec, input)?;
    let (mut loss, _) = head.loss_and_dlogits(trace.logits())?;
    if let Some((extra, _)) = head.input_term(input)? {
        loss += extra;
    }
    Ok(loss)
}
