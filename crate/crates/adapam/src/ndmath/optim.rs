//! First-order optimizers: Adam and Polyak target-network averaging.

use crate::error::{Error, Result};
use crate::ndmath::array::{Array, ParameterSet};

/// Adam moment estimates. One state per optimized parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: ParameterSet,
    v: ParameterSet,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zero-initialized state with the standard defaults
    /// (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
    pub fn new(params: &ParameterSet) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update. Pure: returns the new parameters and state.
pub fn adam_step(
    params: &ParameterSet,
    grads: &ParameterSet,
    state: AdamState,
    lr: f64,
) -> Result<(ParameterSet, AdamState)> {
    if !params.same_layout(grads) || !params.same_layout(&state.m) {
        return Err(Error::Shape(
            "adam_step: parameter, gradient, and state layouts must agree".into(),
        ));
    }
    let mut state = state;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let mut new_params = params.clone();
    for (name, g) in grads.iter() {
        let p = params.get(name).unwrap().data();
        let m = state.m.get(name).unwrap().data();
        let v = state.v.get(name).unwrap().data();
        let mut nm = vec![0.0; p.len()];
        let mut nv = vec![0.0; p.len()];
        let mut np = vec![0.0; p.len()];
        for i in 0..p.len() {
            let gi = g.data()[i];
            nm[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            nv[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            let m_hat = nm[i] / bc1;
            let v_hat = nv[i] / bc2;
            np[i] = p[i] - lr * m_hat / (v_hat.sqrt() + state.eps);
        }
        let shape = g.shape().to_vec();
        state.m.update(name, Array::new(shape.clone(), nm)?)?;
        state.v.update(name, Array::new(shape.clone(), nv)?)?;
        new_params.update(name, Array::new(shape, np)?)?;
    }
    Ok((new_params, state))
}

/// Target-network update `target' = mu * online + (1 - mu) * target`.
pub fn polyak_update(
    target: &ParameterSet,
    online: &ParameterSet,
    mu: f64,
) -> Result<ParameterSet> {
    if !target.same_layout(online) {
        return Err(Error::Shape(
            "polyak_update: target and online layouts must agree".into(),
        ));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Argument(format!("mu must be in [0, 1], got {mu}")));
    }
    let mut out = target.clone();
    for (name, t) in target.iter() {
        let o = online.get(name).unwrap();
        let data: Vec<f64> = t
            .data()
            .iter()
            .zip(o.data())
            .map(|(&tv, &ov)| mu * ov + (1.0 - mu) * tv)
            .collect();
        out.update(name, Array::new(t.shape().to_vec(), data)?)?;
    }
    Ok(out)
}
