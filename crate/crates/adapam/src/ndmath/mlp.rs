//! Dense feed-forward networks: seeded initialization, forward pass,
//! and reverse-mode gradients with respect to parameters and inputs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ndmath::array::{Array, ParameterSet};
use crate::rng::rng_from;

/// Hidden-layer activation. The output layer is always linear so the
/// network emits unconstrained logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation value.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Architecture of a dense network: layer sizes from input to output
/// plus the hidden activation.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least input and output sizes, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config(format!(
                "zero layer size in {layer_sizes:?}"
            )));
        }
        Ok(Self {
            layer_sizes,
            hidden_activation,
        })
    }

    /// `[in, h1, ..., out]` with tanh hidden units.
    pub fn tanh(layer_sizes: Vec<usize>) -> Result<Self> {
        Self::new(layer_sizes, Activation::Tanh)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn weight_name(layer: usize) -> String {
        format!("W{layer}")
    }

    fn bias_name(layer: usize) -> String {
        format!("b{layer}")
    }
}

/// Initialize parameters for `spec`: weights uniform in
/// `±sqrt(6 / (fan_in + fan_out))`, biases zero. Deterministic given
/// the seed; weight matrix `Wl` has shape `[fan_in, fan_out]` and is
/// filled row by row from a single seeded stream.
pub fn mlp_init(spec: &MlpSpec, seed: u64) -> Result<ParameterSet> {
    let mut params = ParameterSet::new(seed);
    let mut rng = rng_from(seed, 0);
    for layer in 0..spec.num_layers() {
        let fan_in = spec.layer_sizes[layer];
        let fan_out = spec.layer_sizes[layer + 1];
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        params.insert(MlpSpec::weight_name(layer), Array::new(vec![fan_in, fan_out], data)?)?;
        params.insert(MlpSpec::bias_name(layer), Array::zeros(vec![fan_out]))?;
    }
    Ok(params)
}

fn layer_arrays<'p>(
    params: &'p ParameterSet,
    spec: &MlpSpec,
    layer: usize,
) -> Result<(&'p Array, &'p Array)> {
    let w = params
        .get(&MlpSpec::weight_name(layer))
        .ok_or_else(|| Error::Shape(format!("missing parameter W{layer}")))?;
    let b = params
        .get(&MlpSpec::bias_name(layer))
        .ok_or_else(|| Error::Shape(format!("missing parameter b{layer}")))?;
    let fan_in = spec.layer_sizes[layer];
    let fan_out = spec.layer_sizes[layer + 1];
    if w.shape() != [fan_in, fan_out] || b.shape() != [fan_out] {
        return Err(Error::Shape(format!(
            "layer {layer}: expected W {:?} / b {:?}, got {:?} / {:?}",
            [fan_in, fan_out],
            [fan_out],
            w.shape(),
            b.shape()
        )));
    }
    Ok((w, b))
}

/// Forward-pass record: per-layer inputs and pre-activations, enough to
/// run the backward pass without recomputation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `layer_inputs[l]` is the input vector of layer `l`; index
    /// `num_layers` holds the final logits.
    layer_inputs: Vec<Vec<f64>>,
    /// `pre_activations[l]` is `x_l W_l + b_l` for hidden layers.
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        self.layer_inputs.last().unwrap()
    }
}

/// Logits of the network on `input`. Pure function of (params, input).
pub fn mlp_forward(params: &ParameterSet, spec: &MlpSpec, input: &Array) -> Result<Array> {
    let trace = mlp_forward_trace(params, spec, input)?;
    Array::new(vec![spec.output_dim()], trace.logits().to_vec())
}

/// Forward pass that records the values the backward pass needs.
pub fn mlp_forward_trace(
    params: &ParameterSet,
    spec: &MlpSpec,
    input: &Array,
) -> Result<ForwardTrace> {
    if input.shape() != [spec.input_dim()] {
        return Err(Error::Shape(format!(
            "input shape {:?} does not match spec input dim {}",
            input.shape(),
            spec.input_dim()
        )));
    }
    let mut layer_inputs = Vec::with_capacity(spec.num_layers() + 1);
    let mut pre_activations = Vec::with_capacity(spec.num_layers());
    let mut x = input.data().to_vec();
    for layer in 0..spec.num_layers() {
        let (w, b) = layer_arrays(params, spec, layer)?;
        let fan_in = spec.layer_sizes[layer];
        let fan_out = spec.layer_sizes[layer + 1];
        let mut z = b.data().to_vec();
        let wd = w.data();
        for (i, &xi) in x.iter().enumerate().take(fan_in) {
            if xi == 0.0 {
                continue;
            }
            let row = &wd[i * fan_out..(i + 1) * fan_out];
            for (zj, &wij) in z.iter_mut().zip(row) {
                *zj += xi * wij;
            }
        }
        layer_inputs.push(x);
        let last = layer + 1 == spec.num_layers();
        if last {
            layer_inputs.push(z);
            pre_activations.push(Vec::new());
            break;
        }
        let a: Vec<f64> = z.iter().map(|&v| spec.hidden_activation.apply(v)).collect();
        pre_activations.push(z);
        x = a;
    }
    Ok(ForwardTrace {
        layer_inputs,
        pre_activations,
    })
}

/// Reverse pass: given the gradient of a scalar loss with respect to
/// the logits, return gradients with respect to every parameter and to
/// the network input.
pub fn mlp_backward(
    params: &ParameterSet,
    spec: &MlpSpec,
    trace: &ForwardTrace,
    d_logits: &[f64],
) -> Result<(ParameterSet, Array)> {
    if d_logits.len() != spec.output_dim() {
        return Err(Error::Shape(format!(
            "d_logits length {} does not match output dim {}",
            d_logits.len(),
            spec.output_dim()
        )));
    }
    let mut grads = params.zeros_like();
    let mut g = d_logits.to_vec();
    for layer in (0..spec.num_layers()).rev() {
        let (w, _) = layer_arrays(params, spec, layer)?;
        let fan_in = spec.layer_sizes[layer];
        let fan_out = spec.layer_sizes[layer + 1];
        let x = &trace.layer_inputs[layer];

        let mut dw = vec![0.0; fan_in * fan_out];
        for i in 0..fan_in {
            let xi = x[i];
            if xi != 0.0 {
                let row = &mut dw[i * fan_out..(i + 1) * fan_out];
                for (slot, &gj) in row.iter_mut().zip(&g) {
                    *slot = xi * gj;
                }
            }
        }
        grads.update(&MlpSpec::weight_name(layer), Array::new(vec![fan_in, fan_out], dw)?)?;
        grads.update(&MlpSpec::bias_name(layer), Array::new(vec![fan_out], g.clone())?)?;

        let wd = w.data();
        let mut dx = vec![0.0; fan_in];
        for (i, slot) in dx.iter_mut().enumerate() {
            let row = &wd[i * fan_out..(i + 1) * fan_out];
            *slot = row.iter().zip(&g).map(|(wij, gj)| wij * gj).sum();
        }
        if layer > 0 {
            let z = &trace.pre_activations[layer - 1];
            g = dx
                .iter()
                .zip(z)
                .map(|(&d, &zv)| d * spec.hidden_activation.derivative(zv))
                .collect();
        } else {
            g = dx;
        }
    }
    let d_input = Array::new(vec![spec.input_dim()], g)?;
    Ok((grads, d_input))
}

/// A network bundled with its architecture. Thin convenience carrier
/// used by every module that owns a trained net.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: ParameterSet,
}

impl Mlp {
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        let params = mlp_init(&spec, seed)?;
        Ok(Self { spec, params })
    }

    pub fn forward(&self, input: &Array) -> Result<Array> {
        mlp_forward(&self.params, &self.spec, input)
    }

    /// Index of the largest logit; ties go to the lowest index.
    pub fn argmax_action(&self, input: &Array) -> Result<usize> {
        Ok(argmax(self.forward(input)?.data()))
    }
}

/// Lowest-index argmax.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_params(dim: usize) -> (MlpSpec, ParameterSet) {
        let spec = MlpSpec::tanh(vec![dim, dim]).unwrap();
        let mut params = ParameterSet::new(0);
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        params.insert("W0", Array::new(vec![dim, dim], w).unwrap()).unwrap();
        params.insert("b0", Array::zeros(vec![dim])).unwrap();
        (spec, params)
    }

    #[test]
    fn init_respects_uniform_bound() {
        let spec = MlpSpec::tanh(vec![2, 3]).unwrap();
        let params = mlp_init(&spec, 7).unwrap();
        let bound = (6.0f64 / 5.0).sqrt();
        let w = params.get("W0").unwrap();
        assert_eq!(w.shape(), [2, 3]);
        assert!(w.data().iter().all(|x| x.abs() <= bound));
        assert_eq!(params.get("b0").unwrap().data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn init_is_deterministic() {
        let spec = MlpSpec::tanh(vec![4, 8, 5]).unwrap();
        let a = mlp_init(&spec, 1).unwrap();
        let b = mlp_init(&spec, 1).unwrap();
        assert!(a.bits_eq(&b));
        let names: Vec<&str> = a.iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["W0", "b0", "W1", "b1"]);
        assert_eq!(a.get("W0").unwrap().shape(), [4, 8]);
        assert_eq!(a.get("b0").unwrap().shape(), [8]);
        assert_eq!(a.get("W1").unwrap().shape(), [8, 5]);
        assert_eq!(a.get("b1").unwrap().shape(), [5]);
    }

    #[test]
    fn init_rejects_zero_layer() {
        assert!(MlpSpec::tanh(vec![4, 0, 2]).is_err());
        assert!(MlpSpec::tanh(vec![4]).is_err());
    }

    #[test]
    fn forward_zero_net_is_zero() {
        let spec = MlpSpec::tanh(vec![3, 4, 2]).unwrap();
        let params = mlp_init(&spec, 0).unwrap().zeros_like();
        let out = mlp_forward(&params, &spec, &Array::from_vec(vec![0.3, -0.4, 2.0])).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0]);
    }

    #[test]
    fn forward_identity_layer() {
        let (spec, params) = identity_params(2);
        let out = mlp_forward(&params, &spec, &Array::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0]);
    }

    #[test]
    fn forward_matches_naive_matmul_oracle() {
        // Independent oracle: direct two-layer computation with explicit loops.
        let spec = MlpSpec::tanh(vec![3, 4, 2]).unwrap();
        let params = mlp_init(&spec, 99).unwrap();
        let input = [0.2, -1.3, 0.7];
        let w0 = params.get("W0").unwrap();
        let b0 = params.get("b0").unwrap();
        let w1 = params.get("W1").unwrap();
        let b1 = params.get("b1").unwrap();
        let mut hidden = [0.0; 4];
        for j in 0..4 {
            let mut z = b0.data()[j];
            for i in 0..3 {
                z += input[i] * w0.at2(i, j);
            }
            hidden[j] = z.tanh();
        }
        let mut expect = [0.0; 2];
        for j in 0..2 {
            let mut z = b1.data()[j];
            for i in 0..4 {
                z += hidden[i] * w1.at2(i, j);
            }
            expect[j] = z;
        }
        let out = mlp_forward(&params, &spec, &Array::from_vec(input.to_vec())).unwrap();
        for (got, want) in out.data().iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let spec = MlpSpec::tanh(vec![3, 2]).unwrap();
        let params = mlp_init(&spec, 0).unwrap();
        assert!(matches!(
            mlp_forward(&params, &spec, &Array::from_vec(vec![1.0, 2.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[1.0]), 0);
    }
}
