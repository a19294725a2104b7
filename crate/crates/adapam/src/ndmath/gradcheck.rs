//! Finite-difference gradient verification.
//!
//! Central differences with h = 1e-6 probe random coordinates of the
//! parameter vector and the input; analytic gradients must agree within
//! relative error 1e-4 (with a small absolute floor for near-zero
//! coordinates). Used by the test suites as the independent oracle for
//! every registered loss head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ndmath::array::{Array, ParameterSet};
use crate::ndmath::heads::{grad, loss_value, LossHead};
use crate::ndmath::mlp::MlpSpec;

pub const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_FLOOR: f64 = 1e-7;

/// 1-D array with coordinates uniform in (-1, 1).
pub fn random_array(len: usize, rng: &mut ChaCha8Rng) -> Array {
    Array::from_vec((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn agree(analytic: f64, fd: f64) -> bool {
    let diff = (analytic - fd).abs();
    diff <= FD_REL_TOL * analytic.abs().max(fd.abs()) || diff <= FD_ABS_FLOOR
}

fn perturbed(params: &ParameterSet, name: &str, index: usize, delta: f64) -> ParameterSet {
    let mut out = params.clone();
    let mut array = params.get(name).unwrap().clone();
    array.data_mut()[index] += delta;
    out.update(name, array).unwrap();
    out
}

/// Check `probes` random parameter coordinates and `probes` random input
/// coordinates of `head` composed with the network. Panics with a
/// description on the first disagreement; returns the number of probes
/// actually checked.
pub fn check_grad_params_and_input(
    params: &ParameterSet,
    spec: &MlpSpec,
    input: &Array,
    head: &LossHead,
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let result = grad(params, spec, input, head).expect("analytic gradient");
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let mut checked = 0;

    for _ in 0..probes {
        let name = &names[rng.gen_range(0..names.len())];
        let len = params.get(name).unwrap().len();
        let index = rng.gen_range(0..len);
        let plus = loss_value(&perturbed(params, name, index, FD_STEP), spec, input, head)
            .expect("fd loss");
        let minus = loss_value(&perturbed(params, name, index, -FD_STEP), spec, input, head)
            .expect("fd loss");
        let fd = (plus - minus) / (2.0 * FD_STEP);
        let analytic = result.d_params.get(name).unwrap().data()[index];
        assert!(
            agree(analytic, fd),
            "parameter gradient mismatch at {name}[{index}]: analytic {analytic}, fd {fd}"
        );
        checked += 1;
    }

    for _ in 0..probes {
        let index = rng.gen_range(0..input.len());
        let mut x_plus = input.clone();
        x_plus.data_mut()[index] += FD_STEP;
        let mut x_minus = input.clone();
        x_minus.data_mut()[index] -= FD_STEP;
        let plus = loss_value(params, spec, &x_plus, head).expect("fd loss");
        let minus = loss_value(params, spec, &x_minus, head).expect("fd loss");
        let fd = (plus - minus) / (2.0 * FD_STEP);
        let analytic = result.d_input.data()[index];
        assert!(
            agree(analytic, fd),
            "input gradient mismatch at [{index}]: analytic {analytic}, fd {fd}"
        );
        checked += 1;
    }
    checked
}

/// Generic scalar-function check: compare an analytic gradient vector
/// against central differences of `f` at `x` on `probes` random
/// coordinates.
pub fn check_grad_vector(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    analytic: &[f64],
    probes: usize,
    rng: &mut ChaCha8Rng,
) {
    assert_eq!(x.len(), analytic.len());
    for _ in 0..probes {
        let index = rng.gen_range(0..x.len());
        let mut plus = x.to_vec();
        plus[index] += FD_STEP;
        let mut minus = x.to_vec();
        minus[index] -= FD_STEP;
        let fd = (f(&plus) - f(&minus)) / (2.0 * FD_STEP);
        assert!(
            agree(analytic[index], fd),
            "gradient mismatch at [{index}]: analytic {}, fd {fd}",
            analytic[index]
        );
    }
}
