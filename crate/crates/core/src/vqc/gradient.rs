//! Losses of the form ⟨φ|W|φ⟩ with W diagonal in the computational basis,
//! φ = U(params)|ψ⟩, and their exact gradients by adjoint differentiation:
//! one forward sweep to φ, then one backward sweep carrying both φ and
//! λ = W|φ⟩ back through the daggered gates.

use num_complex::Complex64 as C64;

use crate::circuit::{Kernel, ParamCircuit, ANGLES_PER_GATE};
use crate::error::{Error, Result};
use crate::gates;
use crate::state::StateVector;

/// Diagonal observable weights for `1 − P(last qubit = 0)`.
pub fn last_qubit_weights(n_qubits: usize) -> Vec<f64> {
    (0..1usize << n_qubits).map(|k| (k & 1) as f64).collect()
}

/// Diagonal observable weights for `1 − (1/n) Σ_q P(qubit q = 0)`.
pub fn all_qubit_weights(n_qubits: usize) -> Vec<f64> {
    (0..1usize << n_qubits)
        .map(|k| k.count_ones() as f64 / n_qubits as f64)
        .collect()
}

fn expectation(amps: &[C64], weights: &[f64]) -> f64 {
    amps.iter().zip(weights).map(|(a, w)| w * a.norm_sqr()).sum()
}

/// ⟨φ|W|φ⟩ for φ = U(params)|ψ⟩.
pub fn diagonal_expectation(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
    weights: &[f64],
) -> Result<f64> {
    check_weights(state, weights)?;
    let mut phi = state.clone();
    circuit.apply(&mut phi, params)?;
    Ok(expectation(phi.amplitudes(), weights))
}

/// Value and exact gradient of ⟨φ|W|φ⟩ with respect to every circuit angle.
pub fn diagonal_expectation_and_gradient(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
    weights: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_weights(state, weights)?;
    circuit.check_inputs(state, params)?;
    let kernels = circuit.compile(state.n_qubits(), params);

    let mut phi: Vec<C64> = state.amplitudes().to_vec();
    for k in &kernels {
        k.apply(&mut phi);
    }
    let value = expectation(&phi, weights);
    let mut lambda: Vec<C64> = phi.iter().zip(weights).map(|(a, w)| a * w).collect();

    let mut grad = vec![0.0; params.len()];
    for k in kernels.iter().rev() {
        k.apply_dagger(&mut phi);
        if let Kernel::One {
            bit,
            slot: Some(slot),
            ..
        } = k
        {
            let base = ANGLES_PER_GATE * slot;
            let p = &params[base..base + ANGLES_PER_GATE];
            let derivs = gates::v_derivatives(p[0], p[1], p[2]);
            let g = overlap_derivatives(&lambda, &phi, *bit, &derivs);
            grad[base..base + ANGLES_PER_GATE].copy_from_slice(&g);
        }
        k.apply_dagger(&mut lambda);
    }
    Ok((value, grad))
}

/// 2·Re⟨λ|D_k|φ⟩ for each derivative matrix D_k acting on `bit`.
fn overlap_derivatives(
    lambda: &[C64],
    phi: &[C64],
    bit: usize,
    derivs: &[gates::Mat2; 3],
) -> [f64; 3] {
    let stride = 1usize << bit;
    let mut acc = [C64::new(0.0, 0.0); 3];
    for base in (0..phi.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let (a, b) = (phi[i], phi[i + stride]);
            let (la, lb) = (lambda[i].conj(), lambda[i + stride].conj());
            for (d, s) in derivs.iter().zip(acc.iter_mut()) {
                *s += la * (d[0][0] * a + d[0][1] * b) + lb * (d[1][0] * a + d[1][1] * b);
            }
        }
    }
    acc.map(|s| 2.0 * s.re)
}

fn check_weights(state: &StateVector, weights: &[f64]) -> Result<()> {
    if weights.len() != state.dim() {
        return Err(Error::invalid(format!(
            "{} observable weights for a {}-dimensional state",
            weights.len(),
            state.dim()
        )));
    }
    Ok(())
}

/// ℒ = 1 − P(last qubit = 0) after the circuit.
pub fn sequence_loss(state: &StateVector, circuit: &ParamCircuit, params: &[f64]) -> Result<f64> {
    let mut phi = state.clone();
    circuit.apply(&mut phi, params)?;
    Ok((1.0 - phi.prob_last_zero()).clamp(0.0, 1.0))
}

pub fn loss_and_gradient(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let w = last_qubit_weights(state.n_qubits());
    diagonal_expectation_and_gradient(state, circuit, params, &w)
}

pub fn loss_gradient(state: &StateVector, circuit: &ParamCircuit, params: &[f64]) -> Result<Vec<f64>> {
    loss_and_gradient(state, circuit, params).map(|(_, g)| g)
}
