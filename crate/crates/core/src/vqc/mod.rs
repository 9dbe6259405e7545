//! Sequential variational disentanglement.
//!
//! Each sequence trains a stacked-block circuit so that the last qubit of the
//! current subsystem reads |0⟩ with probability one, then projects that
//! qubit out and continues on the remaining `n − 1` qubits. Running the
//! identified circuits backwards from |0…0⟩ reconstructs the input state up
//! to a global phase.

mod gradient;

pub use gradient::{
    all_qubit_weights, diagonal_expectation, diagonal_expectation_and_gradient,
    last_qubit_weights, loss_and_gradient, loss_gradient, sequence_loss,
};

use log::{debug, info};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{sequence_circuit, ParamCircuit};
use crate::density::subsystem_purity;
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop once ℒ ≤ this value.
    pub loss_tolerance: f64,
    pub max_epochs_per_sequence: usize,
    /// Blocks per sequence are `n_active · repetition_r`.
    pub repetition_r: usize,
    /// When set, stop once m_q ≥ this value instead of using `loss_tolerance`.
    pub precision_target: Option<f64>,
    /// Initial angles are uniform on `[−init_scale, init_scale]`.
    pub init_scale: f64,
    /// Purity is evaluated every this many epochs (and at the last epoch);
    /// in between the previous value is repeated.
    pub purity_every: usize,
    /// Log progress every this many epochs; 0 disables.
    pub progress_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            loss_tolerance: 1e-4,
            max_epochs_per_sequence: 5000,
            repetition_r: 1,
            precision_target: None,
            init_scale: 0.1,
            purity_every: 1,
            progress_every: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        if !(self.loss_tolerance >= 0.0 && self.loss_tolerance < 1.0) {
            return Err(Error::invalid(format!(
                "loss tolerance {} outside [0, 1)",
                self.loss_tolerance
            )));
        }
        if let Some(m) = self.precision_target {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::invalid(format!("precision target {m} outside (0, 1]")));
            }
        }
        if self.repetition_r == 0 || self.purity_every == 0 {
            return Err(Error::invalid("repetition_r and purity_every must be positive"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::invalid(format!("init scale {} invalid", self.init_scale)));
        }
        Ok(())
    }

    /// Whether a sequence with this loss counts as disentangled.
    pub fn is_reached(&self, loss: f64) -> bool {
        match self.precision_target {
            Some(m) => 1.0 - loss >= m,
            None => loss <= self.loss_tolerance,
        }
    }
}

/// Outcome of training one sequence circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub circuit: ParamCircuit,
    pub params: Vec<f64>,
    /// ℒ at every evaluated epoch, starting with the initial parameters.
    pub loss_trajectory: Vec<f64>,
    /// 𝒫 of the subsystem left after tracing out the measured qubit.
    pub purity_trajectory: Vec<f64>,
    pub final_m_q: f64,
    /// Number of Adam updates taken.
    pub epochs_used: usize,
    pub converged: bool,
}

impl SequenceResult {
    pub fn n_active(&self) -> usize {
        self.circuit.n_active()
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_trajectory.last().copied().unwrap_or(1.0 - self.final_m_q)
    }
}

/// The whole sequential decomposition of one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisentangleRecord {
    pub config: OptimizerConfig,
    pub n_qubits: usize,
    pub sequences: Vec<SequenceResult>,
    /// Mean of the per-sequence final m_q.
    pub average_m: f64,
    pub converged: bool,
}

impl DisentangleRecord {
    pub fn is_complete(&self) -> bool {
        self.sequences.len() == self.n_qubits
    }
}

/// Trains the circuit that disentangles the last qubit of `state`.
///
/// If the state already meets the stopping criterion the circuit is left
/// empty and no epochs are spent.
pub fn run_sequence<R: Rng + ?Sized>(
    state: &StateVector,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<SequenceResult> {
    config.validate()?;
    let n = state.n_qubits();

    let initial_loss = (1.0 - state.prob_last_zero()).clamp(0.0, 1.0);
    if config.is_reached(initial_loss) {
        return Ok(SequenceResult {
            circuit: ParamCircuit::empty(n)?,
            params: Vec::new(),
            loss_trajectory: vec![initial_loss],
            purity_trajectory: vec![subsystem_purity(state)],
            final_m_q: 1.0 - initial_loss,
            epochs_used: 0,
            converged: true,
        });
    }

    let circuit = sequence_circuit(n, config.repetition_r)?;
    let scale = config.init_scale;
    let mut params: Vec<f64> = (0..circuit.n_params())
        .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
        .collect();
    let mut adam = Adam::new(config.adam(), params.len())?;

    let mut loss_trajectory = Vec::new();
    let mut purity_trajectory = Vec::new();
    let mut purity = f64::NAN;
    let mut epoch = 0;
    let converged = loop {
        let (raw_loss, grad) = loss_and_gradient(state, &circuit, &params)?;
        let loss = raw_loss.clamp(0.0, 1.0);
        let reached = config.is_reached(loss);
        let last = reached || epoch >= config.max_epochs_per_sequence;
        if epoch % config.purity_every == 0 || last {
            let mut phi = state.clone();
            circuit.apply(&mut phi, &params)?;
            purity = subsystem_purity(&phi);
        }
        loss_trajectory.push(loss);
        purity_trajectory.push(purity);
        if config.progress_every > 0 && epoch % config.progress_every == 0 {
            info!("n_active={n} epoch={epoch} loss={loss:.3e} purity={purity:.6}");
        }
        if last {
            break reached;
        }
        adam.step(&mut params, &grad)?;
        epoch += 1;
    };
    let final_loss = *loss_trajectory.last().expect("at least one epoch recorded");
    debug!("sequence n_active={n} finished after {epoch} epochs, loss {final_loss:.3e}");

    Ok(SequenceResult {
        circuit,
        params,
        loss_trajectory,
        purity_trajectory,
        final_m_q: 1.0 - final_loss,
        epochs_used: epoch,
        converged,
    })
}

/// Runs sequences `j = 1..=n`, each on the subsystem left by the previous
/// projection. Stops at the first sequence that fails to converge and
/// returns the partial record with `converged = false`.
pub fn disentangle<R: Rng + ?Sized>(
    psi: &StateVector,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<DisentangleRecord> {
    config.validate()?;
    let n = psi.n_qubits();
    let mut current = psi.clone();
    let mut sequences = Vec::with_capacity(n);
    let mut converged = true;
    for j in 1..=n {
        let result = run_sequence(&current, config, rng)?;
        let ok = result.converged;
        if ok && j < n {
            let mut phi = current.clone();
            result.circuit.apply(&mut phi, &result.params)?;
            current = phi.project_out_last()?.0;
        }
        sequences.push(result);
        if !ok {
            converged = false;
            break;
        }
    }
    let average_m = sequences.iter().map(|s| s.final_m_q).sum::<f64>() / sequences.len() as f64;
    Ok(DisentangleRecord {
        config: config.clone(),
        n_qubits: n,
        sequences,
        average_m,
        converged,
    })
}

/// Applies the daggered sequence circuits to |0…0⟩, last sequence first, so
/// that the first sequence's inverse acts last on the full register.
pub fn reconstruct(record: &DisentangleRecord) -> Result<StateVector> {
    if !record.is_complete() {
        return Err(Error::invalid(format!(
            "record holds {} of {} sequences",
            record.sequences.len(),
            record.n_qubits
        )));
    }
    let mut state = StateVector::zero(record.n_qubits)?;
    for seq in record.sequences.iter().rev() {
        seq.circuit.apply_inverse(&mut state, &seq.params)?;
    }
    Ok(state)
}
