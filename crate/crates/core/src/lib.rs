//! Quantum state tomography by sequential disentanglement.
//!
//! An unknown pure state is driven to |0…0⟩ one qubit at a time: each
//! sequence finds a circuit that leaves the last qubit of the remaining
//! subsystem in |0⟩ (judged only from that qubit's measurement probability),
//! after which the qubit is dropped. The inverse circuits applied to
//! |0…0⟩ give the state back up to a global phase.
//!
//! Two circuit designers are provided: [`vqc`] trains continuous rotations
//! with exact adjoint gradients and Adam, and [`rl`] assembles circuits from
//! a discrete gate set with a REINFORCE policy. [`bench`] holds the gate and
//! gradient-step accounting and the precision sweeps.

pub mod action;
pub mod bench;
pub mod circuit;
pub mod density;
pub mod error;
pub mod gates;
pub mod optim;
pub mod rl;
pub mod state;
pub mod vqc;

pub use action::{action_set, apply_action, Action};
pub use circuit::{
    apply_circuit, apply_circuit_inverse, building_block, sequence_circuit, GateOp, ParamCircuit,
};
pub use density::{purity, reduced_density, DensityMatrix};
pub use error::{Error, Result};
pub use gates::{discrete_gate, v_gate, GateLabel, Mat2, VParams};
pub use state::{fidelity, random_state, zero_state, QubitIndex, StateVector};

/// The deterministic generator used for every seeded run.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}
