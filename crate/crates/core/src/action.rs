//! Discrete actions: a gate from the discrete set on a control qubit,
//! followed by a CNOT from that control onto the measured (last) qubit.

use serde::{Deserialize, Serialize};

use crate::circuit::{GateOp, ParamCircuit};
use crate::error::{Error, Result};
use crate::gates::{discrete_gate, GateLabel};
use crate::state::{QubitIndex, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub gate_label: GateLabel,
    pub control_qubit: QubitIndex,
}

impl Action {
    pub fn new(gate_label: GateLabel, control_qubit: usize) -> Self {
        Self {
            gate_label,
            control_qubit: QubitIndex(control_qubit),
        }
    }

    fn check(&self, n_active: usize) -> Result<()> {
        if self.control_qubit.0 == 0 || self.control_qubit.0 >= n_active {
            return Err(Error::invalid(format!(
                "action control {} must lie in 1..{n_active}",
                self.control_qubit
            )));
        }
        Ok(())
    }

    /// The equivalent two-op gate list on an `n_active`-qubit subsystem.
    pub fn to_ops(&self, n_active: usize) -> Result<[GateOp; 2]> {
        self.check(n_active)?;
        Ok([
            GateOp::Fixed {
                label: self.gate_label,
                qubit: self.control_qubit,
            },
            GateOp::Cnot {
                control: self.control_qubit,
                target: QubitIndex(n_active),
            },
        ])
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        let n = state.n_qubits();
        self.check(n)?;
        state.apply_1q(&discrete_gate(self.gate_label), self.control_qubit)?;
        state.apply_cnot(self.control_qubit, QubitIndex(n))
    }
}

/// All actions for an `n_active`-qubit subsystem, gate-major:
/// index `g · (n_active − 1) + (control − 1)`.
pub fn action_set(n_active: usize) -> Result<Vec<Action>> {
    if n_active < 2 {
        return Err(Error::invalid(format!(
            "action set needs at least 2 qubits, got {n_active}"
        )));
    }
    Ok(GateLabel::ALL
        .into_iter()
        .flat_map(|g| (1..n_active).map(move |c| Action::new(g, c)))
        .collect())
}

pub fn apply_action(state: &StateVector, action: &Action) -> Result<StateVector> {
    let mut out = state.clone();
    action.apply(&mut out)?;
    Ok(out)
}

pub fn apply_actions(state: &StateVector, actions: &[Action]) -> Result<StateVector> {
    let mut out = state.clone();
    for a in actions {
        a.apply(&mut out)?;
    }
    Ok(out)
}

/// Undoes `actions` (applied to a register whose measured qubit is `n_active`)
/// on the leading `n_active` qubits of `state`.
pub fn apply_actions_inverse(
    state: &StateVector,
    actions: &[Action],
    n_active: usize,
) -> Result<StateVector> {
    let circuit = actions_circuit(actions, n_active)?;
    crate::circuit::apply_circuit_inverse(state, &circuit, &[])
}

/// Fixed-gate circuit equivalent to an action sequence.
pub fn actions_circuit(actions: &[Action], n_active: usize) -> Result<ParamCircuit> {
    let mut ops = Vec::with_capacity(2 * actions.len());
    for a in actions {
        ops.extend(a.to_ops(n_active)?);
    }
    ParamCircuit::new(n_active, ops)
}
