//! Circuit containers: parametrized rotations, fixed gates and CNOTs acting
//! on qubits `1..=n_active` of a register.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, discrete_gate, GateLabel, Mat2};
use crate::state::{apply_cnot_bits, apply_mat2, QubitIndex, StateVector};

/// Angles per parametrized rotation.
pub const ANGLES_PER_GATE: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOp", into = "RawOp")]
pub enum GateOp {
    /// V(φ,θ,ω) reading its angles from `params[3·slot..3·slot+3]`.
    ParamV { qubit: QubitIndex, slot: usize },
    Fixed { label: GateLabel, qubit: QubitIndex },
    Cnot { control: QubitIndex, target: QubitIndex },
}

impl GateOp {
    pub fn wires(&self) -> Vec<QubitIndex> {
        match *self {
            GateOp::ParamV { qubit, .. } | GateOp::Fixed { qubit, .. } => vec![qubit],
            GateOp::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn is_single_qubit(&self) -> bool {
        !matches!(self, GateOp::Cnot { .. })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOp {
    kind: String,
    wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param_slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<GateLabel>,
}

impl TryFrom<RawOp> for GateOp {
    type Error = Error;

    fn try_from(raw: RawOp) -> Result<Self> {
        let op = match (raw.kind.as_str(), raw.wires.as_slice(), raw.param_slot, raw.label) {
            ("param_v", &[q], Some(slot), None) => GateOp::ParamV {
                qubit: QubitIndex(q),
                slot,
            },
            ("fixed", &[q], None, Some(label)) => GateOp::Fixed {
                label,
                qubit: QubitIndex(q),
            },
            ("cnot", &[c, t], None, None) if c != t => GateOp::Cnot {
                control: QubitIndex(c),
                target: QubitIndex(t),
            },
            _ => {
                return Err(Error::invalid(format!(
                    "malformed gate op: kind {:?} with wires {:?}",
                    raw.kind, raw.wires
                )))
            }
        };
        Ok(op)
    }
}

impl From<GateOp> for RawOp {
    fn from(op: GateOp) -> Self {
        let wires = op.wires().into_iter().map(|q| q.0).collect();
        match op {
            GateOp::ParamV { slot, .. } => RawOp {
                kind: "param_v".into(),
                wires,
                param_slot: Some(slot),
                label: None,
            },
            GateOp::Fixed { label, .. } => RawOp {
                kind: "fixed".into(),
                wires,
                param_slot: None,
                label: Some(label),
            },
            GateOp::Cnot { .. } => RawOp {
                kind: "cnot".into(),
                wires,
                param_slot: None,
                label: None,
            },
        }
    }
}

/// An ordered gate list on an `n_active`-qubit subsystem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit", into = "RawCircuit")]
pub struct ParamCircuit {
    n_active: usize,
    ops: Vec<GateOp>,
    n_rotations: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    n_active: usize,
    ops: Vec<GateOp>,
}

impl TryFrom<RawCircuit> for ParamCircuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        ParamCircuit::new(raw.n_active, raw.ops)
    }
}

impl From<ParamCircuit> for RawCircuit {
    fn from(c: ParamCircuit) -> Self {
        RawCircuit {
            n_active: c.n_active,
            ops: c.ops,
        }
    }
}

impl ParamCircuit {
    /// Checks wire ranges and that rotation slots are exactly `0..count`.
    pub fn new(n_active: usize, ops: Vec<GateOp>) -> Result<Self> {
        if n_active == 0 {
            return Err(Error::invalid("circuit must act on at least one qubit"));
        }
        let mut slots = Vec::new();
        for op in &ops {
            for q in op.wires() {
                q.bit(n_active)?;
            }
            match *op {
                GateOp::ParamV { slot, .. } => slots.push(slot),
                GateOp::Cnot { control, target } if control == target => {
                    return Err(Error::invalid(format!("CNOT with identical wires {control}")));
                }
                _ => {}
            }
        }
        slots.sort_unstable();
        if slots.iter().enumerate().any(|(i, s)| i != *s) {
            return Err(Error::invalid(
                "rotation slots must cover 0..count exactly once",
            ));
        }
        Ok(Self {
            n_active,
            ops,
            n_rotations: slots.len(),
        })
    }

    /// A circuit with no gates.
    pub fn empty(n_active: usize) -> Result<Self> {
        Self::new(n_active, Vec::new())
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn n_params(&self) -> usize {
        ANGLES_PER_GATE * self.n_rotations
    }

    pub fn n_rotations(&self) -> usize {
        self.n_rotations
    }

    pub fn n_single_qubit_gates(&self) -> usize {
        self.ops.iter().filter(|op| op.is_single_qubit()).count()
    }

    pub fn n_cnots(&self) -> usize {
        self.ops.len() - self.n_single_qubit_gates()
    }

    /// Appends `other`, renumbering its rotation slots after ours.
    pub fn extend(&mut self, other: &ParamCircuit) -> Result<()> {
        if other.n_active > self.n_active {
            return Err(Error::invalid(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_active, self.n_active
            )));
        }
        let offset = self.n_rotations;
        self.ops.extend(other.ops.iter().map(|op| match *op {
            GateOp::ParamV { qubit, slot } => GateOp::ParamV {
                qubit,
                slot: slot + offset,
            },
            other => other,
        }));
        self.n_rotations += other.n_rotations;
        Ok(())
    }

    pub(crate) fn check_inputs(&self, state: &StateVector, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "circuit takes {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        if state.n_qubits() < self.n_active {
            return Err(Error::invalid(format!(
                "{}-qubit circuit cannot act on a {}-qubit state",
                self.n_active,
                state.n_qubits()
            )));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite circuit parameter {bad}")));
        }
        Ok(())
    }

    /// Lowers each op to a kernel instruction for an `n_qubits` register.
    pub(crate) fn compile(&self, n_qubits: usize, params: &[f64]) -> Vec<Kernel> {
        self.ops
            .iter()
            .map(|op| match *op {
                GateOp::ParamV { qubit, slot } => {
                    let p = &params[ANGLES_PER_GATE * slot..ANGLES_PER_GATE * (slot + 1)];
                    Kernel::One {
                        bit: n_qubits - qubit.0,
                        matrix: gates::v_matrix(p[0], p[1], p[2]),
                        slot: Some(slot),
                    }
                }
                GateOp::Fixed { label, qubit } => Kernel::One {
                    bit: n_qubits - qubit.0,
                    matrix: discrete_gate(label),
                    slot: None,
                },
                GateOp::Cnot { control, target } => Kernel::Cnot {
                    cbit: n_qubits - control.0,
                    tbit: n_qubits - target.0,
                },
            })
            .collect()
    }

    /// Applies the ops in list order to qubits `1..=n_active` of `state`.
    pub fn apply(&self, state: &mut StateVector, params: &[f64]) -> Result<()> {
        self.check_inputs(state, params)?;
        let n = state.n_qubits();
        for k in self.compile(n, params) {
            k.apply(state.amps_mut());
        }
        Ok(())
    }

    /// Applies the inverse circuit: reversed order, each gate daggered.
    pub fn apply_inverse(&self, state: &mut StateVector, params: &[f64]) -> Result<()> {
        self.check_inputs(state, params)?;
        let n = state.n_qubits();
        for k in self.compile(n, params).iter().rev() {
            k.apply_dagger(state.amps_mut());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Kernel {
    One {
        bit: usize,
        matrix: Mat2,
        slot: Option<usize>,
    },
    Cnot {
        cbit: usize,
        tbit: usize,
    },
}

impl Kernel {
    pub(crate) fn apply(&self, amps: &mut [num_complex::Complex64]) {
        match self {
            Kernel::One { bit, matrix, .. } => apply_mat2(amps, *bit, matrix),
            Kernel::Cnot { cbit, tbit } => apply_cnot_bits(amps, *cbit, *tbit),
        }
    }

    pub(crate) fn apply_dagger(&self, amps: &mut [num_complex::Complex64]) {
        match self {
            Kernel::One { bit, matrix, .. } => apply_mat2(amps, *bit, &gates::dagger(matrix)),
            Kernel::Cnot { cbit, tbit } => apply_cnot_bits(amps, *cbit, *tbit),
        }
    }
}

/// One layer: a rotation on every qubit, then a CNOT chain with controls
/// `n_active−1, …, 1` each targeting the next qubit down the register, so
/// correlations are pushed toward the measured last qubit.
///
/// Slots are numbered from 0 in qubit order.
pub fn building_block(n_active: usize) -> Result<Vec<GateOp>> {
    if n_active < 2 {
        return Err(Error::invalid(format!(
            "building block needs at least 2 qubits, got {n_active}"
        )));
    }
    let mut ops: Vec<GateOp> = (1..=n_active)
        .map(|q| GateOp::ParamV {
            qubit: QubitIndex(q),
            slot: q - 1,
        })
        .collect();
    ops.extend((1..n_active).rev().map(|c| GateOp::Cnot {
        control: QubitIndex(c),
        target: QubitIndex(c + 1),
    }));
    Ok(ops)
}

/// `m = n_active · r` stacked building blocks. For a single qubit the block
/// degenerates to one rotation, still stacked `m = r` times.
pub fn sequence_circuit(n_active: usize, r: usize) -> Result<ParamCircuit> {
    if n_active == 0 || r == 0 {
        return Err(Error::invalid(format!(
            "sequence circuit needs n_active ≥ 1 and r ≥ 1, got ({n_active}, {r})"
        )));
    }
    let block = if n_active == 1 {
        vec![GateOp::ParamV {
            qubit: QubitIndex(1),
            slot: 0,
        }]
    } else {
        building_block(n_active)?
    };
    let block = ParamCircuit::new(n_active, block)?;
    let mut circuit = ParamCircuit::empty(n_active)?;
    for _ in 0..n_active * r {
        circuit.extend(&block)?;
    }
    Ok(circuit)
}

pub fn apply_circuit(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
) -> Result<StateVector> {
    let mut out = state.clone();
    circuit.apply(&mut out, params)?;
    Ok(out)
}

pub fn apply_circuit_inverse(
    state: &StateVector,
    circuit: &ParamCircuit,
    params: &[f64],
) -> Result<StateVector> {
    let mut out = state.clone();
    circuit.apply_inverse(&mut out, params)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use crate::state::random_state;
    use rand::Rng;

    fn random_params<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn building_block_shapes() {
        let two = building_block(2).unwrap();
        assert_eq!(
            two,
            vec![
                GateOp::ParamV { qubit: QubitIndex(1), slot: 0 },
                GateOp::ParamV { qubit: QubitIndex(2), slot: 1 },
                GateOp::Cnot { control: QubitIndex(1), target: QubitIndex(2) },
            ]
        );
        let five = building_block(5).unwrap();
        assert_eq!(five.iter().filter(|o| o.is_single_qubit()).count(), 5);
        assert_eq!(five.len() - 5, 4);
        // chain ends on the measured qubit
        assert_eq!(
            five[5],
            GateOp::Cnot { control: QubitIndex(4), target: QubitIndex(5) }
        );
        let three = ParamCircuit::new(3, building_block(3).unwrap()).unwrap();
        assert_eq!(three.n_params(), 9);
        assert!(building_block(1).is_err());
    }

    #[test]
    fn sequence_circuit_counts() {
        let c = sequence_circuit(8, 5).unwrap();
        assert_eq!((c.n_single_qubit_gates(), c.n_params()), (320, 960));
        let c = sequence_circuit(2, 5).unwrap();
        assert_eq!((c.n_single_qubit_gates(), c.n_params()), (20, 60));
        let c = sequence_circuit(1, 5).unwrap();
        assert_eq!((c.n_single_qubit_gates(), c.n_params(), c.n_cnots()), (5, 15, 0));
        let c = sequence_circuit(1, 1).unwrap();
        assert_eq!((c.n_single_qubit_gates(), c.n_params()), (1, 3));
        for ns in 2..=8 {
            for r in 1..=5 {
                let c = sequence_circuit(ns, r).unwrap();
                assert_eq!(c.n_single_qubit_gates(), r * ns * ns);
                assert_eq!(c.n_params(), 3 * r * ns * ns);
                assert_eq!(c.n_cnots(), r * ns * (ns - 1));
            }
        }
        assert!(sequence_circuit(0, 1).is_err());
        assert!(sequence_circuit(3, 0).is_err());
    }

    #[test]
    fn empty_and_identity_circuits_leave_state_alone() {
        let psi = random_state(3, &mut seeded_rng(1)).unwrap();
        let empty = ParamCircuit::empty(3).unwrap();
        assert_eq!(apply_circuit(&psi, &empty, &[]).unwrap(), psi);

        let rotations: Vec<GateOp> = (0..6)
            .map(|k| GateOp::ParamV { qubit: QubitIndex(k % 3 + 1), slot: k })
            .collect();
        let c = ParamCircuit::new(3, rotations).unwrap();
        let out = apply_circuit(&psi, &c, &vec![0.0; c.n_params()]).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn inverse_undoes_circuit() {
        let mut rng = seeded_rng(2);
        for n in 2..=4 {
            let psi = random_state(n, &mut rng).unwrap();
            let c = sequence_circuit(n, 2).unwrap();
            let params = random_params(c.n_params(), &mut rng);
            let fwd = apply_circuit(&psi, &c, &params).unwrap();
            assert!((fwd.norm_sqr() - 1.0).abs() < 1e-12);
            let back = apply_circuit_inverse(&fwd, &c, &params).unwrap();
            assert!(back.fidelity(&psi).unwrap() > 1.0 - 1e-10);
            let inv = apply_circuit_inverse(&psi, &c, &params).unwrap();
            let again = apply_circuit(&inv, &c, &params).unwrap();
            assert!(again.fidelity(&psi).unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn x_is_its_own_inverse() {
        let psi = random_state(2, &mut seeded_rng(3)).unwrap();
        let c = ParamCircuit::new(
            2,
            vec![GateOp::Fixed { label: GateLabel::X, qubit: QubitIndex(2) }],
        )
        .unwrap();
        let a = apply_circuit(&psi, &c, &[]).unwrap();
        let b = apply_circuit_inverse(&psi, &c, &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smaller_circuit_acts_on_leading_qubits() {
        let psi = random_state(2, &mut seeded_rng(4)).unwrap();
        let c = sequence_circuit(2, 1).unwrap();
        let params = random_params(c.n_params(), &mut seeded_rng(5));
        let small = apply_circuit(&psi, &c, &params).unwrap();
        let big = apply_circuit(&psi.tensor_zero(), &c, &params).unwrap();
        assert!(big.fidelity(&small.tensor_zero()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        let psi = random_state(2, &mut seeded_rng(6)).unwrap();
        let c = sequence_circuit(2, 1).unwrap();
        assert!(apply_circuit(&psi, &c, &[0.0; 5]).is_err());
        let c3 = sequence_circuit(3, 1).unwrap();
        assert!(apply_circuit(&psi, &c3, &vec![0.0; c3.n_params()]).is_err());
        let mut params = vec![0.0; c.n_params()];
        params[2] = f64::NAN;
        assert!(apply_circuit(&psi, &c, &params).is_err());

        assert!(ParamCircuit::new(2, vec![GateOp::ParamV { qubit: QubitIndex(3), slot: 0 }]).is_err());
        assert!(ParamCircuit::new(2, vec![GateOp::ParamV { qubit: QubitIndex(1), slot: 1 }]).is_err());
        assert!(ParamCircuit::new(
            2,
            vec![GateOp::Cnot { control: QubitIndex(2), target: QubitIndex(2) }]
        )
        .is_err());
    }

    #[test]
    fn json_layout() {
        let c = sequence_circuit(2, 1).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["n_active"], 2);
        assert_eq!(
            v["ops"][0],
            serde_json::json!({"kind": "param_v", "wires": [1], "param_slot": 0})
        );
        assert_eq!(v["ops"][2], serde_json::json!({"kind": "cnot", "wires": [1, 2]}));
        let fixed = GateOp::Fixed { label: GateLabel::T, qubit: QubitIndex(1) };
        assert_eq!(
            serde_json::to_value(fixed).unwrap(),
            serde_json::json!({"kind": "fixed", "wires": [1], "label": "T"})
        );
        let back: ParamCircuit = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
        let bad = serde_json::json!({"kind": "cnot", "wires": [1]});
        assert!(serde_json::from_value::<GateOp>(bad).is_err());
    }
}
