//! Dense pure-state simulator.
//!
//! Qubits are addressed 1-based with qubit 1 as the most significant bit of
//! the basis label. The "last" qubit (index `n_qubits`) is the least
//! significant bit, so its |0⟩ branch lives on the even amplitudes.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, Mat2};

/// Tolerance for the unit-norm check on externally supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Below this probability a projection onto |0⟩ of the last qubit is refused.
pub const PROJECTION_THRESHOLD: f64 = 1e-12;

/// 1-based qubit index; qubit 1 is the most significant bit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitIndex(pub usize);

impl QubitIndex {
    /// Bit position (from the least significant end) of this qubit in an
    /// `n_qubits` register.
    pub fn bit(self, n_qubits: usize) -> Result<usize> {
        if self.0 == 0 || self.0 > n_qubits {
            return Err(Error::invalid(format!(
                "qubit index {} out of range 1..={n_qubits}",
                self.0
            )));
        }
        Ok(n_qubits - self.0)
    }
}

impl From<usize> for QubitIndex {
    fn from(q: usize) -> Self {
        Self(q)
    }
}

impl std::fmt::Display for QubitIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// A normalized pure state over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState", into = "RawState")]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// |0…0⟩ on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    /// Random state with every unnormalized coefficient `a + ib` drawn with
    /// `a, b` uniform on [0, 1), then normalized. All amplitudes end up in
    /// the first quadrant of the complex plane.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| {
                let re: f64 = rng.random();
                let im: f64 = rng.random();
                C64::new(re, im)
            })
            .collect();
        Self::normalized(n, amps)
    }

    /// Haar-random state: i.i.d. complex Gaussian coefficients, normalized.
    pub fn random_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(n, amps)
    }

    /// Builds a state from amplitudes that must already have unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        let norm = norm_sqr(&amps);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm² is {norm}, expected 1")));
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(n: usize, mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::invalid(format!(
                "{} amplitudes cannot describe {n} qubits",
                amps.len()
            )));
        }
        let norm = norm_sqr(&amps);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        let scale = norm.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Applies a 2×2 unitary to qubit `q`.
    pub fn apply_1q(&mut self, u: &Mat2, q: QubitIndex) -> Result<()> {
        if !gates::is_unitary(u, NORM_TOLERANCE) {
            return Err(Error::invalid("single-qubit gate is not unitary"));
        }
        let bit = q.bit(self.n_qubits)?;
        apply_mat2(&mut self.amps, bit, u);
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: QubitIndex, target: QubitIndex) -> Result<()> {
        if control == target {
            return Err(Error::invalid(format!("CNOT control and target are both {control}")));
        }
        let cbit = control.bit(self.n_qubits)?;
        let tbit = target.bit(self.n_qubits)?;
        apply_cnot_bits(&mut self.amps, cbit, tbit);
        Ok(())
    }

    /// Probability that the last qubit reads 0.
    pub fn prob_last_zero(&self) -> f64 {
        self.amps.iter().step_by(2).map(|a| a.norm_sqr()).sum()
    }

    /// Probability that the last qubit reads 1.
    pub fn prob_last_one(&self) -> f64 {
        self.amps.iter().skip(1).step_by(2).map(|a| a.norm_sqr()).sum()
    }

    /// Marginal probability that qubit `q` reads 0.
    pub fn prob_zero(&self, q: QubitIndex) -> Result<f64> {
        let bit = q.bit(self.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k >> bit & 1 == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects the last qubit onto |0⟩, drops it, and renormalizes.
    ///
    /// Returns the `n − 1` qubit subsystem and the projection probability.
    pub fn project_out_last(&self) -> Result<(StateVector, f64)> {
        if self.n_qubits < 2 {
            return Err(Error::invalid("cannot project out the only qubit"));
        }
        let prob = self.prob_last_zero();
        if prob <= PROJECTION_THRESHOLD {
            return Err(Error::DegenerateProjection {
                prob,
                threshold: PROJECTION_THRESHOLD,
            });
        }
        let amps: Vec<C64> = self.amps.iter().step_by(2).copied().collect();
        let sub = StateVector::normalized(self.n_qubits - 1, amps)?;
        Ok((sub, prob))
    }

    /// `self ⊗ |0⟩`, appending a fresh last qubit.
    pub fn tensor_zero(&self) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len() * 2];
        for (k, a) in self.amps.iter().enumerate() {
            amps[2 * k] = *a;
        }
        StateVector {
            n_qubits: self.n_qubits + 1,
            amps,
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::invalid(format!(
                "qubit count mismatch: {} vs {}",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Multiplies every amplitude by e^{iθ}.
    pub fn with_global_phase(&self, theta: f64) -> StateVector {
        let phase = C64::from_polar(1.0, theta);
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }
}

/// |0…0⟩ on `n` qubits.
pub fn zero_state(n: usize) -> Result<StateVector> {
    StateVector::zero(n)
}

/// First-quadrant random state, see [`StateVector::random`].
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    StateVector::random(n, rng)
}

pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.fidelity(b)
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be at least 1"));
    }
    if n > 30 {
        return Err(Error::invalid(format!("{n} qubits exceed the dense simulator limit")));
    }
    Ok(())
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "amplitude count {len} is not a power of two ≥ 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// In-place `m` on the qubit at bit position `bit`.
pub(crate) fn apply_mat2(amps: &mut [C64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let a = amps[i];
            let b = amps[i + stride];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i + stride] = m[1][0] * a + m[1][1] * b;
        }
    }
}

pub(crate) fn apply_cnot_bits(amps: &mut [C64], cbit: usize, tbit: usize) {
    let cmask = 1usize << cbit;
    let tmask = 1usize << tbit;
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    n_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<RawState> for StateVector {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        let amps: Vec<C64> = raw.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        let state = StateVector::from_amplitudes(amps)?;
        if state.n_qubits != raw.n_qubits {
            return Err(Error::invalid(format!(
                "n_qubits {} does not match {} amplitudes",
                raw.n_qubits,
                state.dim()
            )));
        }
        Ok(state)
    }
}

impl From<StateVector> for RawState {
    fn from(s: StateVector) -> Self {
        RawState {
            n_qubits: s.n_qubits,
            amplitudes: s.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}
