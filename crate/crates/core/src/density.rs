//! Reduced density matrices and purity diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::state::StateVector;

/// Dense `dim × dim` density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace (both within 1e-10).
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "{} entries do not form a {dim}×{dim} matrix",
                entries.len()
            )));
        }
        let rho = Self { dim, entries };
        let herm_err = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| (rho.get(i, j) - rho.get(j, i).conj()).norm())
            .fold(0.0, f64::max);
        if herm_err > 1e-10 {
            return Err(Error::invalid(format!("matrix is not Hermitian (err {herm_err:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("trace is {tr}, expected 1")));
        }
        Ok(rho)
    }

    /// |ψ⟩⟨ψ|.
    pub fn pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for x in a {
            for y in a {
                entries.push(x * y.conj());
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr(ρ²). For Hermitian ρ this is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    /// Eigenvalues (ascending) and matching orthonormal eigenvectors.
    pub fn eigh(&self) -> (Vec<f64>, Vec<Vec<C64>>) {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0[0]
    }
}

/// Partial trace over the last qubit: keeps qubits `1..n`.
pub fn reduced_density(state: &StateVector) -> Result<DensityMatrix> {
    if state.n_qubits() < 2 {
        return Err(Error::invalid("partial trace needs at least two qubits"));
    }
    let a = state.amplitudes();
    let dim = a.len() / 2;
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in r..dim {
            let v = a[2 * r] * a[2 * c].conj() + a[2 * r + 1] * a[2 * c + 1].conj();
            entries[r * dim + c] = v;
            entries[c * dim + r] = v.conj();
        }
    }
    Ok(DensityMatrix { dim, entries })
}

/// The last qubit's own 2×2 reduced density matrix (everything else traced out).
pub fn last_qubit_density(state: &StateVector) -> DensityMatrix {
    let a = state.amplitudes();
    let mut m = [C64::new(0.0, 0.0); 4];
    for pair in a.chunks_exact(2) {
        m[0] += pair[0].norm_sqr();
        m[1] += pair[0] * pair[1].conj();
        m[3] += pair[1].norm_sqr();
    }
    m[2] = m[1].conj();
    DensityMatrix {
        dim: 2,
        entries: m.to_vec(),
    }
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Purity of the subsystem left after tracing out the last qubit.
/// A single qubit has an empty complement, reported as purity 1.
pub fn subsystem_purity(state: &StateVector) -> f64 {
    reduced_density(state).map_or(1.0, |rho| rho.purity())
}
