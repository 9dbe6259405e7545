//! Single-qubit gate matrices: the three-angle rotation V(φ, θ, ω) and the
//! discrete set {I, X, Y, Z, H, T, S}.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major 2×2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Angles of one parametrized rotation, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VParams {
    pub phi: f64,
    pub theta: f64,
    pub omega: f64,
}

impl VParams {
    pub fn new(phi: f64, theta: f64, omega: f64) -> Self {
        Self { phi, theta, omega }
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self::new(p[0], p[1], p[2])
    }

    /// Angles whose rotation is the inverse of this one.
    pub fn inverse(self) -> Self {
        Self::new(-self.omega, -self.theta, -self.phi)
    }
}

/// ```text
/// V(φ,θ,ω) = [ cos(θ/2)·e^{-i(φ+ω)/2}   -sin(θ/2)·e^{ i(φ-ω)/2} ]
///            [ sin(θ/2)·e^{-i(φ-ω)/2}    cos(θ/2)·e^{ i(φ+ω)/2} ]
/// ```
pub fn v_gate(p: VParams) -> Result<Mat2> {
    if !(p.phi.is_finite() && p.theta.is_finite() && p.omega.is_finite()) {
        return Err(Error::invalid(format!("non-finite rotation angles {p:?}")));
    }
    Ok(v_matrix(p.phi, p.theta, p.omega))
}

pub(crate) fn v_matrix(phi: f64, theta: f64, omega: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let sum = C64::from_polar(1.0, -(phi + omega) / 2.0);
    let diff = C64::from_polar(1.0, (phi - omega) / 2.0);
    [
        [sum * c, -diff * s],
        [diff.conj() * s, sum.conj() * c],
    ]
}

/// Partial derivatives of V with respect to (φ, θ, ω).
pub(crate) fn v_derivatives(phi: f64, theta: f64, omega: f64) -> [Mat2; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    let sum = C64::from_polar(1.0, -(phi + omega) / 2.0);
    let diff = C64::from_polar(1.0, (phi - omega) / 2.0);
    let v = [
        [sum * c, -diff * s],
        [diff.conj() * s, sum.conj() * c],
    ];
    let half_i = C64::new(0.0, 0.5);
    let d_phi = [
        [-half_i * v[0][0], half_i * v[0][1]],
        [-half_i * v[1][0], half_i * v[1][1]],
    ];
    let d_omega = [
        [-half_i * v[0][0], -half_i * v[0][1]],
        [half_i * v[1][0], half_i * v[1][1]],
    ];
    let d_theta = [
        [sum * (-s / 2.0), -diff * (c / 2.0)],
        [diff.conj() * (c / 2.0), sum.conj() * (-s / 2.0)],
    ];
    [d_phi, d_theta, d_omega]
}

/// The discrete single-qubit gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateLabel {
    I,
    X,
    Y,
    Z,
    H,
    T,
    S,
}

impl GateLabel {
    pub const ALL: [GateLabel; 7] = [
        GateLabel::I,
        GateLabel::X,
        GateLabel::Y,
        GateLabel::Z,
        GateLabel::H,
        GateLabel::T,
        GateLabel::S,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateLabel::I => "I",
            GateLabel::X => "X",
            GateLabel::Y => "Y",
            GateLabel::Z => "Z",
            GateLabel::H => "H",
            GateLabel::T => "T",
            GateLabel::S => "S",
        }
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateLabel::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown gate label {s:?}")))
    }
}

pub fn discrete_gate(label: GateLabel) -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match label {
        GateLabel::I => [[ONE, ZERO], [ZERO, ONE]],
        GateLabel::X => [[ZERO, ONE], [ONE, ZERO]],
        GateLabel::Y => [[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]],
        GateLabel::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateLabel::H => [[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]],
        GateLabel::T => [[ONE, ZERO], [ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        GateLabel::S => [[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]],
    }
}

pub fn dagger(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// max |(G†G − I)_ij|.
pub fn unitarity_error(m: &Mat2) -> f64 {
    let p = matmul(&dagger(m), m);
    let mut err: f64 = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            err = err.max((cell - target).norm());
        }
    }
    err
}

pub fn is_unitary(m: &Mat2, tol: f64) -> bool {
    m.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite()) && unitarity_error(m) <= tol
}
