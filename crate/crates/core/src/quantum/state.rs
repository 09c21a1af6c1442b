use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{Mat2, Mat4, C64};
use crate::error::{Error, Result};

/// Numerical tolerance of the density-matrix validity checks.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Self {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b as u8
    }
}

impl TryFrom<u8> for Bit {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Bit::Zero),
            1 => Ok(Bit::One),
            other => Err(format!("bit value must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    /// The ket `|b_α>` in the computational (Z) basis.
    pub fn ket(self, bit: Bit) -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self, bit) {
            (Basis::Z, Bit::Zero) => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            (Basis::Z, Bit::One) => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            (Basis::X, Bit::Zero) => [C64::new(h, 0.0), C64::new(h, 0.0)],
            (Basis::X, Bit::One) => [C64::new(h, 0.0), C64::new(-h, 0.0)],
        }
    }

    /// `|b_α><b_α|`, with the X projectors written out exactly.
    pub fn projector(self, bit: Bit) -> Mat2 {
        match (self, bit) {
            (Basis::Z, Bit::Zero) => Mat2::from_real([[1.0, 0.0], [0.0, 0.0]]),
            (Basis::Z, Bit::One) => Mat2::from_real([[0.0, 0.0], [0.0, 1.0]]),
            (Basis::X, Bit::Zero) => Mat2::from_real([[0.5, 0.5], [0.5, 0.5]]),
            (Basis::X, Bit::One) => Mat2::from_real([[0.5, -0.5], [-0.5, 0.5]]),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

/// A (possibly sub-normalized) single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density2(Mat2);

/// A (possibly sub-normalized) two-qubit density matrix on A⊗B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density4(Mat4);

impl Density2 {
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let min = m.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        check_trace(m.trace().re)?;
        Ok(Density2(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat2) -> Self {
        Density2(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn maximally_mixed() -> Self {
        Density2(Mat2::identity().scale(0.5))
    }
}

impl Density4 {
    pub fn new(m: Mat4) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let min = m.hermitian_eigenvalues()[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        check_trace(m.trace().re)?;
        Ok(Density4(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat4) -> Self {
        Density4(m)
    }

    pub fn product(a: &Density2, b: &Density2) -> Self {
        Density4(Mat4::kron(a.matrix(), b.matrix()))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn maximally_mixed() -> Self {
        Density4(Mat4::identity().scale(0.25))
    }

    /// State of A with B traced out.
    pub fn reduced_a(&self) -> Density2 {
        Density2(self.0.partial_trace_b())
    }

    /// State of B with A traced out.
    pub fn reduced_b(&self) -> Density2 {
        Density2(self.0.partial_trace_a())
    }

    /// Convex mixture `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Density4, w: f64) -> Density4 {
        Density4(self.0.scale(w) + other.0.scale(1.0 - w))
    }

    pub(crate) fn normalized(m: Mat4, trace: f64) -> Self {
        Density4(m.scale(1.0 / trace))
    }
}

fn check_trace(tr: f64) -> Result<()> {
    if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&tr) {
        return Err(Error::InvalidState(format!("trace {tr} outside [0, 1]")));
    }
    Ok(())
}

/// Alice's single-photon state `|b_α><b_α|`.
pub fn source_state(bit: Bit, basis: Basis) -> Density2 {
    Density2(basis.projector(bit))
}

/// `|φ+><φ+|` with `|φ+> = (|00> + |11>)/√2`.
pub fn bell_pair() -> Density4 {
    let mut m = Mat4::zero();
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m.0[i][j] = Complex64::new(0.5, 0.0);
    }
    Density4(m)
}

/// `|φ-><φ-|` with `|φ-> = (|00> - |11>)/√2`.
pub fn bell_phi_minus() -> Density4 {
    let mut m = Mat4::zero();
    m.0[0][0] = Complex64::new(0.5, 0.0);
    m.0[3][3] = Complex64::new(0.5, 0.0);
    m.0[0][3] = Complex64::new(-0.5, 0.0);
    m.0[3][0] = Complex64::new(-0.5, 0.0);
    Density4(m)
}
