use rand::Rng;

use super::channel::choose_first_branch;
use super::matrix::Mat2;
use super::state::{Basis, Bit, Density2, Density4, STATE_TOL};
use crate::error::{Error, Result};

/// Tolerance on the Born distribution of a two-party measurement.
pub const BORN_TOL: f64 = 1e-8;

/// Bob's measurement: `{M_0α, M_1α, M_fail}` for α ∈ {Z, X} with a single
/// failure element shared by both bases.
#[derive(Debug, Clone)]
pub struct BobPovm {
    elements: [[Mat2; 2]; 2],
    m_fail: Mat2,
    sqrt_fail: Mat2,
    sqrt_pass: Mat2,
    pass: Mat2,
    // Two-outcome measurement on the detected branch:
    // (I - M_fail)^{-1/2} M_bα (I - M_fail)^{-1/2}.
    conditional: [[Mat2; 2]; 2],
}

/// Bob's raw outcome in the prepare-and-measure picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobOutcome {
    Detected(Bit),
    Failed,
}

fn basis_slot(basis: Basis) -> usize {
    match basis {
        Basis::Z => 0,
        Basis::X => 1,
    }
}

impl BobPovm {
    pub fn new(m0z: Mat2, m1z: Mat2, m0x: Mat2, m1x: Mat2, m_fail: Mat2) -> Result<Self> {
        for (name, m) in [("m0z", m0z), ("m1z", m1z), ("m0x", m0x), ("m1x", m1x), ("m_fail", m_fail)] {
            if m.hermiticity_defect() > STATE_TOL || m.min_eigenvalue() < -STATE_TOL {
                return Err(Error::InvalidPovm(format!("{name} is not positive semidefinite")));
            }
        }
        let id = Mat2::identity();
        let z_defect = (m0z + m1z + m_fail).max_abs_diff(&id);
        let x_defect = (m0x + m1x + m_fail).max_abs_diff(&id);
        if z_defect >= STATE_TOL || x_defect >= STATE_TOL {
            return Err(Error::InvalidPovm(format!(
                "completeness violated (Z defect {z_defect:e}, X defect {x_defect:e})"
            )));
        }
        let pass = id - m_fail;
        let inv = pass.psd_pinv_sqrt();
        let cond = |m: Mat2| inv * m * inv;
        Ok(Self {
            elements: [[m0z, m1z], [m0x, m1x]],
            m_fail,
            sqrt_fail: m_fail.psd_sqrt(),
            sqrt_pass: pass.psd_sqrt(),
            pass,
            conditional: [[cond(m0z), cond(m1z)], [cond(m0x), cond(m1x)]],
        })
    }

    /// Perfect detector: projective Z and X measurements, `M_fail = 0`.
    pub fn ideal() -> Self {
        Self::with_efficiency(1.0).expect("unit efficiency is valid")
    }

    /// Basis-independent efficiency `eta`: `M_bα = eta·|b_α><b_α|`, `M_fail = (1-eta)·I`.
    pub fn with_efficiency(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidPovm(format!("detector efficiency {eta} outside [0, 1]")));
        }
        let el = |basis: Basis, bit: Bit| basis.projector(bit).scale(eta);
        Self::new(
            el(Basis::Z, Bit::Zero),
            el(Basis::Z, Bit::One),
            el(Basis::X, Bit::Zero),
            el(Basis::X, Bit::One),
            Mat2::identity().scale(1.0 - eta),
        )
    }

    pub fn element(&self, basis: Basis, bit: Bit) -> &Mat2 {
        &self.elements[basis_slot(basis)][bit.index()]
    }

    pub fn m_fail(&self) -> &Mat2 {
        &self.m_fail
    }

    /// Element of the two-outcome measurement performed after a successful filter.
    pub fn conditional(&self, basis: Basis, bit: Bit) -> &Mat2 {
        &self.conditional[basis_slot(basis)][bit.index()]
    }

    /// `Pr[detected]` for a pair state when Bob measures in `basis`.
    pub fn detection_probability(&self, rho: &Density4, basis: Basis) -> f64 {
        let m = rho.matrix();
        m.expect_b(self.element(basis, Bit::Zero)) + m.expect_b(self.element(basis, Bit::One))
    }

    /// Three-outcome measurement of a single qubit in `basis`.
    pub fn measure_qubit<R: Rng + ?Sized>(&self, rho: &Density2, basis: Basis, rng: &mut R) -> BobOutcome {
        let m = rho.matrix();
        let p0 = m.trace_product(self.element(basis, Bit::Zero)).max(0.0);
        let p1 = m.trace_product(self.element(basis, Bit::One)).max(0.0);
        let pf = m.trace_product(&self.m_fail).max(0.0);
        let u: f64 = rng.random::<f64>() * (p0 + p1 + pf);
        if u < p0 {
            BobOutcome::Detected(Bit::Zero)
        } else if u < p0 + p1 {
            BobOutcome::Detected(Bit::One)
        } else {
            BobOutcome::Failed
        }
    }
}

/// Bob's filtering step `{√M_fail, √(I − M_fail)}` on the B factor.
///
/// Returns `(detected, renormalized post-filter state)`.
pub fn filter_detect<R: Rng + ?Sized>(rho: &Density4, povm: &BobPovm, rng: &mut R) -> Result<(bool, Density4)> {
    let m = rho.matrix();
    let p_detect = m.expect_b(&povm.pass);
    let p_fail = m.expect_b(&povm.m_fail);
    if choose_first_branch(p_detect, p_fail, rng)? {
        let out = m.sandwich_b(&povm.sqrt_pass);
        Ok((true, Density4::normalized(out, p_detect)))
    } else {
        let out = m.sandwich_b(&povm.sqrt_fail);
        Ok((false, Density4::normalized(out, p_fail)))
    }
}

/// Joint Born distribution `P(a, b)` for Alice measuring `basis_a` with
/// projectors and Bob measuring `basis_b` with the conditional POVM.
pub fn pair_distribution(rho: &Density4, basis_a: Basis, basis_b: Basis, povm: &BobPovm) -> Result<[[f64; 2]; 2]> {
    let m = rho.matrix();
    let mut probs = [[0.0; 2]; 2];
    let mut sum = 0.0;
    for a in [Bit::Zero, Bit::One] {
        for b in [Bit::Zero, Bit::One] {
            let p = m.expect_product(&basis_a.projector(a), povm.conditional(basis_b, b));
            if p < -STATE_TOL {
                return Err(Error::NormalizationError { sum: p });
            }
            probs[a.index()][b.index()] = p.max(0.0);
            sum += p;
        }
    }
    if (sum - 1.0).abs() > BORN_TOL {
        return Err(Error::NormalizationError { sum });
    }
    Ok(probs)
}

/// Samples Alice's and Bob's outcomes on a detected pair.
pub fn measure_pair<R: Rng + ?Sized>(
    rho: &Density4,
    basis_a: Basis,
    basis_b: Basis,
    povm: &BobPovm,
    rng: &mut R,
) -> Result<(Bit, Bit)> {
    let probs = pair_distribution(rho, basis_a, basis_b, povm)?;
    let total: f64 = probs.iter().flatten().sum();
    let mut u: f64 = rng.random::<f64>() * total;
    let mut last = (Bit::One, Bit::One);
    for a in [Bit::Zero, Bit::One] {
        for b in [Bit::Zero, Bit::One] {
            let p = probs[a.index()][b.index()];
            if p > 0.0 {
                last = (a, b);
                if u < p {
                    return Ok((a, b));
                }
            }
            u -= p;
        }
    }
    Ok(last)
}

/// `Tr(ρ Π_err^X)` with `Π_err^X = |0_X><0_X| ⊗ N_1X + |1_X><1_X| ⊗ N_0X`.
pub fn prob_phase_error(rho: &Density4, povm: &BobPovm) -> f64 {
    let m = rho.matrix();
    m.expect_product(&Basis::X.projector(Bit::Zero), povm.conditional(Basis::X, Bit::One))
        + m.expect_product(&Basis::X.projector(Bit::One), povm.conditional(Basis::X, Bit::Zero))
}
