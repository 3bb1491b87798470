//! Bell states, rank-two Bell mixtures and the two-photon hyperentangled register.
//!
//! The canonical 16-dimensional basis groups qubits per photon:
//! `[A-pol, A-spatial, B-pol, B-spatial]`, with `0` meaning H (or a1/b1) and
//! `1` meaning V (or a2/b2). Two-qubit states of a single degree of freedom use
//! `[A, B]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{self, kron, ComplexMatrix, Register, StateVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    Polarization,
    Spatial,
}

/// Subsystems of [`HyperRegister`], in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    PolA = 0,
    SpaA = 1,
    PolB = 2,
    SpaB = 3,
}

/// The fixed four-qubit layout `[A-pol, A-spatial, B-pol, B-spatial]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HyperRegister;

impl HyperRegister {
    pub const ORDER: [Subsystem; 4] = [Subsystem::PolA, Subsystem::SpaA, Subsystem::PolB, Subsystem::SpaB];
    pub const DIM: usize = 16;

    pub fn register(&self) -> Register {
        Register::qubits(4)
    }

    /// Flat basis index for the given qubit values.
    pub fn index(pol_a: usize, spa_a: usize, pol_b: usize, spa_b: usize) -> usize {
        (pol_a << 3) | (spa_a << 2) | (pol_b << 1) | spa_b
    }
}

/// Reordering from the per-DOF layout `[A-pol, B-pol, A-spa, B-spa]` (how the
/// product `rho_P ⊗ rho_S` comes out of `kron`) into the per-photon canonical
/// layout. It swaps the middle two qubits, so it is its own inverse.
pub const DOF_TO_PHOTON: [usize; 4] = [0, 2, 1, 3];

pub fn dof_to_photon_order<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    qmath::permute_subsystems(rho, &Register::qubits(4), &DOF_TO_PHOTON)
}

pub fn photon_to_dof_order<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    qmath::permute_subsystems(rho, &Register::qubits(4), &DOF_TO_PHOTON)
}

/// Normalized Bell vector in the two-qubit `[A, B]` basis. The degree of freedom
/// only names the modes (H/V or a1/a2, b1/b2); the amplitudes are identical.
pub fn bell_state<T: Scalar>(kind: BellKind, _dof: Dof) -> StateVector<T> {
    let h = T::FRAC_1_SQRT_2();
    let z = T::zero();
    let amps = match kind {
        BellKind::PhiPlus => [h, z, z, h],
        BellKind::PhiMinus => [h, z, z, -h],
        BellKind::PsiPlus => [z, h, h, z],
        BellKind::PsiMinus => [z, h, -h, z],
    };
    StateVector::new(amps.iter().map(|&a| num_complex::Complex::new(a, z)).collect())
}

/// `F |dominant><dominant| + (1 - F) |error><error|`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTwoMixture<T> {
    pub dominant: BellKind,
    pub error: BellKind,
    pub fidelity: T,
}

impl<T: Scalar> RankTwoMixture<T> {
    pub fn new(dominant: BellKind, error: BellKind, fidelity: T) -> Result<Self> {
        if dominant == error {
            return Err(Error::Invalid(format!(
                "dominant and error Bell states must differ (both {dominant:?})"
            )));
        }
        check_probability("fidelity", fidelity)?;
        Ok(Self {
            dominant,
            error,
            fidelity,
        })
    }

    /// The bit-flip family `F Φ+ + (1-F) Ψ+`.
    pub fn bit_flip(fidelity: T) -> Result<Self> {
        Self::new(BellKind::PhiPlus, BellKind::PsiPlus, fidelity)
    }

    /// The phase-flip family `F Φ+ + (1-F) Φ-`.
    pub fn phase_flip(fidelity: T) -> Result<Self> {
        Self::new(BellKind::PhiPlus, BellKind::PhiMinus, fidelity)
    }
}

pub fn mixture<T: Scalar>(spec: &RankTwoMixture<T>) -> Result<ComplexMatrix<T>> {
    check_probability("fidelity", spec.fidelity)?;
    if spec.dominant == spec.error {
        return Err(Error::Invalid("dominant and error Bell states must differ".into()));
    }
    let dom = ComplexMatrix::projector(&bell_state::<T>(spec.dominant, Dof::Polarization));
    let err = ComplexMatrix::projector(&bell_state::<T>(spec.error, Dof::Polarization));
    Ok(&dom.scale(spec.fidelity) + &err.scale(T::one() - spec.fidelity))
}

/// `rho_P ⊗ rho_S` laid out in the canonical per-photon order.
pub fn hyper_state<T: Scalar>(pol: &ComplexMatrix<T>, spa: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    for m in [pol, spa] {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::Dimension {
                expected: "4x4 two-qubit state".into(),
                found: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        qmath::require_physical(m)?;
    }
    dof_to_photon_order(&kron(pol, spa))
}

/// The noiseless `|Φ+> ⊗ |φ+>` source state.
pub fn ideal_hyper_state<T: Scalar>() -> ComplexMatrix<T> {
    let p = ComplexMatrix::projector(&bell_state::<T>(BellKind::PhiPlus, Dof::Polarization));
    let s = ComplexMatrix::projector(&bell_state::<T>(BellKind::PhiPlus, Dof::Spatial));
    hyper_state(&p, &s).expect("Bell projectors are physical")
}

/// Two-photon polarization state (spatial modes traced out).
pub fn polarization_marginal<T: Scalar>(rho16: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    qmath::partial_trace(
        rho16,
        &HyperRegister.register(),
        &[Subsystem::PolA as usize, Subsystem::PolB as usize],
    )
}

/// Two-photon spatial-mode state (polarization traced out).
pub fn spatial_marginal<T: Scalar>(rho16: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    qmath::partial_trace(
        rho16,
        &HyperRegister.register(),
        &[Subsystem::SpaA as usize, Subsystem::SpaB as usize],
    )
}

pub(crate) fn check_probability<T: Scalar>(what: &'static str, p: T) -> Result<()> {
    if p.is_finite() && p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::out_of_range(what, p.as_f64(), "[0, 1]"))
    }
}
