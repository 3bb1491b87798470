//! Single-copy purification: an intra-photon CNOT (spatial control, polarization
//! target) on each photon, then post-selection on equal polarizations.
//!
//! Both photons in H exit at D1D2, both in V at D3D4; unequal polarizations are
//! discarded. The surviving spatial-mode pair is the purified state. Physically
//! it is converted back into polarization before analysis; here that conversion
//! is a relabeling of the same two-qubit matrix.

use serde::{Deserialize, Serialize};

use crate::channels::{hadamard_convert, Flavor};
use crate::error::{Error, Result};
use crate::fixture::MatrixFile;
use crate::qmath::{self, fidelity_pure, kron, ComplexMatrix};
use crate::scalar::Scalar;
use crate::states::{bell_state, polarization_marginal, spatial_marginal, BellKind, Dof, HyperRegister};

/// Below this total weight the protocol is treated as never succeeding.
pub const MIN_SUCCESS_PROBABILITY: f64 = 1e-15;

/// Per-photon CNOT in `[pol, spatial]` order: `|p, s> -> |p XOR s, s>`.
pub fn cnot_intra_photon<T: Scalar>() -> ComplexMatrix<T> {
    let mut u = ComplexMatrix::zeros(4, 4);
    for p in 0..2usize {
        for s in 0..2usize {
            let from = (p << 1) | s;
            let to = ((p ^ s) << 1) | s;
            u[(to, from)] = num_complex::Complex::new(T::one(), T::zero());
        }
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    D1D2,
    D3D4,
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchProbabilities<T> {
    #[serde(rename = "D1D2")]
    pub d1d2: T,
    #[serde(rename = "D3D4")]
    pub d3d4: T,
    pub discard: T,
}

impl<T: Scalar> BranchProbabilities<T> {
    pub fn get(&self, branch: Branch) -> T {
        match branch {
            Branch::D1D2 => self.d1d2,
            Branch::D3D4 => self.d3d4,
            Branch::Discard => self.discard,
        }
    }

    pub fn success(&self) -> T {
        self.d1d2 + self.d3d4
    }

    pub fn total(&self) -> T {
        self.d1d2 + self.d3d4 + self.discard
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurificationOutcome<T> {
    /// Purified two-qubit state; `None` when the protocol always discards.
    pub output: Option<ComplexMatrix<T>>,
    pub success_probability: T,
    pub branch_probabilities: BranchProbabilities<T>,
    /// Closed-form prediction from the input's per-DOF fidelities against Φ+/φ+.
    /// `None` when that prediction is undefined.
    pub predicted_fidelity: Option<T>,
    /// Fidelity of `output` with Φ+; `None` when there is no output.
    pub achieved_fidelity: Option<T>,
    /// Normalized state of the rejected events, kept for diagnostics.
    pub discard_state: Option<ComplexMatrix<T>>,
    /// Whether a Hadamard conversion preceded the purification.
    pub converted: bool,
}

impl<T: Scalar> PurificationOutcome<T> {
    pub fn always_discards(&self) -> bool {
        self.output.is_none()
    }

    pub fn to_record(&self) -> OutcomeRecord {
        OutcomeRecord {
            success_probability: self.success_probability.as_f64(),
            branch_probabilities: BranchProbabilities {
                d1d2: self.branch_probabilities.d1d2.as_f64(),
                d3d4: self.branch_probabilities.d3d4.as_f64(),
                discard: self.branch_probabilities.discard.as_f64(),
            },
            predicted_fidelity: self.predicted_fidelity.map(Scalar::as_f64),
            achieved_fidelity: self.achieved_fidelity.map(Scalar::as_f64),
            output_matrix: self.output.as_ref().map(MatrixFile::from_matrix),
            converted: self.converted,
            output_relabeled: "spatial->polarization".into(),
        }
    }
}

/// Serialized form of a [`PurificationOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub success_probability: f64,
    pub branch_probabilities: BranchProbabilities<f64>,
    pub predicted_fidelity: Option<f64>,
    pub achieved_fidelity: Option<f64>,
    pub output_matrix: Option<MatrixFile>,
    pub converted: bool,
    pub output_relabeled: String,
}

pub fn purify<T: Scalar>(rho16: &ComplexMatrix<T>) -> Result<PurificationOutcome<T>> {
    if rho16.rows() != 16 || rho16.cols() != 16 {
        return Err(Error::Dimension {
            expected: "16x16 hyperentangled state".into(),
            found: format!("{}x{}", rho16.rows(), rho16.cols()),
        });
    }
    qmath::require_physical(rho16)?;

    let cnot = cnot_intra_photon::<T>();
    let both = kron(&cnot, &cnot);
    let after = rho16.conjugate_by(&both);

    // Blocks over (spa_A, spa_B) with polarizations fixed to (pa, pb).
    let block = |pa: usize, pb: usize| {
        ComplexMatrix::from_fn(4, 4, |r, c| {
            let (sa_r, sb_r) = (r >> 1, r & 1);
            let (sa_c, sb_c) = (c >> 1, c & 1);
            after[(
                HyperRegister::index(pa, sa_r, pb, sb_r),
                HyperRegister::index(pa, sa_c, pb, sb_c),
            )]
        })
    };
    let hh = block(0, 0);
    let vv = block(1, 1);
    let rejected = &block(0, 1) + &block(1, 0);

    let p_hh = hh.trace().re;
    let p_vv = vv.trace().re;
    let p_discard = rejected.trace().re;
    let success = p_hh + p_vv;

    let branch_probabilities = BranchProbabilities {
        d1d2: p_hh,
        d3d4: p_vv,
        discard: p_discard,
    };
    let predicted_fidelity = input_prediction(rho16)?;
    let discard_state = (p_discard > T::lit(MIN_SUCCESS_PROBABILITY)).then(|| rejected.scale(p_discard.recip()));

    if success < T::lit(MIN_SUCCESS_PROBABILITY) {
        return Ok(PurificationOutcome {
            output: None,
            success_probability: success,
            branch_probabilities,
            predicted_fidelity,
            achieved_fidelity: None,
            discard_state,
            converted: false,
        });
    }

    let output = (&hh + &vv).scale(success.recip());
    let target = bell_state::<T>(BellKind::PhiPlus, Dof::Polarization);
    let achieved = fidelity_pure(&output, &target)?;
    Ok(PurificationOutcome {
        output: Some(output),
        success_probability: success,
        branch_probabilities,
        predicted_fidelity,
        achieved_fidelity: Some(achieved),
        discard_state,
        converted: false,
    })
}

fn input_prediction<T: Scalar>(rho16: &ComplexMatrix<T>) -> Result<Option<T>> {
    let f1 = fidelity_pure(
        &polarization_marginal(rho16)?,
        &bell_state(BellKind::PhiPlus, Dof::Polarization),
    )?;
    let f2 = fidelity_pure(&spatial_marginal(rho16)?, &bell_state(BellKind::PhiPlus, Dof::Spatial))?;
    // Reconstructed states can put a fidelity a hair outside [0, 1].
    let clamp = |f: T| f.max(T::zero()).min(T::one());
    Ok(predict_fidelity(clamp(f1), clamp(f2)).ok())
}

/// `F' = F1 F2 / (F1 F2 + (1 - F1)(1 - F2))`
pub fn predict_fidelity<T: Scalar>(f1: T, f2: T) -> Result<T> {
    let denom = success_probability(f1, f2)?;
    if denom < T::lit(MIN_SUCCESS_PROBABILITY) {
        return Err(Error::AlwaysDiscard {
            probability: denom.as_f64(),
        });
    }
    Ok(f1 * f2 / denom)
}

/// `P = F1 F2 + (1 - F1)(1 - F2)`
pub fn success_probability<T: Scalar>(f1: T, f2: T) -> Result<T> {
    crate::states::check_probability("F1", f1)?;
    crate::states::check_probability("F2", f2)?;
    Ok(f1 * f2 + (T::one() - f1) * (T::one() - f2))
}

/// Purification preceded, for phase-flip noise, by Hadamards on all four qubits
/// that turn the phase errors into bit errors.
pub fn purify_with_conversion<T: Scalar>(rho16: &ComplexMatrix<T>, flavor: Flavor) -> Result<PurificationOutcome<T>> {
    match flavor {
        Flavor::BitFlip => purify(rho16),
        Flavor::PhaseFlip => {
            qmath::require_physical(rho16)?;
            let mut outcome = purify(&hadamard_convert(rho16))?;
            outcome.converted = true;
            Ok(outcome)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::StateVector;
    use crate::states::{hyper_state, ideal_hyper_state, mixture, RankTwoMixture};

    type M = ComplexMatrix<f64>;

    fn per_photon(p: usize, s: usize) -> StateVector<f64> {
        StateVector::basis(4, (p << 1) | s)
    }

    #[test]
    fn cnot_truth_table() {
        let u = cnot_intra_photon::<f64>();
        // (p, s): H = 0, V = 1, a1 = 0, a2 = 1
        assert_eq!(u.apply(&per_photon(0, 0)), per_photon(0, 0));
        assert_eq!(u.apply(&per_photon(1, 0)), per_photon(1, 0));
        assert_eq!(u.apply(&per_photon(0, 1)), per_photon(1, 1));
        assert_eq!(u.apply(&per_photon(1, 1)), per_photon(0, 1));
        assert_eq!(u.matmul(&u.adjoint()), M::identity(4));
    }

    #[test]
    fn noiseless_input() {
        let out = purify(&ideal_hyper_state::<f64>()).unwrap();
        assert!((out.success_probability - 1.0).abs() < 1e-15);
        assert!((out.achieved_fidelity.unwrap() - 1.0).abs() < 1e-15);
        assert!(out.discard_state.is_none());
        assert!((out.branch_probabilities.d1d2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rank_two_input_matches_closed_form() {
        let m = mixture(&RankTwoMixture::<f64>::bit_flip(0.771).unwrap()).unwrap();
        let out = purify(&hyper_state(&m, &m).unwrap()).unwrap();
        assert!((out.success_probability - 0.646882).abs() < 1e-12);
        assert!((out.achieved_fidelity.unwrap() - 0.918932).abs() < 1e-6);
        assert!((out.predicted_fidelity.unwrap() - out.achieved_fidelity.unwrap()).abs() < 1e-12);
        let total = out.branch_probabilities.total();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert!((predict_fidelity::<f64>(0.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(predict_fidelity(1.0, 1.0).unwrap(), 1.0);
        assert!((predict_fidelity::<f64>(0.666, 0.664).unwrap() - 0.7976).abs() < 5e-5);
        assert!(matches!(predict_fidelity(1.0, 0.0), Err(Error::AlwaysDiscard { .. })));
        assert_eq!(success_probability(1.0, 1.0).unwrap(), 1.0);
        assert!((success_probability::<f64>(0.666, 0.666).unwrap() - 0.555112).abs() < 1e-12);
        assert!(success_probability(1.5, 0.5).is_err());
    }

    #[test]
    fn cross_terms_always_discarded() {
        let phi = M::projector(&bell_state(BellKind::PhiPlus, Dof::Polarization));
        let psi = M::projector(&bell_state(BellKind::PsiPlus, Dof::Spatial));
        for (p, s) in [(&phi, &psi), (&psi, &phi)] {
            let out = purify(&hyper_state(p, s).unwrap()).unwrap();
            assert!(out.success_probability.abs() < 1e-12);
            assert!(out.always_discards());
            assert!(out.achieved_fidelity.is_none());
            assert!((out.branch_probabilities.discard - 1.0).abs() < 1e-12);
            assert!(out.discard_state.is_some());
        }
    }

    #[test]
    fn double_error_survives_as_psi_plus() {
        let psi = M::projector(&bell_state(BellKind::PsiPlus, Dof::Polarization));
        let out = purify(&hyper_state(&psi, &psi).unwrap()).unwrap();
        assert!((out.success_probability - 1.0).abs() < 1e-12);
        assert!(out.output.unwrap().max_abs_diff(&psi) < 1e-12);
    }

    #[test]
    fn phase_flip_needs_conversion() {
        let m = mixture(&RankTwoMixture::<f64>::phase_flip(0.8).unwrap()).unwrap();
        let rho = hyper_state(&m, &m).unwrap();
        let direct = purify(&rho).unwrap();
        // Φ- and φ- pass the parity check, so without conversion nothing improves.
        assert!((direct.success_probability - 1.0).abs() < 1e-12);
        let converted = purify_with_conversion(&rho, Flavor::PhaseFlip).unwrap();
        assert!(converted.converted);
        assert!((converted.success_probability - 0.68).abs() < 1e-12);
        let expected = predict_fidelity(0.8, 0.8).unwrap();
        assert!((converted.achieved_fidelity.unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.941).abs() < 5e-4);
    }

    #[test]
    fn conversion_is_noop_for_ideal_state() {
        let rho = ideal_hyper_state::<f64>();
        let a = purify(&rho).unwrap();
        let b = purify_with_conversion(&rho, Flavor::BitFlip).unwrap();
        assert_eq!(a, b);
        let c = purify_with_conversion(&rho, Flavor::PhaseFlip).unwrap();
        assert!((c.achieved_fidelity.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_shape() {
        assert!(matches!(purify(&M::identity(4)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn record_serializes() {
        let out = purify(&ideal_hyper_state::<f64>()).unwrap();
        let json = serde_json::to_value(out.to_record()).unwrap();
        for key in [
            "success_probability",
            "branch_probabilities",
            "predicted_fidelity",
            "achieved_fidelity",
            "output_matrix",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json["branch_probabilities"].get("D1D2").is_some());
    }
}
