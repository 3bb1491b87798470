//! Figures of merit for a two-qubit state: QBER and key rate, CHSH values, and
//! purification-efficiency comparisons against two-copy schemes.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{eig_hermitian, ComplexMatrix};
use crate::scalar::Scalar;
use crate::states::check_probability;
use crate::tomography::{pauli_expectations, Pauli};

/// Mean QBER at which the key rate `1 - 2H(e)` changes sign (about 11%).
pub const QBER_SECURITY_EDGE: f64 = 0.110_027_864_438_208_6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QkdBasis {
    /// Computational basis H/V.
    Z,
    /// Fourier basis ±45°.
    F,
}

/// Probability of anticorrelated outcomes when both sides measure in `basis`.
pub fn qber<T: Scalar>(rho: &ComplexMatrix<T>, basis: QkdBasis) -> Result<T> {
    require_two_qubit(rho)?;
    let t = pauli_expectations(rho);
    // The Fourier basis is the Hadamard image of Z, and H Z H = X.
    let corr = match basis {
        QkdBasis::Z => t.get(Pauli::Z, Pauli::Z),
        QkdBasis::F => t.get(Pauli::X, Pauli::X),
    };
    Ok(((T::one() - corr) / T::lit(2.0)).max(T::zero()).min(T::one()))
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn shannon_entropy<T: Scalar>(e: T) -> T {
    let term = |p: T| if p <= T::zero() { T::zero() } else { -p * p.log2() };
    term(e) + term(T::one() - e)
}

/// `1 - 2H(e)`
pub fn raw_key_rate<T: Scalar>(e: T) -> T {
    T::one() - T::lit(2.0) * shannon_entropy(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub qber_z: f64,
    pub qber_f: f64,
    /// Mean of the two basis QBERs; the value entering the rate.
    pub qber: f64,
    pub raw_rate: f64,
    /// `max(raw_rate, 0)`
    pub effective_rate: f64,
}

impl KeyRateResult {
    pub fn from_qbers(qber_z: f64, qber_f: f64) -> Result<Self> {
        check_probability("qber_z", qber_z)?;
        check_probability("qber_f", qber_f)?;
        let qber = 0.5 * (qber_z + qber_f);
        let raw_rate = raw_key_rate(qber);
        Ok(Self {
            qber_z,
            qber_f,
            qber,
            raw_rate,
            effective_rate: raw_rate.max(0.0),
        })
    }
}

pub fn key_rate<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<KeyRateResult> {
    KeyRateResult::from_qbers(qber(rho, QkdBasis::Z)?.as_f64(), qber(rho, QkdBasis::F)?.as_f64())
}

/// `T_ij = <σ_i ⊗ σ_j>` for `i, j` in `x, y, z`.
pub fn correlation_matrix<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<[[T; 3]; 3]> {
    require_two_qubit(rho)?;
    let t = pauli_expectations(rho);
    let axes = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = [[T::zero(); 3]; 3];
    for (i, &a) in axes.iter().enumerate() {
        for (j, &b) in axes.iter().enumerate() {
            out[i][j] = t.get(a, b);
        }
    }
    Ok(out)
}

/// Measurement directions as Bloch vectors `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a1: [f64; 3],
    pub a2: [f64; 3],
    pub b1: [f64; 3],
    pub b2: [f64; 3],
}

impl ChshSettings {
    /// `A1 = Z, A2 = X, B1 = (Z + X)/√2, B2 = (Z - X)/√2`
    pub fn canonical() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a1: [0.0, 0.0, 1.0],
            a2: [1.0, 0.0, 0.0],
            b1: [h, 0.0, h],
            b2: [-h, 0.0, h],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    /// `S` at [`ChshSettings::canonical`].
    pub s_fixed: f64,
    /// Maximum over all settings, `2 sqrt(m1 + m2)`.
    pub s_max: f64,
    pub settings: ChshSettings,
}

/// `<(a·σ) ⊗ (b·σ)> = a^T T b`
fn correlator<T: Scalar>(t: &[[T; 3]; 3], a: [f64; 3], b: [f64; 3]) -> T {
    let mut acc = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            acc = acc + T::lit(a[i]) * t[i][j] * T::lit(b[j]);
        }
    }
    acc
}

pub fn chsh_value<T: Scalar>(rho: &ComplexMatrix<T>, s: &ChshSettings) -> Result<T> {
    let t = correlation_matrix(rho)?;
    Ok(
        correlator(&t, s.a1, s.b1) + correlator(&t, s.a1, s.b2) + correlator(&t, s.a2, s.b1)
            - correlator(&t, s.a2, s.b2),
    )
}

/// Largest CHSH value reachable with any local settings (Horodecki criterion).
pub fn chsh_max<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<T> {
    let t = correlation_matrix(rho)?;
    // T^T T is real symmetric; reuse the Hermitian solver.
    let ttt = ComplexMatrix::from_fn(3, 3, |i, j| {
        let v = (0..3).fold(T::zero(), |acc, k| acc + t[k][i] * t[k][j]);
        Complex::new(v, T::zero())
    });
    let ev = eig_hermitian(&ttt)?.eigenvalues;
    let m = (ev[0] + ev[1]).max(T::zero());
    Ok(T::lit(2.0) * m.sqrt())
}

pub fn chsh<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<ChshResult> {
    let settings = ChshSettings::canonical();
    Ok(ChshResult {
        s_fixed: chsh_value(rho, &settings)?.as_f64(),
        s_max: chsh_max(rho)?.as_f64(),
        settings,
    })
}

/// Inputs to the single-copy vs two-copy efficiency comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyModel {
    /// Coincidences per second before the fiber.
    pub coincidence_rate: f64,
    /// Photon coupling efficiency.
    pub coupling_efficiency: f64,
    /// Pump repetition rate, pulses per second.
    pub rep_rate: f64,
    /// Protocol success probability.
    pub protocol_success: f64,
    /// Fiber transmittance.
    pub transmittance: f64,
}

impl EfficiencyModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coincidence_rate", self.coincidence_rate),
            ("rep_rate", self.rep_rate),
            ("protocol_success", self.protocol_success),
            ("transmittance", self.transmittance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::out_of_range(name, v, "(0, inf)"));
            }
        }
        if !(self.coupling_efficiency > 0.0 && self.coupling_efficiency <= 1.0) {
            return Err(Error::out_of_range(
                "coupling_efficiency",
                self.coupling_efficiency,
                "(0, 1]",
            ));
        }
        Ok(())
    }

    /// Pair generation probability per pulse, `C / (ε² Rep)`.
    pub fn source_probability(&self) -> f64 {
        self.coincidence_rate / (self.coupling_efficiency.powi(2) * self.rep_rate)
    }
}

/// `P_one = P_P · P_s · η`
pub fn efficiency_one(em: &EfficiencyModel) -> Result<f64> {
    em.validate()?;
    Ok(em.protocol_success * em.source_probability() * em.transmittance)
}

/// `P_two = (1/4) · P_P · P_s² · η²`
pub fn efficiency_two(em: &EfficiencyModel) -> Result<f64> {
    em.validate()?;
    let ps = em.source_probability();
    Ok(0.25 * em.protocol_success * ps * ps * em.transmittance * em.transmittance)
}

/// `P_one / P_two = 4 / (P_s η)`
pub fn efficiency_ratio(source_probability: f64, transmittance: f64) -> f64 {
    4.0 / (source_probability * transmittance)
}

fn require_two_qubit<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<()> {
    if rho.rows() == 4 && rho.cols() == 4 {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: "4x4 two-qubit state".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        })
    }
}
