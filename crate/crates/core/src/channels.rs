//! Noise and conversion channels acting on the 16-dimensional hyperentangled state.
//!
//! Loaded noise is a Pauli mixture over the four operation pairs
//! `{id, flip}_spatial ⊗ {id, flip}_polarization` on one photon, where the flip
//! is σx for bit-flip (BF) and σz for phase-flip (PF) loading.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{self, kron, kron_all, ComplexMatrix};
use crate::scalar::Scalar;
use crate::states::check_probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "BF")]
    BitFlip,
    #[serde(rename = "PF")]
    PhaseFlip,
}

/// Which photon(s) a single-photon channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Placement {
    A,
    #[default]
    B,
    /// Independent application to photon A, then photon B.
    Both,
}

/// Probabilities of the four single-photon operation pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliMixture<T> {
    pub flavor: Flavor,
    /// `id_S ⊗ id_P`
    pub identity: T,
    /// `flip_S ⊗ id_P`
    pub spatial_only: T,
    /// `flip_S ⊗ flip_P`
    pub both: T,
    /// `id_S ⊗ flip_P`
    pub polarization_only: T,
}

impl<T: Scalar> PauliMixture<T> {
    pub fn new(flavor: Flavor, identity: T, spatial_only: T, both: T, polarization_only: T) -> Result<Self> {
        let m = Self {
            flavor,
            identity,
            spatial_only,
            both,
            polarization_only,
        };
        for (_, _, w) in m.terms() {
            check_probability("mixture weight", w)?;
        }
        let total = m.total();
        if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
            return Err(Error::out_of_range("mixture weight sum", total.as_f64(), "{1}"));
        }
        Ok(m)
    }

    pub fn identity_channel(flavor: Flavor) -> Self {
        Self {
            flavor,
            identity: T::one(),
            spatial_only: T::zero(),
            both: T::zero(),
            polarization_only: T::zero(),
        }
    }

    /// `(flip spatial?, flip polarization?, weight)` for all four pairs.
    pub fn terms(&self) -> [(bool, bool, T); 4] {
        [
            (false, false, self.identity),
            (true, false, self.spatial_only),
            (true, true, self.both),
            (false, true, self.polarization_only),
        ]
    }

    pub fn total(&self) -> T {
        self.identity + self.spatial_only + self.both + self.polarization_only
    }

    pub fn polarization_flip_probability(&self) -> T {
        self.both + self.polarization_only
    }

    pub fn spatial_flip_probability(&self) -> T {
        self.spatial_only + self.both
    }

    pub fn with_flavor(self, flavor: Flavor) -> Self {
        Self { flavor, ..self }
    }

    /// The channel as a linear map on arbitrary 16x16 operators (no physicality check).
    pub fn channel_map(&self, rho: &ComplexMatrix<T>, placement: Placement) -> ComplexMatrix<T> {
        match placement {
            Placement::A => self.map_on_photon(rho, Photon::A),
            Placement::B => self.map_on_photon(rho, Photon::B),
            Placement::Both => {
                let a = self.map_on_photon(rho, Photon::A);
                self.map_on_photon(&a, Photon::B)
            }
        }
    }

    fn map_on_photon(&self, rho: &ComplexMatrix<T>, photon: Photon) -> ComplexMatrix<T> {
        let flip = flip_matrix::<T>(self.flavor);
        let id = ComplexMatrix::<T>::identity(2);
        let mut out = ComplexMatrix::zeros(rho.rows(), rho.cols());
        for (flip_s, flip_p, w) in self.terms() {
            if w.is_zero() {
                continue;
            }
            if !flip_s && !flip_p {
                out = &out + &rho.scale(w);
                continue;
            }
            let pol = if flip_p { &flip } else { &id };
            let spa = if flip_s { &flip } else { &id };
            let u = embed_photon_op(&kron(pol, spa), photon);
            out = &out + &rho.conjugate_by(&u).scale(w);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Photon {
    A,
    B,
}

/// Single-photon operator (4x4, `[pol, spatial]` order) embedded in the 16-dim register.
fn embed_photon_op<T: Scalar>(op: &ComplexMatrix<T>, photon: Photon) -> ComplexMatrix<T> {
    let id4 = ComplexMatrix::identity(4);
    match photon {
        Photon::A => kron(op, &id4),
        Photon::B => kron(&id4, op),
    }
}

fn flip_matrix<T: Scalar>(flavor: Flavor) -> ComplexMatrix<T> {
    match flavor {
        Flavor::BitFlip => pauli_x(),
        Flavor::PhaseFlip => pauli_z(),
    }
}

pub(crate) fn pauli_x<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
}

pub(crate) fn pauli_z<T: Scalar>() -> ComplexMatrix<T> {
    ComplexMatrix::diagonal(&[T::one(), -T::one()])
}

pub(crate) fn hadamard<T: Scalar>() -> ComplexMatrix<T> {
    let h = T::FRAC_1_SQRT_2();
    ComplexMatrix::from_fn(2, 2, |i, j| {
        let s = if i == 1 && j == 1 { -h } else { h };
        Complex::new(s, T::zero())
    })
}

/// Liquid-crystal loading cycle of period `period`; `t1`, `t2`, `t3` are the
/// activation times of `flip_S⊗id_P`, `flip_S⊗flip_P` and `id_S⊗flip_P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcSchedule<T> {
    #[serde(rename = "T")]
    pub period: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

impl<T: Scalar> LcSchedule<T> {
    pub fn new(period: T, t1: T, t2: T, t3: T) -> Result<Self> {
        let s = Self { period, t1, t2, t3 };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > T::zero()) {
            return Err(Error::Invalid(format!(
                "schedule period must be positive, got {}",
                self.period
            )));
        }
        for (name, t) in [("t1", self.t1), ("t2", self.t2), ("t3", self.t3)] {
            if !(t.is_finite() && t >= T::zero()) {
                return Err(Error::Invalid(format!("schedule {name} must be nonnegative, got {t}")));
            }
        }
        let [_, _, _, rest] = self.exact_durations()?;
        if rest < BigRational::zero() {
            return Err(Error::Invalid(format!(
                "t1 + t2 + t3 = {} exceeds the period {}",
                self.t1 + self.t2 + self.t3,
                self.period
            )));
        }
        Ok(())
    }

    /// `[t1, t2, t3, T - t1 - t2 - t3]` as exact rationals.
    fn exact_durations(&self) -> Result<[BigRational; 4]> {
        let conv = |x: T| {
            decimal_rational(&x.to_string()).ok_or_else(|| Error::Invalid(format!("non-finite schedule time {x}")))
        };
        let (p, t1, t2, t3) = (conv(self.period)?, conv(self.t1)?, conv(self.t2)?, conv(self.t3)?);
        let rest = &p - &t1 - &t2 - &t3;
        Ok([t1, t2, t3, rest])
    }

    /// Weights `[flip_S⊗id_P, flip_S⊗flip_P, id_S⊗flip_P, id⊗id]` computed in exact
    /// rational arithmetic; they sum to exactly one.
    pub fn exact_weights(&self) -> Result<[BigRational; 4]> {
        self.check()?;
        let period = decimal_rational(&self.period.to_string()).expect("checked finite");
        let d = self.exact_durations()?;
        Ok(d.map(|t| t / &period))
    }
}

/// Exact value of a plain decimal literal such as `"15"` or `"-0.125"`. Durations
/// are entered in decimal, so going through the shortest decimal rendering keeps
/// `0.1 + 0.2 == 0.3` true where the binary expansions would not.
fn decimal_rational(text: &str) -> Option<BigRational> {
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10u8), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

fn rational_to_scalar<T: Scalar>(r: &BigRational) -> T {
    r.to_f64().map(T::lit).unwrap_or_else(|| {
        // Only reachable for absurd magnitudes; fall back to integer division.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        T::lit(n / d)
    })
}

pub fn schedule_to_mixture<T: Scalar>(s: &LcSchedule<T>, flavor: Flavor) -> Result<PauliMixture<T>> {
    let [w1, w2, w3, w0] = s.exact_weights()?;
    debug_assert!(&w0 + &w1 + &w2 + &w3 == BigRational::one());
    Ok(PauliMixture {
        flavor,
        identity: rational_to_scalar(&w0),
        spatial_only: rational_to_scalar(&w1),
        both: rational_to_scalar(&w2),
        polarization_only: rational_to_scalar(&w3),
    })
}

/// Product-form mixture: polarization flips with probability `f_pol`, the spatial
/// qubit independently with `f_spa`.
pub fn independent_mixture<T: Scalar>(f_pol: T, f_spa: T, flavor: Flavor) -> Result<PauliMixture<T>> {
    check_probability("f_pol", f_pol)?;
    check_probability("f_spa", f_spa)?;
    let one = T::one();
    Ok(PauliMixture {
        flavor,
        identity: (one - f_pol) * (one - f_spa),
        spatial_only: (one - f_pol) * f_spa,
        both: f_pol * f_spa,
        polarization_only: f_pol * (one - f_spa),
    })
}

/// `Σ p_i U_i rho U_i^dagger` with the operation pairs embedded on `placement`.
pub fn apply_mixture<T: Scalar>(
    rho16: &ComplexMatrix<T>,
    m: &PauliMixture<T>,
    placement: Placement,
) -> Result<ComplexMatrix<T>> {
    require_hyper_dim(rho16)?;
    qmath::require_physical(rho16)?;
    Ok(m.channel_map(rho16, placement))
}

/// How fiber loss in dB is turned into a transmittance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attenuation {
    /// `10^(-alpha L / 10)`
    #[default]
    Decibel,
    /// `e^(-alpha L / 10)`: natural exponential of the same exponent, kept for comparison.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberModel<T> {
    pub alpha_db_per_km: T,
    pub length_km: T,
    /// Intrinsic bit-flip probability per degree of freedom on photon B.
    pub intrinsic_bf: T,
    /// Intrinsic phase-flip probability per degree of freedom on photon B.
    pub intrinsic_pf: T,
}

impl<T: Scalar> FiberModel<T> {
    pub fn new(alpha_db_per_km: T, length_km: T, intrinsic_bf: T, intrinsic_pf: T) -> Result<Self> {
        if !(alpha_db_per_km.is_finite() && alpha_db_per_km >= T::zero()) {
            return Err(Error::out_of_range(
                "alpha_db_per_km",
                alpha_db_per_km.as_f64(),
                "[0, inf)",
            ));
        }
        if !(length_km.is_finite() && length_km >= T::zero()) {
            return Err(Error::out_of_range("length_km", length_km.as_f64(), "[0, inf)"));
        }
        check_probability("intrinsic_bf", intrinsic_bf)?;
        check_probability("intrinsic_pf", intrinsic_pf)?;
        Ok(Self {
            alpha_db_per_km,
            length_km,
            intrinsic_bf,
            intrinsic_pf,
        })
    }

    /// Loss-only fiber with no intrinsic flips.
    pub fn lossy(alpha_db_per_km: T, length_km: T) -> Result<Self> {
        Self::new(alpha_db_per_km, length_km, T::zero(), T::zero())
    }

    pub fn loss_db(&self) -> T {
        self.alpha_db_per_km * self.length_km
    }
}

pub fn fiber_transmittance<T: Scalar>(fm: &FiberModel<T>) -> T {
    fiber_transmittance_with(fm, Attenuation::Decibel)
}

pub fn fiber_transmittance_with<T: Scalar>(fm: &FiberModel<T>, mode: Attenuation) -> T {
    let exponent = -fm.loss_db() / T::lit(10.0);
    match mode {
        Attenuation::Decibel => T::lit(10.0).powf(exponent),
        Attenuation::Exponential => exponent.exp(),
    }
}

/// Hadamard on all four qubits; exchanges BF and PF error families.
pub fn hadamard_convert<T: Scalar>(rho16: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let h = hadamard::<T>();
    let u = kron_all(&[&h, &h, &h, &h]);
    rho16.conjugate_by(&u)
}

/// Intrinsic multicore-fiber noise: independent BF then independent PF on photon B,
/// both degrees of freedom.
pub fn mcf_channel<T: Scalar>(rho16: &ComplexMatrix<T>, fm: &FiberModel<T>) -> Result<ComplexMatrix<T>> {
    let bf = independent_mixture(fm.intrinsic_bf, fm.intrinsic_bf, Flavor::BitFlip)?;
    let pf = independent_mixture(fm.intrinsic_pf, fm.intrinsic_pf, Flavor::PhaseFlip)?;
    let after_bf = apply_mixture(rho16, &bf, Placement::B)?;
    Ok(pf.channel_map(&after_bf, Placement::B))
}

fn require_hyper_dim<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<()> {
    if rho.rows() == 16 && rho.cols() == 16 {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: "16x16 hyperentangled state".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        })
    }
}
