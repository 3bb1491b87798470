//! Simulated two-qubit state tomography.
//!
//! Nine local Pauli settings `{X, Y, Z}²`, four outcomes each. Counts are drawn
//! as a Poisson total split multinomially by the Born rule; reconstruction is
//! linear inversion followed by a Frobenius projection onto density matrices.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixture::MatrixFile;
use crate::qmath::{eig_hermitian, kron, ComplexMatrix, StateVector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix<T: Scalar>(self) -> ComplexMatrix<T> {
        let (o, z) = (T::one(), T::zero());
        let c = |re: T, im: T| Complex::new(re, im);
        let entries = match self {
            Pauli::I => [c(o, z), c(z, z), c(z, z), c(o, z)],
            Pauli::X => [c(z, z), c(o, z), c(o, z), c(z, z)],
            Pauli::Y => [c(z, z), c(z, -o), c(z, o), c(z, z)],
            Pauli::Z => [c(o, z), c(z, z), c(z, z), c(-o, z)],
        };
        ComplexMatrix::new(2, 2, entries.to_vec()).expect("2x2")
    }
}

/// Measurement basis for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn pauli(self) -> Pauli {
        match self {
            Basis::X => Pauli::X,
            Basis::Y => Pauli::Y,
            Basis::Z => Pauli::Z,
        }
    }

    /// Eigenvector for outcome bit `0` (eigenvalue +1) or `1` (eigenvalue -1).
    pub fn eigenvector<T: Scalar>(self, bit: usize) -> StateVector<T> {
        let h = T::FRAC_1_SQRT_2();
        let (o, z) = (T::one(), T::zero());
        let sign = if bit == 0 { o } else { -o };
        let amps = match self {
            Basis::Z if bit == 0 => [Complex::new(o, z), Complex::zero()],
            Basis::Z => [Complex::zero(), Complex::new(o, z)],
            Basis::X => [Complex::new(h, z), Complex::new(sign * h, z)],
            Basis::Y => [Complex::new(h, z), Complex::new(z, sign * h)],
        };
        StateVector::new(amps.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub alice: Basis,
    pub bob: Basis,
}

impl Setting {
    /// All nine settings, Alice's basis varying slowest.
    pub fn all() -> Vec<Setting> {
        Basis::ALL
            .iter()
            .flat_map(|&alice| Basis::ALL.iter().map(move |&bob| Setting { alice, bob }))
            .collect()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.alice, self.bob)
    }
}

/// Outcome labels in count order: Alice's bit, then Bob's.
pub const OUTCOMES: [&str; 4] = ["00", "01", "10", "11"];

/// `<σ_i ⊗ σ_j>` for `i, j` in `I, X, Y, Z` (indexed in that order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliExpectations<T>(pub [[T; 4]; 4]);

impl<T: Scalar> PauliExpectations<T> {
    pub fn get(&self, a: Pauli, b: Pauli) -> T {
        self.0[a as usize][b as usize]
    }

    /// `(1/4) Σ t_ij σ_i ⊗ σ_j`
    pub fn to_state(&self) -> ComplexMatrix<T> {
        let mut rho = ComplexMatrix::zeros(4, 4);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let term = kron(&a.matrix(), &b.matrix()).scale(self.get(a, b));
                rho = &rho + &term;
            }
        }
        rho.scale(T::lit(0.25))
    }
}

pub fn pauli_expectations<T: Scalar>(rho: &ComplexMatrix<T>) -> PauliExpectations<T> {
    let mut out = [[T::zero(); 4]; 4];
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let op = kron(&a.matrix::<T>(), &b.matrix());
            out[a as usize][b as usize] = op.matmul(rho).trace().re;
        }
    }
    PauliExpectations(out)
}

/// Born probabilities of the four outcomes of `setting`, in [`OUTCOMES`] order.
pub fn born_probabilities<T: Scalar>(rho: &ComplexMatrix<T>, setting: Setting) -> [T; 4] {
    let mut p = [T::zero(); 4];
    for (k, slot) in p.iter_mut().enumerate() {
        let v = setting
            .alice
            .eigenvector::<T>(k >> 1)
            .kron(&setting.bob.eigenvector(k & 1));
        *slot = rho.expectation(&v).re;
    }
    p
}

fn default_window() -> f64 {
    1e-9
}

/// Acquisition model for one tomography run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingModel {
    /// Coincidences per second arriving at the analyzers.
    pub pair_rate: f64,
    /// Seconds per setting.
    pub integration_time: f64,
    pub detector_efficiency: f64,
    #[serde(default)]
    pub dark_rate: f64,
    /// Seconds; dark counts contribute `dark_rate * coincidence_window` per event.
    #[serde(default = "default_window")]
    pub coincidence_window: f64,
    #[serde(default)]
    pub seed: u64,
    /// Record exact Born probabilities instead of sampling.
    #[serde(default)]
    pub infinite_statistics: bool,
}

impl CountingModel {
    pub fn new(pair_rate: f64, integration_time: f64, detector_efficiency: f64, seed: u64) -> Result<Self> {
        let cm = Self {
            pair_rate,
            integration_time,
            detector_efficiency,
            dark_rate: 0.0,
            coincidence_window: default_window(),
            seed,
            infinite_statistics: false,
        };
        cm.validate()?;
        Ok(cm)
    }

    pub fn exact() -> Self {
        Self {
            pair_rate: 1.0,
            integration_time: 1.0,
            detector_efficiency: 1.0,
            dark_rate: 0.0,
            coincidence_window: default_window(),
            seed: 0,
            infinite_statistics: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate", self.pair_rate),
            ("integration_time", self.integration_time),
            ("dark_rate", self.dark_rate),
            ("coincidence_window", self.coincidence_window),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::out_of_range(name, v, "[0, inf)"));
            }
        }
        crate::states::check_probability("detector_efficiency", self.detector_efficiency)
    }

    /// Mean number of detected coincidences per setting.
    pub fn mean_events(&self) -> f64 {
        self.pair_rate * self.integration_time * self.detector_efficiency.powi(2)
    }

    /// Mean number of dark-count coincidences per setting, spread evenly over outcomes.
    pub fn mean_background(&self) -> f64 {
        self.pair_rate * self.integration_time * self.dark_rate * self.coincidence_window
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord<T> {
    pub settings: Vec<Setting>,
    /// Per-setting outcome counts in [`OUTCOMES`] order.
    pub counts: Vec<[u64; 4]>,
    /// Exact Born probabilities, present only in infinite-statistics mode.
    pub probabilities: Option<Vec<[f64; 4]>>,
    pub reconstructed: Option<ComplexMatrix<T>>,
    pub physical: Option<ComplexMatrix<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SettingEntry {
    setting: String,
    counts: [u64; 4],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    probabilities: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecordFile {
    outcomes: [String; 4],
    settings: Vec<SettingEntry>,
    reconstructed: Option<MatrixFile>,
    physical: Option<MatrixFile>,
}

impl<T: Scalar> TomographyRecord<T> {
    pub fn to_file(&self) -> TomographyRecordFile {
        TomographyRecordFile {
            outcomes: OUTCOMES.map(String::from),
            settings: self
                .settings
                .iter()
                .enumerate()
                .map(|(k, s)| SettingEntry {
                    setting: s.to_string(),
                    counts: self.counts[k],
                    probabilities: self.probabilities.as_ref().map(|p| p[k]),
                })
                .collect(),
            reconstructed: self.reconstructed.as_ref().map(MatrixFile::from_matrix),
            physical: self.physical.as_ref().map(MatrixFile::from_matrix),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    /// `setting,outcome,count` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["setting", "outcome", "count"])?;
        for (s, c) in self.settings.iter().zip(&self.counts) {
            for (label, n) in OUTCOMES.iter().zip(c) {
                w.write_record([s.to_string(), (*label).to_string(), n.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Relative frequencies of a setting, or the exact probabilities when present.
    fn frequencies(&self, k: usize) -> Result<[f64; 4]> {
        if let Some(p) = &self.probabilities {
            return Ok(p[k]);
        }
        let c = self.counts[k];
        let total: u64 = c.iter().sum();
        if total == 0 {
            return Err(Error::ZeroCounts {
                setting: self.settings[k].to_string(),
            });
        }
        Ok(c.map(|n| n as f64 / total as f64))
    }
}

/// Samples a record with a fresh generator seeded from `cm.seed`.
pub fn simulate_counts<T: Scalar>(rho: &ComplexMatrix<T>, cm: &CountingModel) -> Result<TomographyRecord<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cm.seed);
    simulate_counts_with_rng(rho, cm, &mut rng)
}

pub fn simulate_counts_with_rng<T: Scalar, R: Rng + ?Sized>(
    rho: &ComplexMatrix<T>,
    cm: &CountingModel,
    rng: &mut R,
) -> Result<TomographyRecord<T>> {
    cm.validate()?;
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Dimension {
            expected: "4x4 two-qubit state".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        });
    }
    crate::qmath::require_physical(rho)?;
    let settings = Setting::all();
    let born: Vec<[f64; 4]> = settings
        .iter()
        .map(|&s| born_probabilities(rho, s).map(|p| p.as_f64().clamp(0.0, 1.0)))
        .collect();

    if cm.infinite_statistics {
        return Ok(TomographyRecord {
            counts: vec![[0; 4]; settings.len()],
            settings,
            probabilities: Some(born),
            reconstructed: None,
            physical: None,
        });
    }

    let mean = cm.mean_events();
    let background = cm.mean_background() / 4.0;
    let mut counts = Vec::with_capacity(settings.len());
    for p in &born {
        let total = sample_poisson(mean, rng)?;
        let mut c = multinomial(total, p, rng)?;
        if background > 0.0 {
            for slot in c.iter_mut() {
                *slot += sample_poisson(background, rng)?;
            }
        }
        counts.push(c);
    }
    Ok(TomographyRecord {
        settings,
        counts,
        probabilities: None,
        reconstructed: None,
        physical: None,
    })
}

fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Invalid(format!("poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Sequential-binomial multinomial draw.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64; 4], rng: &mut R) -> Result<[u64; 4]> {
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass_left: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == probs.len() - 1 {
            out[k] = remaining;
            break;
        }
        let q = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::Invalid(format!("binomial({remaining}, {q}): {e}")))?
            .sample(rng);
        out[k] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    Ok(out)
}

/// Pauli expectations estimated from a record; single-qubit terms average the
/// three settings that share the measured basis.
pub fn estimate_expectations<T: Scalar>(record: &TomographyRecord<T>) -> Result<PauliExpectations<T>> {
    if record.settings.len() != 9 || record.counts.len() != 9 {
        return Err(Error::Invalid(format!(
            "record needs all 9 settings, has {}",
            record.settings.len()
        )));
    }
    let mut sums = [[0.0f64; 4]; 4];
    let mut hits = [[0u32; 4]; 4];
    for (k, s) in record.settings.iter().enumerate() {
        let f = record.frequencies(k)?;
        let sign = |bit: usize| if bit == 0 { 1.0 } else { -1.0 };
        let (a, b) = (s.alice.pauli() as usize, s.bob.pauli() as usize);
        let mut corr = 0.0;
        let mut alice = 0.0;
        let mut bob = 0.0;
        for (o, &fo) in f.iter().enumerate() {
            let (x, y) = (o >> 1, o & 1);
            corr += sign(x) * sign(y) * fo;
            alice += sign(x) * fo;
            bob += sign(y) * fo;
        }
        sums[a][b] += corr;
        hits[a][b] += 1;
        sums[a][0] += alice;
        hits[a][0] += 1;
        sums[0][b] += bob;
        hits[0][b] += 1;
    }
    let mut t = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = if i == 0 && j == 0 {
                T::one()
            } else if hits[i][j] == 0 {
                return Err(Error::Invalid("settings do not cover every Pauli pair".into()));
            } else {
                T::lit(sums[i][j] / f64::from(hits[i][j]))
            };
        }
    }
    Ok(PauliExpectations(t))
}

/// `rho = (1/4) Σ <σ_i⊗σ_j>_est σ_i⊗σ_j`; Hermitian with unit trace, possibly
/// with negative eigenvalues.
pub fn linear_inversion<T: Scalar>(record: &TomographyRecord<T>) -> Result<ComplexMatrix<T>> {
    Ok(estimate_expectations(record)?.to_state())
}

/// Nearest density matrix in Frobenius norm: the spectrum is projected onto the
/// probability simplex (eigenvalues shifted by a common offset, negatives clipped).
pub fn project_physical<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let spec = eig_hermitian(rho)?;
    let lambda = &spec.eigenvalues; // descending
    let mut cumulative = T::zero();
    let mut shift = T::zero();
    for (k, &l) in lambda.iter().enumerate() {
        cumulative = cumulative + l;
        let candidate = (cumulative - T::one()) / T::lit((k + 1) as f64);
        if l - candidate > T::zero() {
            shift = candidate;
        }
    }
    Ok(spec.reconstruct_with(|l| (l - shift).max(T::zero())))
}

/// Sample, invert, and project; the returned record carries both estimates.
pub fn reconstruct<T: Scalar>(rho: &ComplexMatrix<T>, cm: &CountingModel) -> Result<TomographyRecord<T>> {
    let mut record = simulate_counts(rho, cm)?;
    let linear = linear_inversion(&record)?;
    record.physical = Some(project_physical(&linear)?);
    record.reconstructed = Some(linear);
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::validate_state;
    use crate::states::{bell_state, mixture, BellKind, Dof, RankTwoMixture};

    type M = ComplexMatrix<f64>;

    fn phi_plus() -> M {
        M::projector(&bell_state(BellKind::PhiPlus, Dof::Polarization))
    }

    #[test]
    fn bell_correlations() {
        let t = pauli_expectations(&phi_plus());
        assert!((t.get(Pauli::X, Pauli::X) - 1.0).abs() < 1e-15);
        assert!((t.get(Pauli::Y, Pauli::Y) + 1.0).abs() < 1e-15);
        assert!((t.get(Pauli::Z, Pauli::Z) - 1.0).abs() < 1e-15);
        assert!((t.get(Pauli::I, Pauli::I) - 1.0).abs() < 1e-15);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                if a != b {
                    assert!(t.get(a, b).abs() < 1e-15, "{a:?}{b:?}");
                }
            }
        }
    }

    #[test]
    fn maximally_mixed_expectations() {
        let t = pauli_expectations(&M::identity(4).scale(0.25));
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let expected = if a == Pauli::I && b == Pauli::I { 1.0 } else { 0.0 };
                assert!((t.get(a, b) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zz_correlation_of_bit_flip_mixture() {
        let m = mixture(&RankTwoMixture::<f64>::bit_flip(0.771).unwrap()).unwrap();
        assert!((pauli_expectations(&m).get(Pauli::Z, Pauli::Z) - 0.542).abs() < 1e-12);
    }

    #[test]
    fn exact_mode_gives_born_rule() {
        let rho = phi_plus();
        let rec = simulate_counts(&rho, &CountingModel::exact()).unwrap();
        let p = rec.probabilities.as_ref().unwrap();
        let zz = Setting::all()
            .iter()
            .position(|s| {
                *s == Setting {
                    alice: Basis::Z,
                    bob: Basis::Z,
                }
            })
            .unwrap();
        assert!((p[zz][0] - 0.5).abs() < 1e-15 && (p[zz][3] - 0.5).abs() < 1e-15);
        let inverted = linear_inversion(&rec).unwrap();
        assert!(inverted.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn sampled_zz_has_no_anticorrelations() {
        let cm = CountingModel::new(600.0, 60.0, 1.0, 7).unwrap();
        let rec = simulate_counts(&phi_plus(), &cm).unwrap();
        let zz = rec
            .settings
            .iter()
            .position(|s| {
                *s == Setting {
                    alice: Basis::Z,
                    bob: Basis::Z,
                }
            })
            .unwrap();
        assert_eq!(rec.counts[zz][1], 0);
        assert_eq!(rec.counts[zz][2], 0);
        let total: u64 = rec.counts[zz].iter().sum();
        assert!((total as f64 - 36_000.0).abs() < 6.0 * 36_000f64.sqrt());
    }

    #[test]
    fn dark_counts_populate_forbidden_outcomes() {
        let mut cm = CountingModel::new(600.0, 60.0, 1.0, 3).unwrap();
        cm.dark_rate = 300.0;
        cm.coincidence_window = 1e-3; // exaggerated so background is visible
        let rec = simulate_counts(&phi_plus(), &cm).unwrap();
        let zz = rec
            .settings
            .iter()
            .position(|s| {
                *s == Setting {
                    alice: Basis::Z,
                    bob: Basis::Z,
                }
            })
            .unwrap();
        assert!(rec.counts[zz][1] + rec.counts[zz][2] > 0);
    }

    #[test]
    fn inversion_scale_invariant() {
        let cm = CountingModel::new(100.0, 10.0, 0.9, 11).unwrap();
        let rec = simulate_counts(&phi_plus(), &cm).unwrap();
        let mut doubled = rec.clone();
        for c in doubled.counts.iter_mut() {
            *c = c.map(|n| 2 * n);
        }
        let a = linear_inversion(&rec).unwrap();
        let b = linear_inversion(&doubled).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        assert!((a.trace().re - 1.0).abs() < 1e-12);
        assert!(a.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn zero_counts_rejected() {
        let mut rec = simulate_counts(&phi_plus(), &CountingModel::new(10.0, 1.0, 1.0, 1).unwrap()).unwrap();
        rec.counts[4] = [0; 4];
        assert!(matches!(linear_inversion(&rec), Err(Error::ZeroCounts { .. })));
    }

    #[test]
    fn sampled_pure_state_can_go_negative() {
        // Small samples of a pure state routinely give a negative eigenvalue.
        let negatives = (0..20)
            .filter(|&seed| {
                let cm = CountingModel::new(50.0, 1.0, 1.0, seed).unwrap();
                let rec = simulate_counts(&phi_plus(), &cm).unwrap();
                let lin = linear_inversion(&rec).unwrap();
                crate::qmath::eig_hermitian(&lin).unwrap().min_eigenvalue() < 0.0
            })
            .count();
        assert!(negatives > 0);
    }

    #[test]
    fn projection_examples() {
        let rho = mixture(&RankTwoMixture::<f64>::bit_flip(0.7).unwrap()).unwrap();
        assert!(project_physical(&rho).unwrap().max_abs_diff(&rho) < 1e-12);
        let clipped = project_physical(&M::diagonal(&[1.1, -0.1])).unwrap();
        assert!(clipped.max_abs_diff(&M::diagonal(&[1.0, 0.0])) < 1e-12);
        let three = project_physical(&M::diagonal(&[0.6, 0.5, -0.1])).unwrap();
        assert!(three.max_abs_diff(&M::diagonal(&[0.55, 0.45, 0.0])) < 1e-12);
        assert!(validate_state(&three, 1e-12).is_valid());
    }

    #[test]
    fn same_seed_same_record() {
        let cm = CountingModel::new(600.0, 60.0, 0.8, 99).unwrap();
        let a = reconstruct(&phi_plus(), &cm).unwrap();
        let b = reconstruct(&phi_plus(), &cm).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let other = simulate_counts(&phi_plus(), &CountingModel { seed: 100, ..cm }).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[test]
    fn csv_export() {
        let rec = simulate_counts(&phi_plus(), &CountingModel::new(10.0, 1.0, 1.0, 5).unwrap()).unwrap();
        let text = rec.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "setting,outcome,count");
        assert_eq!(lines.len(), 1 + 36);
        assert!(lines[1].starts_with("XX,00,"));
    }

    #[test]
    fn counting_model_validation() {
        assert!(CountingModel::new(-1.0, 1.0, 0.5, 0).is_err());
        assert!(CountingModel::new(1.0, 1.0, 1.5, 0).is_err());
        let cm: CountingModel =
            serde_json::from_str(r#"{"pair_rate": 600, "integration_time": 60, "detector_efficiency": 0.8}"#).unwrap();
        assert_eq!(cm.coincidence_window, 1e-9);
        assert!(!cm.infinite_statistics);
    }
}
