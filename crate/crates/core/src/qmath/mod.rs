//! Dense complex linear algebra for states of at most 16 dimensions.

mod eigen;
mod matrix;

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use eigen::{eig_hermitian, sqrt_psd, HermitianSpectrum};
pub use matrix::{ComplexMatrix, StateVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(a ⊗ b)[i*rb + k, j*cb + l] = a[i,j] * b[k,l]`
pub fn kron<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (rb, cb) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * rb, a.cols() * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

pub fn kron_all<T: Scalar>(factors: &[&ComplexMatrix<T>]) -> ComplexMatrix<T> {
    let (first, rest) = factors.split_first().expect("at least one factor");
    rest.iter().fold((*first).clone(), |acc, f| kron(&acc, f))
}

/// Ordered list of subsystem dimensions; subsystem 0 is the most significant
/// digit of the flat basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    dims: Vec<usize>,
}

impl Register {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Invalid(format!("bad register dimensions {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Mixed-radix digits of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems stay
/// in their register order regardless of the order given in `keep`.
pub fn partial_trace<T: Scalar>(rho: &ComplexMatrix<T>, layout: &Register, keep: &[usize]) -> Result<ComplexMatrix<T>> {
    rho.require_square()?;
    if rho.dim() != layout.total_dim() {
        return Err(Error::Dimension {
            expected: format!(
                "{}-dimensional state for register {:?}",
                layout.total_dim(),
                layout.dims()
            ),
            found: rho.dim().to_string(),
        });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= layout.len()) {
        return Err(Error::Invalid(format!("subsystem {bad} not in register")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..layout.len()).filter(|i| !kept.contains(i)).collect();

    let kept_reg = Register {
        dims: kept.iter().map(|&i| layout.dims[i]).collect::<Vec<_>>(),
    };
    let kept_reg = if kept_reg.dims.is_empty() {
        Register { dims: vec![1] }
    } else {
        kept_reg
    };
    let traced_reg = Register {
        dims: if traced.is_empty() {
            vec![1]
        } else {
            traced.iter().map(|&i| layout.dims[i]).collect()
        },
    };

    let n_out = kept_reg.total_dim();
    let mut out = ComplexMatrix::zeros(n_out, n_out);
    let mut digits_row = vec![0; layout.len()];
    let mut digits_col = vec![0; layout.len()];
    for r in 0..n_out {
        let kr = kept_reg.digits(r);
        for c in 0..n_out {
            let kc = kept_reg.digits(c);
            let mut acc = Complex::zero();
            for t in 0..traced_reg.total_dim() {
                let td = traced_reg.digits(t);
                for (slot, &sub) in kept.iter().enumerate() {
                    digits_row[sub] = kr[slot];
                    digits_col[sub] = kc[slot];
                }
                for (slot, &sub) in traced.iter().enumerate() {
                    digits_row[sub] = td[slot];
                    digits_col[sub] = td[slot];
                }
                acc = acc + rho[(layout.index(&digits_row), layout.index(&digits_col))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Reorders subsystems: new subsystem `k` is old subsystem `order[k]`.
pub fn permute_subsystems<T: Scalar>(
    rho: &ComplexMatrix<T>,
    layout: &Register,
    order: &[usize],
) -> Result<ComplexMatrix<T>> {
    rho.require_square()?;
    let n = layout.len();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
        return Err(Error::Invalid(format!("{order:?} is not a permutation of 0..{n}")));
    }
    if rho.dim() != layout.total_dim() {
        return Err(Error::Dimension {
            expected: layout.total_dim().to_string(),
            found: rho.dim().to_string(),
        });
    }
    let new_layout = Register {
        dims: order.iter().map(|&o| layout.dims[o]).collect(),
    };
    let map_index = |new_index: usize| {
        let nd = new_layout.digits(new_index);
        let mut od = vec![0; n];
        for (k, &o) in order.iter().enumerate() {
            od[o] = nd[k];
        }
        layout.index(&od)
    };
    let lookup: Vec<usize> = (0..rho.dim()).map(map_index).collect();
    Ok(ComplexMatrix::from_fn(rho.dim(), rho.dim(), |i, j| {
        rho[(lookup[i], lookup[j])]
    }))
}

/// `<target| rho |target>`.
pub fn fidelity_pure<T: Scalar>(rho: &ComplexMatrix<T>, target: &StateVector<T>) -> Result<T> {
    rho.require_square()?;
    if rho.dim() != target.len() {
        return Err(Error::Dimension {
            expected: rho.dim().to_string(),
            found: target.len().to_string(),
        });
    }
    let norm = target.norm();
    if (norm - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::Unnormalized { norm: norm.as_f64() });
    }
    Ok(rho.expectation(target).re)
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity_mixed<T: Scalar>(rho: &ComplexMatrix<T>, sigma: &ComplexMatrix<T>) -> Result<T> {
    let root = sqrt_psd(rho)?;
    let inner = root.matmul(sigma).matmul(&root).hermitian_part();
    let spec = eig_hermitian(&inner)?;
    let tr: T = spec.eigenvalues.iter().map(|&l| l.max(T::zero()).sqrt()).sum();
    Ok(tr * tr)
}

/// One failed physicality condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotSquare { rows: usize, cols: usize },
    NotHermitian { max_deviation: f64 },
    TraceNotOne { trace_re: f64, trace_im: f64 },
    NegativeEigenvalue { min_eigenvalue: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSquare { rows, cols } => write!(f, "not square ({rows}x{cols})"),
            Violation::NotHermitian { max_deviation } => {
                write!(f, "not Hermitian (max deviation {max_deviation:e})")
            }
            Violation::TraceNotOne { trace_re, trace_im } => {
                write!(f, "trace {trace_re}{trace_im:+}i != 1")
            }
            Violation::NegativeEigenvalue { min_eigenvalue } => {
                write!(f, "negative eigenvalue {min_eigenvalue:e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    pub min_eigenvalue: Option<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid at tolerance {:e}", self.tolerance);
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{} (tolerance {:e})", parts.join("; "), self.tolerance)
    }
}

/// Checks Hermiticity, unit trace and positivity, each at `tol`.
pub fn validate_state<T: Scalar>(rho: &ComplexMatrix<T>, tol: T) -> ValidationReport {
    let mut violations = Vec::new();
    let tolerance = tol.as_f64();
    if !rho.is_square() {
        violations.push(Violation::NotSquare {
            rows: rho.rows(),
            cols: rho.cols(),
        });
        return ValidationReport {
            tolerance,
            violations,
            min_eigenvalue: None,
        };
    }
    let defect = rho.hermiticity_defect();
    if defect > tol {
        violations.push(Violation::NotHermitian {
            max_deviation: defect.as_f64(),
        });
    }
    let tr = rho.trace();
    if (tr - Complex::new(T::one(), T::zero())).norm() > tol {
        violations.push(Violation::TraceNotOne {
            trace_re: tr.re.as_f64(),
            trace_im: tr.im.as_f64(),
        });
    }
    // Positivity is judged on the Hermitian part so a small Hermiticity defect
    // does not also block the spectrum check.
    let min_eigenvalue = eig_hermitian(&rho.hermitian_part()).ok().map(|s| s.min_eigenvalue());
    if let Some(m) = min_eigenvalue {
        if m < -tol {
            violations.push(Violation::NegativeEigenvalue {
                min_eigenvalue: m.as_f64(),
            });
        }
    }
    ValidationReport {
        tolerance,
        violations,
        min_eigenvalue: min_eigenvalue.map(Scalar::as_f64),
    }
}

/// Errors with [`Error::NotPhysical`] unless `rho` passes [`validate_state`] at the
/// scalar type's synthetic-state tolerance.
pub fn require_physical<T: Scalar>(rho: &ComplexMatrix<T>) -> Result<()> {
    let report = validate_state(rho, T::lit(T::PHYSICAL_TOL));
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::NotPhysical(report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    fn phi_plus() -> StateVector<f64> {
        StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]).scale(0.5f64.sqrt())
    }

    #[test]
    fn kron_identity() {
        assert_eq!(kron(&M::identity(2), &M::identity(2)), M::identity(4));
    }

    #[test]
    fn kron_diagonals() {
        let out = kron(&M::diagonal(&[1.0, 2.0]), &M::diagonal(&[3.0, 4.0]));
        assert_eq!(out, M::diagonal(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_of_bell_projectors_is_rank_one() {
        let p = M::projector(&phi_plus());
        let big = kron(&p, &p);
        assert!((big.trace().re - 1.0).abs() < 1e-12);
        assert_eq!(big.hermitian_rank(1e-9).unwrap(), 1);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let p = M::projector(&phi_plus());
        let a = partial_trace(&p, &Register::qubits(2), &[0]).unwrap();
        assert!(a.max_abs_diff(&M::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn product_state_factorizes() {
        let rho = M::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]).unwrap();
        let sigma = M::diagonal(&[0.4, 1.6]); // trace 2
        let joint = kron(&rho, &sigma);
        let left = partial_trace(&joint, &Register::qubits(2), &[0]).unwrap();
        assert!(left.max_abs_diff(&rho.scale(2.0)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_wrong_dimension() {
        let err = partial_trace(&M::identity(8), &Register::qubits(2), &[0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn partial_trace_keep_order_is_register_order() {
        let rho = kron(&M::diagonal(&[1.0, 0.0]), &M::diagonal(&[0.0, 1.0]));
        let a = partial_trace(&rho, &Register::qubits(2), &[1, 0]).unwrap();
        assert_eq!(a, rho);
    }

    #[test]
    fn permutation_swaps_factors() {
        let a = M::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.3]]).unwrap();
        let b = M::diagonal(&[0.1, 0.9]);
        let swapped = permute_subsystems(&kron(&a, &b), &Register::qubits(2), &[1, 0]).unwrap();
        assert_eq!(swapped, kron(&b, &a));
        assert!(permute_subsystems(&kron(&a, &b), &Register::qubits(2), &[0, 0]).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let p = M::projector(&phi_plus());
        assert!((fidelity_pure(&p, &phi_plus()).unwrap() - 1.0).abs() < 1e-15);
        let mixed = M::identity(4).scale(0.25);
        assert!((fidelity_pure(&mixed, &phi_plus()).unwrap() - 0.25).abs() < 1e-15);
        let bad = StateVector::from_real(&[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(fidelity_pure(&p, &bad), Err(Error::Unnormalized { .. })));
    }

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_states() {
        let p = M::projector(&phi_plus());
        let mixed = M::diagonal(&[0.5, 0.1, 0.1, 0.3]);
        let f = fidelity_mixed(&mixed, &p).unwrap();
        let overlap = fidelity_pure(&mixed, &phi_plus()).unwrap();
        assert!((f - overlap).abs() < 1e-10, "{f} vs {overlap}");
    }

    #[test]
    fn validation_verdicts() {
        assert!(validate_state(&M::identity(2).scale(0.5), 1e-9).is_valid());
        let report = validate_state(&M::diagonal(&[1.5, -0.5]), 1e-9);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::NegativeEigenvalue { .. }));
        let rect = M::zeros(2, 3);
        assert!(matches!(
            validate_state(&rect, 1e-9).violations[0],
            Violation::NotSquare { .. }
        ));
    }

    #[test]
    fn register_digits_round_trip() {
        let reg = Register::new(vec![2, 3, 2]).unwrap();
        for i in 0..reg.total_dim() {
            assert_eq!(reg.index(&reg.digits(i)), i);
        }
        assert!(Register::new(vec![]).is_err());
    }
}
