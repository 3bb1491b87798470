//! Matrix fixture files: `{rows, cols, re: [...], im: [...]}`, row-major.
//!
//! Two experimentally reconstructed two-qubit states ship with the crate: the
//! polarization and spatial-mode states after 20% bit-flip loading over the
//! 11 km multicore fiber. They are printed to three decimals, so ingestion
//! accepts them at a looser tolerance and replaces them with their Hermitian
//! part.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{validate_state, ComplexMatrix, ValidationReport};
use crate::scalar::Scalar;

/// Physicality tolerance for reconstructed (measured) matrices.
pub const EXPERIMENTAL_TOL: f64 = 0.02;

pub const RHO_P_08_JSON: &str = include_str!("../fixtures/rho_p_08.json");
pub const RHO_S_08_JSON: &str = include_str!("../fixtures/rho_s_08.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix<T: Scalar>(m: &ComplexMatrix<T>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: m.as_slice().iter().map(|z| z.re.as_f64()).collect(),
            im: m.as_slice().iter().map(|z| z.im.as_f64()).collect(),
        }
    }

    pub fn to_matrix<T: Scalar>(&self) -> Result<ComplexMatrix<T>> {
        if self.re.len() != self.im.len() {
            return Err(Error::Dimension {
                expected: format!("re and im of equal length ({})", self.re.len()),
                found: self.im.len().to_string(),
            });
        }
        if let Some(bad) = self.re.iter().chain(&self.im).find(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite matrix entry {bad}")));
        }
        let data = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex::new(T::lit(r), T::lit(i)))
            .collect();
        ComplexMatrix::new(self.rows, self.cols, data)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        // Unreadable or malformed files are input errors; physicality is judged by `ingest`.
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// A measured state accepted for simulation.
#[derive(Debug, Clone)]
pub struct Ingested<T> {
    /// Hermitian part of the file contents.
    pub state: ComplexMatrix<T>,
    /// Verdict on the raw contents at the ingestion tolerance.
    pub raw_report: ValidationReport,
    /// Largest `|a - a^dagger|` found in the file.
    pub hermiticity_defect: f64,
}

/// Validates a measured matrix at `tol` and symmetrizes it via `(rho + rho^dagger)/2`.
pub fn ingest<T: Scalar>(m: &MatrixFile, tol: f64, source: &str) -> Result<Ingested<T>> {
    let raw: ComplexMatrix<T> = m.to_matrix().map_err(|e| Error::Fixture {
        path: source.into(),
        reason: e.to_string(),
    })?;
    let report = validate_state(&raw, T::lit(tol));
    if !report.is_valid() {
        return Err(Error::Fixture {
            path: source.into(),
            reason: report.to_string(),
        });
    }
    Ok(Ingested {
        hermiticity_defect: raw.hermiticity_defect().as_f64(),
        state: raw.hermitian_part(),
        raw_report: report,
    })
}

pub fn ingest_path<T: Scalar>(path: impl AsRef<Path>, tol: f64) -> Result<Ingested<T>> {
    let path = path.as_ref();
    ingest(&MatrixFile::load(path)?, tol, &path.display().to_string())
}

/// The bundled polarization state after 20% bit-flip loading.
pub fn rho_p_08<T: Scalar>() -> ComplexMatrix<T> {
    bundled(RHO_P_08_JSON, "rho_p_08.json")
}

/// The bundled spatial-mode state after 20% bit-flip loading.
pub fn rho_s_08<T: Scalar>() -> ComplexMatrix<T> {
    bundled(RHO_S_08_JSON, "rho_s_08.json")
}

fn bundled<T: Scalar>(text: &str, name: &str) -> ComplexMatrix<T> {
    let file = MatrixFile::from_json(text).expect("bundled fixture parses");
    ingest(&file, EXPERIMENTAL_TOL, name)
        .expect("bundled fixture is near-physical")
        .state
}
