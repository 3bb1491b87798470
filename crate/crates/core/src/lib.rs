//! Simulation of single-copy entanglement purification on photon pairs that are
//! hyperentangled in polarization and spatial mode.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` and `f32` instantiations.

pub mod analysis;
pub mod channels;
pub mod error;
pub mod experiment;
pub mod fixture;
pub mod purify;
pub mod qmath;
pub mod scalar;
pub mod states;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = qmath::ComplexMatrix<f64>;
pub type Matrix32 = qmath::ComplexMatrix<f32>;
pub type Vector = qmath::StateVector<f64>;
pub type Vector32 = qmath::StateVector<f32>;
pub type Mixture = channels::PauliMixture<f64>;
pub type Schedule = channels::LcSchedule<f64>;
pub type Fiber = channels::FiberModel<f64>;
pub type Outcome = purify::PurificationOutcome<f64>;
pub type Outcome32 = purify::PurificationOutcome<f32>;
pub type Record = tomography::TomographyRecord<f64>;
