//! Real scalar abstraction shared by every numeric routine in the crate.
//!
//! All linear algebra is written against [`Scalar`], so the same code runs in
//! `f64` (the default everywhere) or `f32` for cheap sweeps. Tolerances that
//! only make sense at a given precision live on the trait.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Physicality tolerance for synthetic states.
    const PHYSICAL_TOL: f64;
    /// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
    const JACOBI_TOL: f64;

    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in
    /// both supported types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f64 {
    const PHYSICAL_TOL: f64 = 1e-9;
    const JACOBI_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const PHYSICAL_TOL: f64 = 1e-4;
    const JACOBI_TOL: f64 = 1e-6;
}
