//! Floating-point scalar abstraction: all state algebra and statistics are
//! generic over `Scalar`, instantiated at `f32` or `f64`.

use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type the toolkit is generic over.
///
/// Tolerances are associated constants because their sensible values depend
/// on the precision of the concrete type.
pub trait Scalar:
    nalgebra::RealField + FromPrimitive + ToPrimitive + Copy + Default + 'static
{
    /// Elementwise Hermiticity tolerance for density matrices.
    const HERMITICITY_TOL: Self;
    /// Trace-one tolerance for density matrices.
    const TRACE_TOL: Self;
    /// Lower bound tolerance for density-matrix eigenvalues.
    const POSITIVITY_TOL: Self;
    /// Idempotency/Hermiticity tolerance when validating projectors.
    const PROJECTOR_TOL: Self;
    /// Probabilities below this are treated as impossible outcomes.
    const PROBABILITY_FLOOR: Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }

    fn is_finite_value(self) -> bool;
}

impl Scalar for f64 {
    const HERMITICITY_TOL: f64 = 1e-12;
    const TRACE_TOL: f64 = 1e-12;
    const POSITIVITY_TOL: f64 = 1e-10;
    const PROJECTOR_TOL: f64 = 1e-10;
    const PROBABILITY_FLOOR: f64 = 1e-12;

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    const HERMITICITY_TOL: f32 = 1e-5;
    const TRACE_TOL: f32 = 1e-5;
    const POSITIVITY_TOL: f32 = 1e-4;
    const PROJECTOR_TOL: f32 = 1e-4;
    const PROBABILITY_FLOOR: f32 = 1e-6;

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}
