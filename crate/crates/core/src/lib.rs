//! Simulation and analysis toolkit for entanglement swapping between two
//! independent pulsed photon-pair sources: exact few-qubit state algebra,
//! a linear-optics Bell-state measurement with partial distinguishability,
//! CHSH statistics, an event-level Monte Carlo, Hong-Ou-Mandel dip fitting
//! and a timing-synchronization budget calculator.
//!
//! All numerics are generic over the floating-point type through
//! [`Scalar`]; the `*64` aliases at the crate root pin the default
//! double-precision instantiation.

pub mod bsm;
pub mod calibrate;
pub mod chsh;
pub mod error;
pub mod mcsim;
pub mod qcore;
pub mod scalar;
pub mod sources;
pub mod syncbudget;

pub use error::{Error, Result};
pub use scalar::Scalar;

// Concrete double-precision aliases for the main types.
pub type PureState64 = qcore::PureState<f64>;
pub type DensityMatrix64 = qcore::DensityMatrix<f64>;
pub type PolarizerSetting64 = qcore::PolarizerSetting<f64>;
pub type SourceParams64 = sources::SourceParams<f64>;
pub type TimingParams64 = sources::TimingParams<f64>;
pub type ModeOverlap64 = sources::ModeOverlap<f64>;
pub type BsmModel64 = bsm::BsmModel<f64>;
pub type BsmOutcome64 = bsm::BsmOutcome<f64>;
pub type AngleSettings64 = chsh::AngleSettings<f64>;
pub type CorrelationEstimate64 = chsh::CorrelationEstimate<f64>;
pub type ChshResult64 = chsh::ChshResult<f64>;
pub type RunConfig64 = mcsim::RunConfig<f64>;
pub type HomScanResult64 = mcsim::HomScanResult<f64>;
pub type GaussianDipFit64 = mcsim::GaussianDipFit<f64>;
pub type SyncBudget64 = syncbudget::SyncBudget<f64>;
pub type FitTargets64 = calibrate::FitTargets<f64>;
pub type VisibilityFit64 = calibrate::VisibilityFit<f64>;
