//! Synchronization feasibility: how the PLL feedback bandwidth bounds the
//! source separation, and how timing jitter and filter bandwidth translate
//! into an interference-visibility penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sources::{coherence_time_fs, mode_overlap};

/// Speed of light in km/s.
const C_KM_PER_S: f64 = 299_792.458;

/// Printed alongside distance figures: the propagation bound is not the
/// only limit in practice.
pub const DISTANCE_CAVEAT: &str = "the c/bandwidth bound covers only signal propagation; \
path-length fluctuations and noise in the transmitted diode signal reduce the usable \
distance further";

/// Inputs of the synchronization budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncBudget<T: Scalar> {
    /// PLL feedback bandwidth in Hz.
    pub feedback_bandwidth_hz: T,
    /// RMS synchronization jitter in fs.
    pub jitter_fs: T,
    /// FWHM of the BSM-arm interference filters in nm.
    pub filter_fwhm_nm: T,
    /// Center wavelength in nm.
    pub center_nm: T,
}

impl<T: Scalar> Default for SyncBudget<T> {
    fn default() -> Self {
        Self {
            feedback_bandwidth_hz: T::from_f64_lossy(10e3),
            jitter_fs: T::from_f64_lossy(260.0),
            filter_fwhm_nm: T::from_f64_lossy(0.4),
            center_nm: T::from_f64_lossy(788.5),
        }
    }
}

impl<T: Scalar> SyncBudget<T> {
    pub fn validate(&self) -> Result<()> {
        if self.feedback_bandwidth_hz <= T::zero() {
            return Err(Error::InvalidParameter(
                "feedback bandwidth must be positive".into(),
            ));
        }
        if self.jitter_fs < T::zero() {
            return Err(Error::InvalidParameter("jitter must be non-negative".into()));
        }
        if self.filter_fwhm_nm <= T::zero() || self.center_nm <= T::zero() {
            return Err(Error::InvalidParameter(
                "filter bandwidth and wavelength must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn max_distance_km(&self) -> Result<T> {
        max_distance_km(self.feedback_bandwidth_hz)
    }

    pub fn visibility_penalty(&self) -> Result<T> {
        visibility_penalty(self.jitter_fs, self.filter_fwhm_nm, self.center_nm)
    }
}

/// c / bandwidth in km: the distance over which the master laser's
/// photodiode signal can still close the feedback loop.
pub fn max_distance_km<T: Scalar>(feedback_bandwidth_hz: T) -> Result<T> {
    if feedback_bandwidth_hz <= T::zero() {
        return Err(Error::InvalidParameter(
            "feedback bandwidth must be positive".into(),
        ));
    }
    Ok(T::from_f64_lossy(C_KM_PER_S) / feedback_bandwidth_hz)
}

/// Mode overlap at zero static delay for photons filtered to the given
/// bandwidth and synchronized to the given jitter: the visibility ceiling
/// the synchronization quality imposes.
pub fn visibility_penalty<T: Scalar>(jitter_fs: T, filter_fwhm_nm: T, center_nm: T) -> Result<T> {
    let tau = coherence_time_fs(filter_fwhm_nm, center_nm);
    Ok(mode_overlap(T::zero(), jitter_fs, tau, tau)?.value())
}
