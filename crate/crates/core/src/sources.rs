//! Photon-pair source models: Werner-noise state emission per pulse and the
//! conversion of optical parameters (filter bandwidth, wavelength, timing
//! jitter) into temporal-mode overlap at the Bell-state measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{bell_state, BellLabel, DensityMatrix};
use crate::scalar::Scalar;

/// Speed of light in nm/s.
const C_NM_PER_S: f64 = 2.997_924_58e17;

/// Gaussian time-bandwidth product (intensity FWHM times spectral FWHM).
const TIME_BANDWIDTH: f64 = 0.441;

/// Converts an intensity FWHM to the standard deviation of the Gaussian.
const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_54; // 1 / (2 sqrt(2 ln 2))

/// Per-source emission model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceParams<T: Scalar> {
    /// Bell state the source is aligned to produce.
    pub target: BellLabel,
    /// Werner mixing weight of the emitted state, in [0, 1].
    pub state_visibility: T,
    /// Probability of emitting one pair per pump pulse, in [0, 1].
    pub pair_probability: T,
    /// FWHM of the interference filter on the arm feeding the BSM, in nm.
    pub bsm_arm_filter_fwhm_nm: T,
    /// FWHM of the interference filter on the analyzer arm, in nm.
    pub outer_arm_filter_fwhm_nm: T,
    /// Center wavelength of the down-converted photons, in nm.
    pub center_wavelength_nm: T,
}

impl<T: Scalar> Default for SourceParams<T> {
    fn default() -> Self {
        Self {
            target: BellLabel::PsiMinus,
            state_visibility: T::one(),
            pair_probability: T::from_f64_lossy(0.01),
            bsm_arm_filter_fwhm_nm: T::from_f64_lossy(0.4),
            outer_arm_filter_fwhm_nm: T::from_f64_lossy(3.0),
            center_wavelength_nm: T::from_f64_lossy(788.5),
        }
    }
}

impl<T: Scalar> SourceParams<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: T, name: &str| {
            if x < T::zero() || x > T::one() {
                Err(Error::InvalidParameter(format!(
                    "{name} = {} outside [0, 1]",
                    x.to_f64_lossy()
                )))
            } else {
                Ok(())
            }
        };
        unit(self.state_visibility, "state_visibility")?;
        unit(self.pair_probability, "pair_probability")?;
        let positive = |x: T, name: &str| {
            if x <= T::zero() {
                Err(Error::InvalidParameter(format!(
                    "{name} = {} must be positive",
                    x.to_f64_lossy()
                )))
            } else {
                Ok(())
            }
        };
        positive(self.bsm_arm_filter_fwhm_nm, "bsm_arm_filter_fwhm_nm")?;
        positive(self.outer_arm_filter_fwhm_nm, "outer_arm_filter_fwhm_nm")?;
        positive(self.center_wavelength_nm, "center_wavelength_nm")
    }

    /// Coherence time of the BSM-arm photons in fs.
    pub fn bsm_arm_coherence_fs(&self) -> T {
        coherence_time_fs(self.bsm_arm_filter_fwhm_nm, self.center_wavelength_nm)
    }
}

/// Pulse-train timing and synchronization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingParams<T: Scalar> {
    /// Delay between successive pump pulses, in ns.
    pub pulse_period_ns: T,
    /// RMS synchronization jitter between the two sources, in fs.
    pub sync_jitter_fs: T,
    /// Static relative arrival offset of the BSM photons, in fs (the HOM
    /// scan variable).
    pub static_delay_fs: T,
}

impl<T: Scalar> Default for TimingParams<T> {
    fn default() -> Self {
        Self {
            pulse_period_ns: T::from_f64_lossy(13.0),
            sync_jitter_fs: T::from_f64_lossy(260.0),
            static_delay_fs: T::zero(),
        }
    }
}

impl<T: Scalar> TimingParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.pulse_period_ns <= T::zero() {
            return Err(Error::InvalidParameter("pulse_period_ns must be positive".into()));
        }
        if self.sync_jitter_fs < T::zero() {
            return Err(Error::InvalidParameter("sync_jitter_fs must be non-negative".into()));
        }
        Ok(())
    }
}

/// Probability-level indistinguishability of the two BSM photons.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ModeOverlap<T: Scalar>(T);

impl<T: Scalar> ModeOverlap<T> {
    pub fn new(v: T) -> Result<Self> {
        if v < T::zero() || v > T::one() {
            return Err(Error::InvalidParameter(format!(
                "mode overlap {} outside [0, 1]",
                v.to_f64_lossy()
            )));
        }
        Ok(Self(v))
    }

    pub fn value(&self) -> T {
        self.0
    }
}

/// rho = v |target><target| + (1 - v) I/4.
pub fn emit_state<T: Scalar>(params: &SourceParams<T>) -> Result<DensityMatrix<T>> {
    params.validate()?;
    let v = params.state_visibility;
    let pure = bell_state::<T>(params.target).projector();
    let quarter = T::from_f64_lossy(0.25) * (T::one() - v);
    let mut m = pure.map(|x| x * num_complex::Complex::new(v, T::zero()));
    for i in 0..4 {
        m[(i, i)] += num_complex::Complex::new(quarter, T::zero());
    }
    Ok(DensityMatrix::from_parts_unchecked(2, m))
}

/// Intensity-FWHM coherence time in fs for a Gaussian filter of the given
/// FWHM bandwidth: dnu = c dlambda / lambda^2, tau = 0.441 / dnu.
pub fn coherence_time_fs<T: Scalar>(fwhm_nm: T, center_nm: T) -> T {
    let dl = fwhm_nm.to_f64_lossy();
    let lam = center_nm.to_f64_lossy();
    let dnu = C_NM_PER_S * dl / (lam * lam);
    T::from_f64_lossy(TIME_BANDWIDTH / dnu * 1e15)
}

/// Jitter-averaged two-photon overlap probability for Gaussian wavepackets
/// of intensity FWHM `tau1_fs`, `tau2_fs` whose relative delay is Gaussian
/// with mean `delay_fs` and standard deviation `jitter_fs`.
///
/// Closed form of the Gaussian HOM overlap integral averaged over the delay
/// distribution, with si the intensity standard deviations and
/// s2 = s1^2 + s2^2:
///
///   V = 2 s1 s2 / (sqrt(s2) sqrt(s2 + j^2)) * exp(-d^2 / (2 (s2 + j^2)))
pub fn mode_overlap<T: Scalar>(
    delay_fs: T,
    jitter_fs: T,
    tau1_fs: T,
    tau2_fs: T,
) -> Result<ModeOverlap<T>> {
    if tau1_fs <= T::zero() || tau2_fs <= T::zero() {
        return Err(Error::InvalidParameter("coherence times must be positive".into()));
    }
    if jitter_fs < T::zero() {
        return Err(Error::InvalidParameter("jitter must be non-negative".into()));
    }
    let k = T::from_f64_lossy(FWHM_TO_SIGMA);
    let s1 = tau1_fs * k;
    let s2 = tau2_fs * k;
    let ssum = s1 * s1 + s2 * s2;
    let broadened = ssum + jitter_fs * jitter_fs;
    let two = T::from_f64_lossy(2.0);
    let amp = two * s1 * s2 / (ssum.sqrt() * broadened.sqrt());
    let v = amp * (-delay_fs * delay_fs / (two * broadened)).exp();
    // Roundoff can push the identical-mode case epsilon above 1.
    ModeOverlap::new(v.min(T::one()))
}

/// Bernoulli pair emission for one pump pulse: with probability
/// `pair_probability` returns the emitted two-qubit state.
pub fn emission_sample<T: Scalar, R: Rng + ?Sized>(
    params: &SourceParams<T>,
    rng: &mut R,
) -> Result<Option<DensityMatrix<T>>> {
    let p = params.pair_probability.to_f64_lossy();
    if rng.random::<f64>() < p {
        Ok(Some(emit_state(params)?))
    } else {
        Ok(None)
    }
}
