//! Versioned JSON report schemas. Every report carries `schema_version`
//! and rejects unknown fields on re-parse, which is what the round-trip
//! tests validate.

use serde::{Deserialize, Serialize};

use swapsim_core::calibrate::VisibilityFit;
use swapsim_core::chsh::{ChshResult, CorrelationEstimate};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingLabel {
    pub a_deg: f64,
    pub b_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationEntry {
    pub e: f64,
    pub std_error: f64,
    pub counts: Option<[u64; 4]>,
}

impl From<CorrelationEstimate<f64>> for CorrelationEntry {
    fn from(est: CorrelationEstimate<f64>) -> Self {
        Self {
            e: est.e,
            std_error: est.std_error,
            counts: est.counts,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub state_visibility: f64,
    pub model_correlations: [f64; 4],
    pub residuals: [f64; 4],
    pub s_model: f64,
    pub within_tolerance: bool,
    pub missed_targets: Vec<String>,
}

impl From<&VisibilityFit<f64>> for FitReport {
    fn from(fit: &VisibilityFit<f64>) -> Self {
        Self {
            state_visibility: fit.state_visibility,
            model_correlations: fit.model_correlations,
            residuals: fit.residuals,
            s_model: fit.s_model,
            within_tolerance: fit.within_tolerance,
            missed_targets: fit.missed_targets.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantAnalytic {
    pub variant: String,
    pub s: f64,
    /// E per setting pair, canonical order.
    pub correlations: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantEstimated {
    pub variant: String,
    pub s: f64,
    pub std_error: f64,
    /// (S - 2) / sigma; absent when the error vanishes.
    pub significance: Option<f64>,
    pub fourfolds: u64,
    pub correlations: [CorrelationEntry; 4],
}

pub fn estimated_block(
    variant: &str,
    result: &ChshResult<f64>,
    significance: Option<f64>,
    fourfolds: u64,
) -> VariantEstimated {
    VariantEstimated {
        variant: variant.to_string(),
        s: result.s,
        std_error: result.std_error,
        significance,
        fourfolds,
        correlations: result.estimates.map(CorrelationEntry::from),
    }
}

/// Full swap-demo report: analytic and Monte Carlo CHSH side by side, with
/// the expectation-value table laid out per variant and setting pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapDemoReport {
    pub schema_version: u32,
    pub command: String,
    pub rng_seed: u64,
    pub n_pulses: u64,
    pub v_mode: f64,
    pub state_visibility_a: f64,
    pub state_visibility_b: f64,
    pub settings: [SettingLabel; 4],
    pub fit: Option<FitReport>,
    pub analytic: Vec<VariantAnalytic>,
    pub estimated: Vec<VariantEstimated>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomScanReport {
    pub schema_version: u32,
    pub command: String,
    pub visibility: f64,
    pub visibility_err: f64,
    pub baseline: f64,
    pub baseline_err: f64,
    pub center_fs: f64,
    pub center_err_fs: f64,
    pub width_fs: f64,
    pub width_err_fs: f64,
    pub chi2: f64,
    pub reduced_chi2: f64,
    pub n_points: usize,
    pub pulses_per_point: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshCountsReport {
    pub schema_version: u32,
    pub command: String,
    pub variant: String,
    pub normalized: bool,
    pub s: f64,
    pub std_error: f64,
    /// (S - 2) / sigma; absent when the error vanishes.
    pub significance: Option<f64>,
    pub correlations: [CorrelationEntry; 4],
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization")
}
