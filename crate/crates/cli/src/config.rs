//! Run configuration: a human-editable TOML file (JSON accepted as an
//! alternative encoding) validated against the schema below. Unknown keys
//! are rejected; every field has a default so minimal configs stay short.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use swapsim_core::calibrate::FitTargets;
use swapsim_core::chsh::AngleSettings;
use swapsim_core::mcsim::RunConfig;
use swapsim_core::sources::{SourceParams, TimingParams};

use crate::error::CliError;

/// Environment variable that overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "SWAPSIM_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_pulses: u64,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_pulses: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub efficiency: f64,
    pub dark_count_prob: f64,
    pub coincidence_window_ns: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob: 0.0,
            coincidence_window_ns: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BsmSection {
    /// Pins the mode overlap instead of deriving it from timing and
    /// filters.
    pub v_mode_override: Option<f64>,
}

/// Optional one-parameter source-visibility fit executed before the
/// swap-demo run; the fitted value replaces both sources' visibility.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub target_correlations: [f64; 4],
    pub correlation_tol: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub search_lo: f64,
    pub search_hi: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let t = FitTargets::<f64>::default();
        Self {
            target_correlations: t.correlations,
            correlation_tol: t.correlation_tol,
            s_min: t.s_min,
            s_max: t.s_max,
            search_lo: 0.85,
            search_hi: 1.0,
        }
    }
}

impl FitSection {
    pub fn targets(&self) -> FitTargets<f64> {
        FitTargets {
            correlations: self.target_correlations,
            correlation_tol: self.correlation_tol,
            s_min: self.s_min,
            s_max: self.s_max,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomScanSection {
    pub delay_min_fs: f64,
    pub delay_max_fs: f64,
    pub points: usize,
    pub pulses_per_point: u64,
}

impl Default for HomScanSection {
    fn default() -> Self {
        Self {
            delay_min_fs: -6000.0,
            delay_max_fs: 6000.0,
            points: 41,
            pulses_per_point: 60_000,
        }
    }
}

impl HomScanSection {
    pub fn delays(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let step = (self.delay_max_fs - self.delay_min_fs) / (n - 1) as f64;
        (0..n).map(|i| self.delay_min_fs + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// The full experiment configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub source_a: SourceParams<f64>,
    pub source_b: SourceParams<f64>,
    pub timing: TimingParams<f64>,
    pub detection: DetectionSection,
    pub angles: AngleSettings<f64>,
    pub bsm: BsmSection,
    pub fit: Option<FitSection>,
    pub hom_scan: HomScanSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Loads and schema-validates a config file; the extension selects the
    /// encoding (`.json` for JSON, TOML otherwise).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = if path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"))
        {
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        };
        config.to_run_config().validate().map_err(CliError::from_config_error)?;
        Ok(config)
    }

    pub fn to_run_config(&self) -> RunConfig<f64> {
        RunConfig {
            n_pulses: self.run.n_pulses,
            source_a: self.source_a,
            source_b: self.source_b,
            timing: self.timing,
            detection_efficiency: self.detection.efficiency,
            dark_count_prob: self.detection.dark_count_prob,
            coincidence_window_ns: self.detection.coincidence_window_ns,
            rng_seed: self.run.seed,
            settings: self.angles,
            v_mode_override: self.bsm.v_mode_override,
        }
    }

    /// Output directory, honoring the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}
