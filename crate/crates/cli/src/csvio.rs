//! CSV schemas: UTF-8, comma-separated, `#`-prefixed comment lines.
//!
//! Counts tables (`signature,a_deg,b_deg,n_pp,n_pm,n_mp,n_mm,twofold_1,
//! twofold_4`) carry one row per BSM signature and setting pair in
//! canonical order; HOM scans use `delay_fs,fourfolds,error`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use swapsim_core::bsm::BsmSignature;
use swapsim_core::chsh::AngleSettings;
use swapsim_core::mcsim::{CountsTable, HomScanResult};

use crate::error::CliError;

pub const PSI_MINUS: &str = "psi_minus";
pub const PSI_PLUS: &str = "psi_plus";

pub fn signature_name(signature: BsmSignature) -> &'static str {
    match signature {
        BsmSignature::PsiMinus => PSI_MINUS,
        BsmSignature::PsiPlus => PSI_PLUS,
        BsmSignature::NoSignature => "none",
    }
}

/// One counts-CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsRecord {
    pub signature: String,
    pub a_deg: f64,
    pub b_deg: f64,
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub twofold_1: u64,
    pub twofold_4: u64,
}

impl CountsRecord {
    pub fn outcome_counts(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }
}

/// Writes a simulated counts table; two-fold columns repeat per signature
/// row since they are counted per setting.
pub fn write_counts_csv(
    path: &Path,
    counts: &CountsTable,
    angles: &AngleSettings<f64>,
) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    writeln!(
        file,
        "# four-fold coincidence counts per BSM signature and analyzer setting pair"
    )?;
    writeln!(file, "# simulated pulses: {}", counts.n_pulses)?;
    let mut writer = csv::Writer::from_writer(file);
    let pairs = angles.pairs();
    for signature in BsmSignature::VALID {
        let table = counts.fourfolds_for(signature).expect("valid signature");
        for (k, (a, b)) in pairs.iter().enumerate() {
            let c = table[k];
            writer
                .serialize(CountsRecord {
                    signature: signature_name(signature).to_string(),
                    a_deg: a.angle_deg(),
                    b_deg: b.angle_deg(),
                    n_pp: c[0],
                    n_pm: c[1],
                    n_mp: c[2],
                    n_mm: c[3],
                    twofold_1: counts.twofolds_arm1[k],
                    twofold_4: counts.twofolds_arm4[k],
                })
                .map_err(|e| CliError::runtime(format!("csv write: {e}")))?;
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::runtime(format!("csv flush: {e}")))?;
    Ok(())
}

/// Reads a counts CSV; malformed rows are reported with their row number.
pub fn read_counts_csv(path: &Path) -> Result<Vec<CountsRecord>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<CountsRecord>().enumerate() {
        let record = row.map_err(|e| {
            CliError::config(format!("{}: malformed row {}: {e}", path.display(), i + 2))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::config(format!(
            "no data: {} contains no count rows",
            path.display()
        )));
    }
    Ok(records)
}

/// Writes a HOM scan: delay, four-fold count and its Poisson error.
pub fn write_hom_csv(path: &Path, scan: &HomScanResult<f64>) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)?;
    writeln!(
        file,
        "# HOM interference scan: four-fold coincidences per relative delay"
    )?;
    writeln!(file, "# pulses per point: {}", scan.n_pulses_per_point)?;
    writeln!(file, "delay_fs,fourfolds,error")?;
    for (delay, counts) in scan.delays_fs.iter().zip(&scan.fourfolds) {
        let error = (*counts as f64).max(1.0).sqrt();
        writeln!(file, "{delay},{counts},{error}")?;
    }
    Ok(())
}

/// Parses a HOM CSV back into (delays, counts); used by the round-trip
/// checks.
pub fn read_hom_csv(path: &Path) -> Result<(Vec<f64>, Vec<u64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?;
    let mut delays = Vec::new();
    let mut counts = Vec::new();
    #[derive(Deserialize)]
    struct Row {
        delay_fs: f64,
        fourfolds: u64,
        #[allow(dead_code)]
        error: f64,
    }
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| {
            CliError::config(format!("{}: malformed row {}: {e}", path.display(), i + 2))
        })?;
        delays.push(row.delay_fs);
        counts.push(row.fourfolds);
    }
    Ok((delays, counts))
}
