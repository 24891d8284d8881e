//! Serialization of experiment results to CSV or JSON, on stdout or a file.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::spec::OutputFormat;
use crate::CliError;

/// One rate-curve row: a (mode, SNR) cell with both estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurveRow {
    pub snr_db: f64,
    pub mode: String,
    pub closed_form_rate: f64,
    pub mc_rate: f64,
    pub mc_std_error: f64,
}

/// One cell-average row: a (selector, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAverageRow {
    pub snr_db: f64,
    pub selector: String,
    pub mean_sum_rate: f64,
    pub std_error: f64,
    pub drops: u32,
    pub realizations: u32,
}

/// One candidate-set row for the CSV rendering of `modes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub set: String,
    pub size: u64,
    pub mode: String,
}

/// One validation-report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub status: String,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Render rows in the requested format; CSV gets a header line, JSON is a
/// compact array with a trailing newline. Both re-serialize byte-identically
/// after a parse.
pub fn render<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<Vec<u8>, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in rows {
                writer
                    .serialize(row)
                    .map_err(|e| CliError::Numerical(format!("csv serialization: {e}")))?;
            }
            writer
                .into_inner()
                .map_err(|e| CliError::Numerical(format!("csv flush: {e}")))
        }
        OutputFormat::Json => {
            let mut bytes = serde_json::to_vec(rows)
                .map_err(|e| CliError::Numerical(format!("json serialization: {e}")))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// Parse rows back from either format (used by round-trip checks).
pub fn parse_rows<T: DeserializeOwned>(
    bytes: &[u8],
    format: OutputFormat,
) -> Result<Vec<T>, CliError> {
    match format {
        OutputFormat::Csv => csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| CliError::Numerical(format!("csv parse: {e}"))),
        OutputFormat::Json => serde_json::from_slice(bytes)
            .map_err(|e| CliError::Numerical(format!("json parse: {e}"))),
    }
}

/// Write bytes to `out`, or stdout when no path is configured.
pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Numerical(format!("stdout: {e}"))),
    }
}
