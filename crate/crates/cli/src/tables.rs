//! CSV row types exchanged between subcommands.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const STATUS_OK: &str = "ok";
pub const STATUS_ERROR: &str = "error";

/// One row of an `estimate` output. Failed images have `status = error`, no
/// ITA, and the error code and message instead of diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub id: String,
    /// Calibrated when a calibration model was given, raw otherwise.
    pub ita: Option<f64>,
    pub method: String,
    pub status: String,
    pub ita_raw: Option<f64>,
    pub error_code: Option<String>,
    /// JSON diagnostics for successful rows, the error message otherwise.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: String,
    pub gt_fp: u8,
    pub provisional_fp: u8,
    pub mean_ita: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub split: String,
    pub fp_pred: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlandAltmanRow<'a> {
    pub method: &'a str,
    pub id: &'a str,
    pub mean: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionRow<'a> {
    pub method: &'a str,
    pub gt_fp: usize,
    pub pred_fp: usize,
    pub count: u64,
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::io(path, e),
        _ => CliError::Usage(format!("{}: {e}", path.display())),
    })?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::Usage(format!("{}: malformed row: {e}", path.display()))))
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    derma_core::synth::write_json(path, value)?;
    Ok(())
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
