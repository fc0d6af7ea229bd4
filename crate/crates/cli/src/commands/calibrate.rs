use std::collections::BTreeMap;

use derma_core::calibration::{fit_ols, fit_ols_per_lighting, CalibrationModel};
use derma_core::color::ItaDegrees;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{id_list, open_dataset};
use crate::cli::CalibrateArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, ManifestBuilder};
use crate::tables::{read_csv, write_json_file, EstimateRow, STATUS_OK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightingModel {
    pub lighting_id: u32,
    pub slope: f64,
    pub intercept: f64,
    pub n_fit: usize,
    pub r2_fit: f64,
}

/// Fit quality on the fit split and on the held-out split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub seed: u64,
    pub fit_fraction: f64,
    pub n_fit: usize,
    pub n_eval: usize,
    /// Mean of `calibrated − reference` over the fit split.
    pub fit_bias: f64,
    pub eval_mse_raw: f64,
    pub eval_mse_calibrated: f64,
}

/// `calibrate` output. The first four fields are the global model; the rest
/// is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub slope: f64,
    pub intercept: f64,
    pub n_fit: usize,
    pub r2_fit: f64,
    #[serde(default)]
    pub method: String,
    #[serde(default)]
    pub reference: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_lighting: Vec<LightingModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout: Option<HoldoutReport>,
}

impl CalibrationFile {
    pub fn global(&self) -> CalibrationModel {
        CalibrationModel {
            slope: self.slope,
            intercept: self.intercept,
            n_fit: self.n_fit,
            r2_fit: self.r2_fit,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.global().validate()?;
        for m in &self.per_lighting {
            if !m.slope.is_finite() || !m.intercept.is_finite() {
                return Err(CliError::Usage(format!(
                    "calibration for lighting {} has non-finite coefficients",
                    m.lighting_id
                )));
            }
        }
        Ok(())
    }

    /// Per-lighting model when one was fitted for `lighting_id`, the global
    /// model otherwise.
    pub fn apply(&self, lighting_id: u32, raw: ItaDegrees) -> ItaDegrees {
        match self.per_lighting.iter().find(|m| m.lighting_id == lighting_id) {
            Some(m) => ItaDegrees(m.slope * raw.0 + m.intercept),
            None => self.global().apply(raw),
        }
    }
}

fn ok_values(rows: &[EstimateRow]) -> BTreeMap<&str, f64> {
    rows.iter()
        .filter(|r| r.status == STATUS_OK)
        .filter_map(|r| Some((r.id.as_str(), r.ita_raw.or(r.ita)?)))
        .collect()
}

fn method_of(rows: &[EstimateRow]) -> String {
    rows.first().map(|r| r.method.clone()).unwrap_or_default()
}

fn mse(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len().max(1) as f64
}

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    if !(args.fit_fraction > 0.0 && args.fit_fraction <= 1.0) {
        return Err(CliError::Usage(format!(
            "--fit-fraction must be in (0, 1], got {}",
            args.fit_fraction
        )));
    }
    let est: Vec<EstimateRow> = read_csv(&args.estimates)?;
    let reference: Vec<EstimateRow> = read_csv(&args.reference)?;
    let x_by_id = ok_values(&est);
    let y_by_id = ok_values(&reference);
    let unmatched: Vec<String> = est
        .iter()
        .map(|r| &r.id)
        .filter(|id| !reference.iter().any(|q| &q.id == *id))
        .cloned()
        .collect();
    if !unmatched.is_empty() {
        return Err(CliError::Usage(format!(
            "ids of {} missing from {}: {}",
            args.estimates.display(),
            args.reference.display(),
            id_list(&unmatched)
        )));
    }
    // Raw values: calibration is always fitted on uncalibrated estimates.
    let mut ids: Vec<&str> = x_by_id.keys().copied().filter(|id| y_by_id.contains_key(id)).collect();

    let mut manifest = ManifestBuilder::new("calibrate", args, Some(args.seed));
    manifest.input(&args.estimates)?;
    manifest.input(&args.reference)?;

    let n_fit = ((args.fit_fraction * ids.len() as f64).round() as usize).clamp(2.min(ids.len()), ids.len());
    let holdout = args.fit_fraction < 1.0;
    if holdout {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(args.seed));
    }
    let (fit_ids, eval_ids) = ids.split_at(n_fit);
    let mut fit_ids = fit_ids.to_vec();
    fit_ids.sort_unstable();
    let x: Vec<f64> = fit_ids.iter().map(|id| x_by_id[id]).collect();
    let y: Vec<f64> = fit_ids.iter().map(|id| y_by_id[id]).collect();

    let mut per_lighting = Vec::new();
    let model = if args.per_lighting {
        let dataset_path = args.dataset.as_ref().expect("clap enforces --dataset");
        let dataset = open_dataset(dataset_path)?;
        manifest.dataset(dataset_path)?;
        let light: BTreeMap<&str, u32> = dataset.rows.iter().map(|r| (r.id.as_str(), r.lighting_id)).collect();
        let missing: Vec<String> = fit_ids
            .iter()
            .filter(|id| !light.contains_key(*id))
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Usage(format!(
                "ids not in the dataset: {}",
                id_list(&missing)
            )));
        }
        let l: Vec<u32> = fit_ids.iter().map(|id| light[id]).collect();
        let fit = fit_ols_per_lighting(&x, &y, &l)?;
        per_lighting = fit
            .per_lighting
            .iter()
            .map(|(&lighting_id, m)| LightingModel {
                lighting_id,
                slope: m.slope,
                intercept: m.intercept,
                n_fit: m.n_fit,
                r2_fit: m.r2_fit,
            })
            .collect();
        fit.global
    } else {
        fit_ols(&x, &y)?
    };

    let mut file = CalibrationFile {
        slope: model.slope,
        intercept: model.intercept,
        n_fit: model.n_fit,
        r2_fit: model.r2_fit,
        method: method_of(&est),
        reference: method_of(&reference),
        per_lighting,
        holdout: None,
    };
    if holdout && !eval_ids.is_empty() {
        let global = file.global();
        let fit_res: Vec<f64> = fit_ids
            .iter()
            .map(|id| global.apply(ItaDegrees(x_by_id[id])).0 - y_by_id[id])
            .collect();
        let raw: Vec<f64> = eval_ids.iter().map(|id| x_by_id[id]).collect();
        let cal: Vec<f64> = eval_ids
            .iter()
            .map(|id| global.apply(ItaDegrees(x_by_id[id])).0)
            .collect();
        let target: Vec<f64> = eval_ids.iter().map(|id| y_by_id[id]).collect();
        file.holdout = Some(HoldoutReport {
            seed: args.seed,
            fit_fraction: args.fit_fraction,
            n_fit: fit_ids.len(),
            n_eval: eval_ids.len(),
            fit_bias: fit_res.iter().sum::<f64>() / fit_res.len() as f64,
            eval_mse_raw: mse(&raw, &target),
            eval_mse_calibrated: mse(&cal, &target),
        });
    }
    write_json_file(&args.out, &file)?;
    manifest.output(&args.out)?;
    manifest.write(&manifest_path(&args.out))?;
    eprintln!(
        "{} -> {}: slope {:.4}, intercept {:.4}, R² {:.4} on {} images",
        file.method, file.reference, file.slope, file.intercept, file.r2_fit, file.n_fit
    );
    Ok(())
}
