use serde::{Deserialize, Serialize};

use super::{bland_altman, bootstrap_ci, fit_r2, fp_metrics, pearson, BootstrapConfig, FpMetrics, LightingSensitivity};
use crate::color::FitzpatrickType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportConfig {
    pub bootstrap: BootstrapConfig,
}

/// One method's outputs aligned with the dataset rows. `None` marks a row the
/// method failed on; such rows are left out of that method's statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodInput {
    pub name: String,
    /// Absent for methods that predict a type without an ITA.
    pub ita: Option<Vec<Option<f64>>>,
    pub fp_pred: Vec<Option<FitzpatrickType>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub rho: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_resamples_valid: usize,
    pub n_resamples_skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanSummary {
    pub n: usize,
    pub bias: f64,
    pub sd: f64,
    pub loa_low: f64,
    pub loa_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Rows with a usable ITA (or type prediction, for type-only methods).
    pub n_used: usize,
    pub n_failed: usize,
    /// Pearson correlation of ITA with melanosome fraction.
    pub pearson_mel: Option<CorrelationSummary>,
    /// Agreement with the reference method's ITA, `method − reference`
    /// (all zero for the reference itself).
    pub bland_altman: Option<BlandAltmanSummary>,
    pub lighting: Option<LightingSensitivity>,
    pub fp: Option<FpMetrics>,
}

/// Row-level Bland-Altman data for one method, for export.
#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltmanPoints {
    pub method: String,
    pub ids: Vec<String>,
    pub means: Vec<f64>,
    pub diffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_images: usize,
    /// Distinct lighting ids of the evaluated rows, ascending.
    pub lighting_levels: Vec<u32>,
    pub reference_method: Option<String>,
    pub config: ReportConfig,
    pub methods: Vec<MethodReport>,
    #[serde(skip)]
    pub bland_altman_points: Vec<BlandAltmanPoints>,
}

fn pick<T: Copy>(values: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| values[i]).collect()
}

impl EvalReport {
    /// Builds the full evaluation. `reference` names the method whose ITA
    /// is the Bland-Altman reference for every other ITA method.
    pub fn build(
        ids: &[String],
        mel: &[f64],
        lighting: &[u32],
        gt: &[FitzpatrickType],
        methods: &[MethodInput],
        reference: Option<&str>,
        cfg: &ReportConfig,
    ) -> Result<EvalReport> {
        let n = ids.len();
        if mel.len() != n || lighting.len() != n || gt.len() != n {
            return Err(Error::DimensionMismatch(
                "ids, mel, lighting and ground truth must have equal length".into(),
            ));
        }
        for m in methods {
            let ita_len = m.ita.as_ref().map_or(n, Vec::len);
            if ita_len != n || m.fp_pred.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "method {} has {} ITA values and {} predictions for {n} rows",
                    m.name,
                    ita_len,
                    m.fp_pred.len()
                )));
            }
        }
        let reference_ita = match reference {
            Some(name) => Some(
                methods
                    .iter()
                    .find(|m| m.name == name)
                    .and_then(|m| m.ita.as_ref())
                    .ok_or_else(|| Error::InvalidParams(format!("reference method {name} has no ITA values")))?,
            ),
            None => None,
        };

        let mut reports = Vec::with_capacity(methods.len());
        let mut points = Vec::new();
        for m in methods {
            let fp_rows: Vec<usize> = (0..n).filter(|&i| m.fp_pred[i].is_some()).collect();
            let fp = if fp_rows.is_empty() {
                None
            } else {
                let pred: Vec<FitzpatrickType> = fp_rows.iter().map(|&i| m.fp_pred[i].unwrap()).collect();
                Some(fp_metrics(&pick(gt, &fp_rows), &pred)?)
            };

            let Some(ita) = &m.ita else {
                reports.push(MethodReport {
                    method: m.name.clone(),
                    n_used: fp_rows.len(),
                    n_failed: n - fp_rows.len(),
                    pearson_mel: None,
                    bland_altman: None,
                    lighting: None,
                    fp,
                });
                continue;
            };
            let rows: Vec<usize> = (0..n).filter(|&i| ita[i].is_some()).collect();
            let y: Vec<f64> = rows.iter().map(|&i| ita[i].unwrap()).collect();
            let x_mel = pick(mel, &rows);

            let rho = pearson(&y, &x_mel)?;
            let ci = bootstrap_ci(&y, &x_mel, pearson, &cfg.bootstrap)?;
            let lighting_fit = fit_r2(&y, &x_mel, &pick(lighting, &rows))?;

            let mut ba_summary = None;
            if let Some(reference_ita) = reference_ita {
                let both: Vec<usize> = rows.iter().copied().filter(|&i| reference_ita[i].is_some()).collect();
                let a: Vec<f64> = both.iter().map(|&i| ita[i].unwrap()).collect();
                let b: Vec<f64> = both.iter().map(|&i| reference_ita[i].unwrap()).collect();
                let ba = bland_altman(&a, &b)?;
                ba_summary = Some(BlandAltmanSummary {
                    n: both.len(),
                    bias: ba.bias,
                    sd: ba.sd,
                    loa_low: ba.loa_low,
                    loa_high: ba.loa_high,
                });
                points.push(BlandAltmanPoints {
                    method: m.name.clone(),
                    ids: both.iter().map(|&i| ids[i].clone()).collect(),
                    means: ba.means,
                    diffs: ba.diffs,
                });
            }

            reports.push(MethodReport {
                method: m.name.clone(),
                n_used: rows.len(),
                n_failed: n - rows.len(),
                pearson_mel: Some(CorrelationSummary {
                    rho,
                    ci_lo: ci.lo,
                    ci_hi: ci.hi,
                    n_resamples_valid: ci.n_valid,
                    n_resamples_skipped: ci.n_skipped,
                }),
                bland_altman: ba_summary,
                lighting: Some(lighting_fit),
                fp,
            });
        }
        let mut lighting_levels = lighting.to_vec();
        lighting_levels.sort_unstable();
        lighting_levels.dedup();
        Ok(EvalReport {
            n_images: n,
            lighting_levels,
            reference_method: reference.map(str::to_string),
            config: *cfg,
            methods: reports,
            bland_altman_points: points,
        })
    }

    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}
