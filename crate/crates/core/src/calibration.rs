//! Linear calibration of raw ITA estimates against a reference ITA.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::color::ItaDegrees;
use crate::error::{Error, Result};

/// `reference ≈ slope · raw + intercept`, fitted by ordinary least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub slope: f64,
    pub intercept: f64,
    pub n_fit: usize,
    /// R² of the fit on its own training data.
    pub r2_fit: f64,
}

impl CalibrationModel {
    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
            n_fit: 0,
            r2_fit: 1.0,
        }
    }

    pub fn apply(&self, ita_raw: ItaDegrees) -> ItaDegrees {
        ItaDegrees(self.slope * ita_raw.0 + self.intercept)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.slope.is_finite() || !self.intercept.is_finite() {
            return Err(Error::InvalidParams(format!(
                "calibration coefficients must be finite (slope {}, intercept {})",
                self.slope, self.intercept
            )));
        }
        Ok(())
    }
}

pub fn apply(model: &CalibrationModel, ita_raw: ItaDegrees) -> ItaDegrees {
    model.apply(ita_raw)
}

/// Closed-form simple linear regression of `y` on `x` with intercept.
/// Sums are taken about the means.
pub fn fit_ols(x: &[f64], y: &[f64]) -> Result<CalibrationModel> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "x has {} values, y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "calibration needs at least 2 points, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(
            "calibration data contains non-finite values".into(),
        ));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("calibration input x is constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - (slope * xi + intercept)).powi(2))
        .sum();
    let r2_fit = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    Ok(CalibrationModel {
        slope,
        intercept,
        n_fit: n,
        r2_fit,
    })
}

/// One model per lighting condition, with a global model for conditions
/// that had too little data to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerLightingCalibration {
    pub global: CalibrationModel,
    pub per_lighting: BTreeMap<u32, CalibrationModel>,
}

impl PerLightingCalibration {
    pub fn apply(&self, lighting_id: u32, ita_raw: ItaDegrees) -> ItaDegrees {
        self.per_lighting
            .get(&lighting_id)
            .unwrap_or(&self.global)
            .apply(ita_raw)
    }
}

/// Fits the global model plus one model per lighting level. Levels whose data
/// cannot be fitted (fewer than 2 points or constant x) use the global model.
pub fn fit_ols_per_lighting(x: &[f64], y: &[f64], lighting: &[u32]) -> Result<PerLightingCalibration> {
    if lighting.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} lighting ids for {} points",
            lighting.len(),
            x.len()
        )));
    }
    let global = fit_ols(x, y)?;
    let mut groups: BTreeMap<u32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((&xi, &yi), &l) in x.iter().zip(y).zip(lighting) {
        let g = groups.entry(l).or_default();
        g.0.push(xi);
        g.1.push(yi);
    }
    let mut per_lighting = BTreeMap::new();
    for (l, (gx, gy)) in groups {
        match fit_ols(&gx, &gy) {
            Ok(m) => {
                per_lighting.insert(l, m);
            }
            Err(Error::DegenerateInput(_) | Error::InsufficientData(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(PerLightingCalibration { global, per_lighting })
}
