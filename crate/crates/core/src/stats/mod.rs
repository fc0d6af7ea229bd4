//! Evaluation statistics: correlation with bootstrap intervals, Bland-Altman
//! agreement, nested-OLS lighting sensitivity and Fitzpatrick metrics.

mod agreement;
mod bootstrap;
mod correlation;
mod fp;
mod regression;
mod report;

pub use agreement::{bland_altman, BlandAltman};
pub use bootstrap::{bootstrap_ci, quantile_linear, BootstrapCi, BootstrapConfig};
pub use correlation::{pearson, ranks, spearman};
pub use fp::{fp_metrics, quadratic_weighted_kappa, FpMetrics};
pub use regression::{fit_r2, ols_r2, LightingSensitivity};
pub use report::{CorrelationSummary, EvalReport, MethodInput, MethodReport, ReportConfig};

use crate::error::{Error, Result};

pub(crate) fn check_paired(x: &[f64], y: &[f64], min: usize, what: &str) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min {
        return Err(Error::InsufficientData(format!(
            "{what} needs at least {min} pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(format!("{what}: non-finite value")));
    }
    Ok(())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
