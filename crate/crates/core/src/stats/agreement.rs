use serde::{Deserialize, Serialize};

use super::{check_paired, mean};
use crate::error::Result;

/// Bland-Altman agreement of a method against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltman {
    /// `(a + b) / 2` per point.
    pub means: Vec<f64>,
    /// `a − b` per point: positive when the method reads higher.
    pub diffs: Vec<f64>,
    pub bias: f64,
    /// Sample standard deviation of the differences.
    pub sd: f64,
    pub loa_low: f64,
    pub loa_high: f64,
}

pub fn bland_altman(a: &[f64], b: &[f64]) -> Result<BlandAltman> {
    check_paired(a, b, 2, "bland_altman")?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let means = a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect();
    let bias = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
    Ok(BlandAltman {
        means,
        diffs,
        bias,
        sd,
        loa_low: bias - 1.96 * sd,
        loa_high: bias + 1.96 * sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs() {
        let a = [3.0, -1.5, 12.25, 40.0];
        let ba = bland_altman(&a, &a).unwrap();
        assert_eq!(ba.bias, 0.0);
        assert_eq!(ba.loa_low, ba.loa_high);
    }

    #[test]
    fn constant_offset() {
        let b = [1.0, 5.0, 9.0];
        let a: Vec<f64> = b.iter().map(|v| v + 2.0).collect();
        let ba = bland_altman(&a, &b).unwrap();
        assert!((ba.bias - 2.0).abs() < 1e-15);
        assert!((ba.loa_low - 2.0).abs() < 1e-15 && (ba.loa_high - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_points_by_hand() {
        let ba = bland_altman(&[10.0, 12.0], &[9.0, 13.0]).unwrap();
        assert_eq!(ba.diffs, vec![1.0, -1.0]);
        assert_eq!(ba.means, vec![9.5, 12.5]);
        assert_eq!(ba.bias, 0.0);
        assert!((ba.sd - 2f64.sqrt()).abs() < 1e-15);
        assert!((ba.loa_high - 1.96 * 2f64.sqrt()).abs() < 1e-15);
        assert!((ba.loa_low + 1.96 * 2f64.sqrt()).abs() < 1e-15);
    }
}
