use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mean;
use crate::error::{Error, Result};

/// R² of `ITA ~ mel` and `ITA ~ mel + light` (lighting as a categorical factor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightingSensitivity {
    pub r2_mel: f64,
    pub r2_mel_light: f64,
    pub delta_r2: f64,
}

/// R² of an OLS fit of `y` on the given regressor columns plus an intercept.
///
/// Solved through a Householder QR of the design matrix; a column-pivoted QR
/// first checks the rank.
pub fn ols_r2(y: &[f64], columns: &[Vec<f64>]) -> Result<f64> {
    let n = y.len();
    let p = columns.len() + 1;
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "regressor has {} values, response has {n}",
            c.len()
        )));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    if y.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput(
            "regression data contains non-finite values".into(),
        ));
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });

    let pivoted = x.clone().col_piv_qr();
    let r = pivoted.r();
    let diag: Vec<f64> = (0..p).map(|i| r[(i, i)].abs()).collect();
    let tol = diag[0] * f64::EPSILON * n.max(p) as f64;
    let rank = diag.iter().filter(|&&d| d > tol).count();
    if rank < p {
        return Err(Error::RankDeficient { rank, cols: p });
    }

    let yv = DVector::from_column_slice(y);
    let q = x.qr().q();
    let fitted = &q * (q.transpose() * &yv);
    let ssr = (&yv - fitted).norm_squared();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateInput("response is constant".into()));
    }
    Ok((1.0 - ssr / sst).clamp(0.0, 1.0))
}

/// One-hot columns for every level except the smallest (reference coding).
fn one_hot(levels: &[u32]) -> Result<Vec<Vec<f64>>> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in levels {
        *counts.entry(l).or_default() += 1;
    }
    if let Some((l, c)) = counts.iter().find(|(_, &c)| c < 2) {
        return Err(Error::InsufficientData(format!(
            "lighting level {l} has {c} sample(s), at least 2 required"
        )));
    }
    Ok(counts
        .keys()
        .skip(1)
        .map(|&level| levels.iter().map(|&l| f64::from(u8::from(l == level))).collect())
        .collect())
}

/// Nested OLS models `y ~ mel` and `y ~ mel + light`.
pub fn fit_r2(y: &[f64], mel: &[f64], light: &[u32]) -> Result<LightingSensitivity> {
    if light.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} lighting ids for {} observations",
            light.len(),
            y.len()
        )));
    }
    let r2_mel = ols_r2(y, &[mel.to_vec()])?;
    let mut cols = vec![mel.to_vec()];
    cols.extend(one_hot(light)?);
    let r2_full = ols_r2(y, &cols)?;
    if r2_full < r2_mel - 1e-9 {
        return Err(Error::DegenerateInput(format!(
            "nested fit lost accuracy: R² {r2_full} with lighting < {r2_mel} without"
        )));
    }
    // Nested models: differences below rounding are clamped so ΔR² ≥ 0.
    let r2_mel_light = r2_full.max(r2_mel);
    Ok(LightingSensitivity {
        r2_mel,
        r2_mel_light,
        delta_r2: r2_mel_light - r2_mel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfectly_linear() {
        let mel: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let y: Vec<f64> = mel.iter().map(|m| 40.0 - 90.0 * m).collect();
        assert!((ols_r2(&y, &[mel]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lighting_offsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let offsets = [0.0, 5.0, -7.0, 2.5];
        let light: Vec<u32> = (0..80).map(|i| i % 4).collect();
        let mel: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..0.45)).collect();
        let y: Vec<f64> = mel
            .iter()
            .zip(&light)
            .map(|(m, &l)| 50.0 - 100.0 * m + offsets[l as usize])
            .collect();
        let s = fit_r2(&y, &mel, &light).unwrap();
        assert!((s.r2_mel_light - 1.0).abs() < 1e-10);
        assert!(s.r2_mel < 1.0);
        assert!(s.delta_r2 > 0.0);
        assert!(0.0 <= s.r2_mel && s.r2_mel <= s.r2_mel_light && s.r2_mel_light <= 1.0);
    }

    #[test]
    fn independent_noise_has_small_r2() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mel: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let light: Vec<u32> = (0..n).map(|i| (i % 18) as u32).collect();
        let s = fit_r2(&y, &mel, &light).unwrap();
        assert!(s.r2_mel_light < 0.01, "{s:?}");
    }

    #[test]
    fn rank_deficient_design() {
        let mel: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let doubled: Vec<f64> = mel.iter().map(|m| 2.0 * m).collect();
        let y: Vec<f64> = (0..20).map(|i| ((i * 7) % 5) as f64).collect();
        assert!(matches!(
            ols_r2(&y, &[mel.clone(), doubled]),
            Err(Error::RankDeficient { .. })
        ));
        let constant = vec![3.0; 20];
        assert!(matches!(
            ols_r2(&y, &[constant]),
            Err(Error::RankDeficient { rank: 1, cols: 2 })
        ));
    }

    #[test]
    fn singleton_level_rejected() {
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mel = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!(matches!(
            fit_r2(&y, &mel, &[0, 0, 1, 1, 2]),
            Err(Error::InsufficientData(_))
        ));
    }
}
