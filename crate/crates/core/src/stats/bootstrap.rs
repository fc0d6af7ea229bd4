use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_paired;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 1000,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    /// Resamples that produced a statistic.
    pub n_valid: usize,
    /// Resamples on which the statistic was undefined (e.g. constant input).
    pub n_skipped: usize,
}

/// Quantile of sorted data with linear interpolation between order statistics
/// (position `q·(n−1)`).
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Percentile bootstrap interval of a paired statistic.
///
/// Resample `i` draws its indices from ChaCha8 seeded with `seed` on stream
/// `i`, so results do not depend on the thread count. Resamples on which the
/// statistic returns [`Error::DegenerateInput`] are skipped and counted;
/// other errors propagate.
pub fn bootstrap_ci<F>(x: &[f64], y: &[f64], statistic: F, cfg: &BootstrapConfig) -> Result<BootstrapCi>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    check_paired(x, y, 10, "bootstrap")?;
    if cfg.n_resamples == 0 || !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "bootstrap needs n_resamples > 0 and alpha in (0, 1), got {} and {}",
            cfg.n_resamples, cfg.alpha
        )));
    }
    let n = x.len();
    let results: Vec<Result<f64>> = (0..cfg.n_resamples)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(bx, by), i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64);
                for j in 0..n {
                    let k = rng.random_range(0..n);
                    bx[j] = x[k];
                    by[j] = y[k];
                }
                statistic(bx, by)
            },
        )
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut n_skipped = 0;
    for r in results {
        match r {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) | Err(Error::DegenerateInput(_)) => n_skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateInput(
            "statistic was undefined on every bootstrap resample".into(),
        ));
    }
    values.sort_by(f64::total_cmp);
    Ok(BootstrapCi {
        lo: quantile_linear(&values, cfg.alpha / 2.0),
        hi: quantile_linear(&values, 1.0 - cfg.alpha / 2.0),
        n_valid: values.len(),
        n_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn linear_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_linear(&v, 0.0), 1.0);
        assert_eq!(quantile_linear(&v, 1.0), 4.0);
        assert!((quantile_linear(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_linear(&v, 0.025) - 1.075).abs() < 1e-12);
    }

    #[test]
    fn exact_line_gives_degenerate_interval() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ci = bootstrap_ci(&x, &x, pearson, &BootstrapConfig::default()).unwrap();
        assert!((ci.lo - 1.0).abs() < 1e-12 && (ci.hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed_and_thread_count() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.11).cos() + x[i]).collect();
        let cfg = BootstrapConfig {
            seed: 42,
            ..Default::default()
        };
        let a = bootstrap_ci(&x, &y, pearson, &cfg).unwrap();
        let b = bootstrap_ci(&x, &y, pearson, &cfg).unwrap();
        assert_eq!(a.lo.to_bits(), b.lo.to_bits());
        assert_eq!(a.hi.to_bits(), b.hi.to_bits());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| bootstrap_ci(&x, &y, pearson, &cfg)).unwrap();
        assert_eq!(a, c);
        let other = bootstrap_ci(&x, &y, pearson, &BootstrapConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn skipped_resamples_are_counted() {
        // Mostly constant x: some resamples contain only the repeated value.
        let mut x = vec![1.0; 12];
        x[0] = 2.0;
        let y: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let ci = bootstrap_ci(&x, &y, pearson, &BootstrapConfig::default()).unwrap();
        assert!(ci.n_skipped > 0);
        assert_eq!(ci.n_skipped + ci.n_valid, 1000);
    }

    #[test]
    fn too_few_pairs() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            bootstrap_ci(&x, &x, pearson, &BootstrapConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn coverage_of_known_correlation() {
        // Independent generator: y = rho·x + sqrt(1 − rho²)·e with x, e ~ N(0, 1).
        let rho: f64 = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut covered = 0;
        let reps = 200;
        for rep in 0..reps {
            let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = x
                .iter()
                .map(|&xi| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    rho * xi + (1.0 - rho * rho).sqrt() * e
                })
                .collect();
            let cfg = BootstrapConfig {
                seed: rep,
                ..Default::default()
            };
            let ci = bootstrap_ci(&x, &y, pearson, &cfg).unwrap();
            if ci.lo <= rho && rho <= ci.hi {
                covered += 1;
            }
        }
        assert!(covered as f64 >= 0.9 * reps as f64, "coverage {covered}/{reps}");
    }
}
