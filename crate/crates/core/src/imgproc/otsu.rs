use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuResult {
    /// Class 0 is bins `[0, split)`, class 1 is `[split, bins)`.
    pub split: usize,
    /// Between-class variance in squared bin-index units.
    pub between_class_variance: f64,
}

/// Otsu's method on a histogram, with bin indices as the class values.
///
/// Ties resolve to the lowest split.
pub fn otsu_from_histogram(hist: &[u64]) -> Result<OtsuResult> {
    if hist.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "Otsu needs at least 2 bins, got {}",
            hist.len()
        )));
    }
    let total: u64 = hist.iter().sum();
    let weighted: u128 = hist.iter().enumerate().map(|(i, &c)| i as u128 * u128::from(c)).sum();

    let n = total as f64;
    let s = weighted as f64;
    let mut n0: u64 = 0;
    let mut s0: u128 = 0;
    let mut best: Option<OtsuResult> = None;
    for split in 1..hist.len() {
        n0 += hist[split - 1];
        s0 += (split as u128 - 1) * u128::from(hist[split - 1]);
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // w0 w1 (mu0 - mu1)^2 scaled by N^2, evaluated from exact integer sums.
        let num = n * s0 as f64 - n0 as f64 * s;
        let value = num * num / (n0 as f64 * n1 as f64) / (n * n);
        if best.is_none_or(|b| value > b.between_class_variance) {
            best = Some(OtsuResult {
                split,
                between_class_variance: value,
            });
        }
    }
    best.ok_or_else(|| Error::DegenerateInput("all histogram mass in a single bin".into()))
}

/// Otsu threshold over `values`, histogrammed into `bins` equal bins spanning
/// the data range. The returned value is the lower edge of the first bin of
/// the upper class, so `v < threshold` selects the lower class.
pub fn otsu_threshold(values: &[f64], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidParams(format!("Otsu needs bins >= 2, got {bins}")));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::DegenerateInput(
            "Otsu needs at least two distinct finite values".into(),
        ));
    }
    let width = (hi - lo) / bins as f64;
    let mut hist = vec![0u64; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        hist[i] += 1;
    }
    let r = otsu_from_histogram(&hist)?;
    Ok(lo + r.split as f64 * width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Exhaustive scan with exact rational comparison of
    /// (N*S0 - n0*S)^2 / (n0*n1), recomputing class sums per candidate.
    fn oracle_split(hist: &[u64]) -> Option<usize> {
        let n: u128 = hist.iter().map(|&c| c as u128).sum();
        let s: u128 = hist.iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
        let mut best: Option<(usize, u128, u128)> = None;
        for t in 1..hist.len() {
            let n0: u128 = hist[..t].iter().map(|&c| c as u128).sum();
            let s0: u128 = hist[..t].iter().enumerate().map(|(i, &c)| i as u128 * c as u128).sum();
            let n1 = n - n0;
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let diff = (n * s0).abs_diff(n0 * s);
            let num = diff * diff;
            let den = n0 * n1;
            match best {
                None => best = Some((t, num, den)),
                Some((_, bn, bd)) if num * bd > bn * den => best = Some((t, num, den)),
                _ => {}
            }
        }
        best.map(|b| b.0)
    }

    #[test]
    fn bimodal_two_points() {
        let mut v = vec![0.0; 100];
        v.extend(vec![1.0; 100]);
        let t = otsu_threshold(&v, 256).unwrap();
        assert!(t > 0.0 && t < 1.0);
        assert!(v.iter().filter(|&&x| x < t).count() == 100);
    }

    #[test]
    fn gaussian_mixture_near_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Normal::new(0.3, 0.05).unwrap();
        let b = Normal::new(0.7, 0.05).unwrap();
        let v: Vec<f64> = (0..10_000)
            .map(|i| {
                if i % 2 == 0 {
                    a.sample(&mut rng)
                } else {
                    b.sample(&mut rng)
                }
            })
            .collect();
        let t = otsu_threshold(&v, 256).unwrap();
        assert!((t - 0.5).abs() < 0.05, "threshold {t}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            otsu_threshold(&[0.4; 10], 256),
            Err(Error::DegenerateInput(_))
        ));
        assert!(otsu_from_histogram(&[0, 7, 0]).is_err());
        assert!(otsu_threshold(&[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let bins = rng.random_range(2..=256);
            let hist: Vec<u64> = (0..bins)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0
                    } else {
                        rng.random_range(0..100)
                    }
                })
                .collect();
            let want = oracle_split(&hist);
            let got = otsu_from_histogram(&hist).ok().map(|r| r.split);
            assert_eq!(got, want, "{hist:?}");
        }
    }
}
