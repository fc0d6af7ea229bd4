use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Knee {
    /// Position of the knee in the input arrays.
    pub index: usize,
    pub x: f64,
    /// Normalized difference curve, one value per input point.
    pub difference: Vec<f64>,
}

/// Knee of a decreasing curve (e.g. inertia against k).
///
/// Both axes are min-max normalized, the normalized y is flipped so the curve
/// rises, and the knee is the interior point farthest above the diagonal:
/// `d_i = (1 - y_i) - x_i`.
pub fn kneedle(xs: &[f64], ys: &[f64]) -> Result<Knee> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "kneedle got {} xs and {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "kneedle needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("kneedle xs must be strictly increasing".into()));
    }
    if ys.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams("kneedle ys must be non-increasing".into()));
    }
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let (ymin, ymax) = (ys[ys.len() - 1], ys[0]);
    if ymax <= ymin {
        return Err(Error::NoKnee);
    }
    let difference: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (1.0 - (y - ymin) / (ymax - ymin)) - (x - x0) / (x1 - x0))
        .collect();
    let (index, &best) = difference
        .iter()
        .enumerate()
        .skip(1)
        .take(xs.len() - 2)
        .fold(None::<(usize, &f64)>, |acc, (i, d)| match acc {
            Some((_, b)) if d <= b => acc,
            _ => Some((i, d)),
        })
        .expect("at least one interior point");
    if best <= 1e-12 {
        return Err(Error::NoKnee);
    }
    Ok(Knee {
        index,
        x: xs[index],
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(a: usize, b: usize) -> Vec<f64> {
        (a..=b).map(|v| v as f64).collect()
    }

    #[test]
    fn reciprocal_curve() {
        let xs = ints(1, 10);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let k = kneedle(&xs, &ys).unwrap();
        // exhaustive evaluation of the normalized difference curve
        let oracle = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (1.0 - (y - 0.1) / 0.9) - (x - 1.0) / 9.0)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(oracle, 2);
        assert_eq!(k.index, oracle);
        assert_eq!(k.x, 3.0);
    }

    #[test]
    fn straight_line_has_no_knee() {
        let xs = ints(1, 9);
        let ys: Vec<f64> = xs.iter().map(|x| 10.0 - x).collect();
        assert!(matches!(kneedle(&xs, &ys), Err(Error::NoKnee)));
        assert!(matches!(kneedle(&xs, &[2.0; 9]), Err(Error::NoKnee)));
    }

    #[test]
    fn piecewise_elbow() {
        let xs = ints(1, 5);
        let ys = [10.0, 2.0, 1.5, 1.2, 1.0];
        let k = kneedle(&xs, &ys).unwrap();
        assert_eq!(k.x, 2.0);
    }

    #[test]
    fn validation() {
        assert!(kneedle(&[1.0, 2.0], &[2.0, 1.0]).is_err());
        assert!(kneedle(&[1.0, 1.0, 2.0], &[3.0, 2.0, 1.0]).is_err());
        assert!(kneedle(&[1.0, 2.0, 3.0], &[1.0, 2.0, 0.0]).is_err());
    }
}
