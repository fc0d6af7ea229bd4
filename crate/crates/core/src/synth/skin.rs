use serde::{Deserialize, Serialize};

use crate::color::LabPixel;
use crate::error::{Error, Result};

/// Range of melanosome fractions the generator covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelRange {
    pub min: f64,
    pub max: f64,
}

impl Default for MelRange {
    fn default() -> Self {
        Self { min: 0.01, max: 0.50 }
    }
}

impl MelRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min >= 0.0 && max <= 1.0 && min < max) {
            return Err(Error::InvalidParams(format!(
                "melanosome range must satisfy 0 <= min < max <= 1, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, m: f64) -> bool {
        (self.min..=self.max).contains(&m)
    }

    pub fn normalize(&self, m: f64) -> f64 {
        (m - self.min) / (self.max - self.min)
    }
}

/// Skin color for melanosome fraction `m`: with `t` the position of `m` in
/// the range, L* = 72 − 48t, a* = 8 + 4t, b* = 14 + 6t.
pub fn skin_color_model(m: f64, range: &MelRange) -> Result<LabPixel> {
    if !range.contains(m) {
        return Err(Error::OutOfRange(format!(
            "melanosome fraction {m} outside [{}, {}]",
            range.min, range.max
        )));
    }
    let t = range.normalize(m);
    Ok(LabPixel::new(72.0 - 48.0 * t, 8.0 + 4.0 * t, 14.0 + 6.0 * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{ita, ItaVariant};

    fn ita_of(p: LabPixel) -> f64 {
        ita(p.l, p.b, ItaVariant::Arctan).unwrap().0
    }

    #[test]
    fn range_ends() {
        let r = MelRange::default();
        let lo = skin_color_model(0.01, &r).unwrap();
        assert_eq!(lo.to_array(), [72.0, 8.0, 14.0]);
        assert!((ita_of(lo) - (22.0f64 / 14.0).atan().to_degrees()).abs() < 1e-12);
        assert!((ita_of(lo) - 57.5).abs() < 0.05);
        let hi = skin_color_model(0.50, &r).unwrap();
        assert!((hi.l - 24.0).abs() < 1e-12 && (hi.a - 12.0).abs() < 1e-12 && (hi.b - 20.0).abs() < 1e-12);
        assert!((ita_of(hi) + 52.4).abs() < 0.05);
    }

    #[test]
    fn out_of_range() {
        let r = MelRange::default();
        assert!(matches!(skin_color_model(0.0, &r), Err(Error::OutOfRange(_))));
        assert!(matches!(skin_color_model(0.51, &r), Err(Error::OutOfRange(_))));
        assert!(MelRange::new(0.5, 0.1).is_err());
    }

    #[test]
    fn ita_strictly_decreasing_on_grid() {
        let r = MelRange::default();
        let itas: Vec<f64> = (0..1000)
            .map(|i| ita_of(skin_color_model(r.min + (r.max - r.min) * i as f64 / 999.0, &r).unwrap()))
            .collect();
        assert!(itas.windows(2).all(|w| w[1] < w[0]));
    }
}
