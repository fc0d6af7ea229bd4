use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_LIGHTING: usize = 18;

const TABLE_SEED: u64 = 0x51_6e_7e_11;

/// A lighting condition, applied multiplicatively in linear RGB.
///
/// Besides a color cast (`gains`) and overall `exposure`, each condition
/// darkens a band along the image border: the factor at distance `d` from
/// the nearest edge (in units of the image size) is
/// `1 − edge_shading · exp(−d / EDGE_SHADING_WIDTH)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    pub gains: [f64; 3],
    pub exposure: f64,
    pub edge_shading: f64,
}

/// Decay length of the border shading, as a fraction of the image size.
pub const EDGE_SHADING_WIDTH: f64 = 0.06;

impl Lighting {
    pub const IDENTITY: Lighting = Lighting {
        gains: [1.0, 1.0, 1.0],
        exposure: 1.0,
        edge_shading: 0.0,
    };

    /// Same color cast and exposure, uniform over the image.
    pub fn without_shading(self) -> Lighting {
        Lighting {
            edge_shading: 0.0,
            ..self
        }
    }

    /// Illumination factor for a pixel at distance `d` from the nearest
    /// border, in units of the image size.
    pub fn field(&self, d: f64) -> f64 {
        if self.edge_shading == 0.0 {
            return 1.0;
        }
        1.0 - self.edge_shading * (-d / EDGE_SHADING_WIDTH).exp()
    }

    pub fn apply(&self, rgb: [f64; 3], d: f64) -> [f64; 3] {
        let s = self.exposure * self.field(d);
        [
            rgb[0] * self.gains[0] * s,
            rgb[1] * self.gains[1] * s,
            rgb[2] * self.gains[2] * s,
        ]
    }
}

/// The fixed table of 18 lighting conditions; id 0 is the identity.
///
/// The color cast follows a warm/cool axis: red gain `1 + τ`, blue gain
/// `1 − τ` with `τ` in [−0.10, 0.10], and a green tint in [0.95, 1.05].
/// Exposure is drawn from [0.80, 1.20] and border shading from
/// [0.20, 0.50]. The table is the same in every run.
pub fn lighting_table() -> [Lighting; N_LIGHTING] {
    let mut rng = ChaCha8Rng::seed_from_u64(TABLE_SEED);
    let mut table = [Lighting::IDENTITY; N_LIGHTING];
    for entry in table.iter_mut().skip(1) {
        let tau = rng.random_range(-0.10..=0.10);
        let gains = [1.0 + tau, rng.random_range(0.95..=1.05), 1.0 - tau];
        *entry = Lighting {
            gains,
            exposure: rng.random_range(0.80..=1.20),
            edge_shading: rng.random_range(0.20..=0.50),
        };
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{linear_rgb_to_srgb, srgb_decode, SrgbPixel};

    #[test]
    fn id_zero_is_identity() {
        let t = lighting_table();
        assert_eq!(t[0], Lighting::IDENTITY);
        assert_eq!(t[0].apply([0.2, 0.4, 0.6], 0.0), [0.2, 0.4, 0.6]);
    }

    #[test]
    fn table_is_stable_and_in_range() {
        let a = lighting_table();
        assert_eq!(a, lighting_table());
        for l in &a[1..] {
            assert!(l.gains.iter().all(|g| (0.90..=1.10).contains(g)));
            assert!((l.gains[0] + l.gains[2] - 2.0).abs() < 1e-12);
            assert!((0.80..=1.20).contains(&l.exposure));
            assert!(l.field(0.0) >= 0.5 && l.field(0.0) <= 0.8);
            assert!((l.field(0.5) - 1.0).abs() < 1e-3);
        }
        let distinct: std::collections::BTreeSet<u64> = a.iter().map(|l| l.gains[0].to_bits()).collect();
        assert_eq!(distinct.len(), N_LIGHTING);
    }

    #[test]
    fn mid_gray_stays_in_gamut() {
        let g = srgb_decode(128.0 / 255.0);
        for l in lighting_table() {
            for d in [0.0, 0.01, 0.1, 0.5] {
                let out = l.apply([g, g, g], d);
                assert!(out.iter().all(|c| c.is_finite() && *c > 0.0));
                let SrgbPixel { r, g: gg, b } = linear_rgb_to_srgb(out);
                assert!(r > 0 && gg > 0 && b > 0);
            }
        }
    }
}
