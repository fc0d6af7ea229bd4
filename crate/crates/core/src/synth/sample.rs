use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::lighting::{lighting_table, N_LIGHTING};
use super::skin::{skin_color_model, MelRange};
use crate::color::{lab_to_linear_rgb, linear_rgb_to_srgb, LabPixel, WhitePoint};
use crate::error::{Error, Result};
use crate::imgproc::{Mask, Raster, RgbImage};

const NOISE_SIGMA_L: f64 = 1.5;
const NOISE_SIGMA_AB: f64 = 0.5;
const HAIR_COLOR: LabPixel = LabPixel {
    l: 20.0,
    a: 2.0,
    b: 4.0,
};
const MIN_LESION_L: f64 = 2.0;

/// Elliptical lesion. Zero axes mean no lesion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LesionParams {
    pub center: (f64, f64),
    pub axes: (f64, f64),
    pub rotation: f64,
    /// L* reduction inside the lesion.
    pub delta_l: f64,
    /// a* increase inside the lesion.
    pub delta_a: f64,
}

impl LesionParams {
    pub fn none() -> Self {
        Self {
            center: (0.0, 0.0),
            axes: (0.0, 0.0),
            rotation: 0.0,
            delta_l: 0.0,
            delta_a: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.axes.0 <= 0.0 || self.axes.1 <= 0.0
    }

    /// Whether the pixel center at (`x` + ½, `y` + ½) lies inside the ellipse.
    pub fn contains(&self, x: usize, y: usize) -> bool {
        if self.is_empty() {
            return false;
        }
        let dx = x as f64 + 0.5 - self.center.0;
        let dy = y as f64 + 0.5 - self.center.1;
        let (s, c) = self.rotation.sin_cos();
        let u = (dx * c + dy * s) / self.axes.0;
        let v = (-dx * s + dy * c) / self.axes.1;
        u * u + v * v <= 1.0
    }

    /// Half extents of the axis-aligned bounding box.
    fn half_extent(&self) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        let (a, b) = self.axes;
        (
            ((a * c).powi(2) + (b * s).powi(2)).sqrt(),
            ((a * s).powi(2) + (b * c).powi(2)).sqrt(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub melanosome_fraction: f64,
    pub mel_range: MelRange,
    pub lighting_id: u32,
    /// When false, the lighting condition's border shading is dropped and
    /// only its color cast and exposure apply.
    pub spatial_lighting: bool,
    pub lesion: LesionParams,
    pub n_hairs: u32,
    /// Drives texture noise and hair geometry.
    pub seed: u64,
    pub size: usize,
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !self.mel_range.contains(self.melanosome_fraction) {
            return bad(format!(
                "melanosome fraction {} outside [{}, {}]",
                self.melanosome_fraction, self.mel_range.min, self.mel_range.max
            ));
        }
        if self.lighting_id as usize >= N_LIGHTING {
            return bad(format!("lighting id {} not in 0..{N_LIGHTING}", self.lighting_id));
        }
        if self.size < 16 {
            return bad(format!("image size {} below 16 px", self.size));
        }
        let l = &self.lesion;
        let finite = [
            l.center.0, l.center.1, l.axes.0, l.axes.1, l.rotation, l.delta_l, l.delta_a,
        ];
        if finite.iter().any(|v| !v.is_finite()) || l.axes.0 < 0.0 || l.axes.1 < 0.0 || l.delta_l < 0.0 {
            return bad("lesion parameters must be finite with non-negative axes and darkening".into());
        }
        if !l.is_empty() {
            let (hx, hy) = l.half_extent();
            let s = self.size as f64;
            if l.center.0 - hx < 0.0 || l.center.0 + hx > s || l.center.1 - hy < 0.0 || l.center.1 + hy > s {
                return bad("lesion ellipse must lie fully inside the image".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: RgbImage,
    pub lesion_mask: Mask,
    pub hair_mask: Mask,
    pub params: SynthParams,
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((px - a.0 - t * dx).powi(2) + (py - a.1 - t * dy).powi(2)).sqrt()
}

/// Anti-aliased hair coverage in [0, 1] per pixel.
fn hair_coverage(size: usize, n_hairs: u32, rng: &mut ChaCha8Rng) -> Raster<f64> {
    let s = size as f64;
    let mut cov = vec![0.0f64; size * size];
    for _ in 0..n_hairs {
        let width: f64 = rng.random_range(1.0..=3.0);
        let mut p = (rng.random_range(0.0..s), rng.random_range(0.0..s));
        let mut angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let segments = rng.random_range(3..=5);
        for _ in 0..segments {
            angle += rng.random_range(-0.4..0.4);
            let len = rng.random_range(0.08..0.25) * s;
            let q = (p.0 + len * angle.cos(), p.1 + len * angle.sin());
            let reach = width / 2.0 + 1.0;
            let x0 = (p.0.min(q.0) - reach).floor().max(0.0) as usize;
            let x1 = ((p.0.max(q.0) + reach).ceil().max(0.0) as usize).min(size);
            let y0 = (p.1.min(q.1) - reach).floor().max(0.0) as usize;
            let y1 = ((p.1.max(q.1) + reach).ceil().max(0.0) as usize).min(size);
            for y in y0..y1 {
                for x in x0..x1 {
                    let d = segment_distance(x as f64 + 0.5, y as f64 + 0.5, p, q);
                    let c = (width / 2.0 + 0.5 - d).clamp(0.0, 1.0);
                    let slot = &mut cov[y * size + x];
                    *slot = slot.max(c);
                }
            }
            p = q;
        }
    }
    Raster::from_vec(size, size, cov).expect("square buffer")
}

/// Renders one sample. Lab composition (skin + noise, lesion, hair) happens
/// before lighting, so masks never depend on the lighting condition.
pub fn generate_sample(p: &SynthParams) -> Result<SyntheticSample> {
    p.validate()?;
    let size = p.size;
    let skin = skin_color_model(p.melanosome_fraction, &p.mel_range)?;
    let lighting = {
        let l = lighting_table()[p.lighting_id as usize];
        if p.spatial_lighting {
            l
        } else {
            l.without_shading()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise_l = Normal::new(0.0, NOISE_SIGMA_L).expect("positive sigma");
    let noise_ab = Normal::new(0.0, NOISE_SIGMA_AB).expect("positive sigma");
    let hair = hair_coverage(size, p.n_hairs, &mut rng);
    let lesion_mask = Mask::from_fn(size, size, |x, y| p.lesion.contains(x, y))?;
    let hair_mask = hair.map(|&c| c > 0.0);

    let s = size as f64;
    let mut data = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let i = y * size + x;
            let mut px = LabPixel::new(
                skin.l + noise_l.sample(&mut rng),
                skin.a + noise_ab.sample(&mut rng),
                skin.b + noise_ab.sample(&mut rng),
            );
            if lesion_mask.data()[i] {
                px.l = (px.l - p.lesion.delta_l).max(MIN_LESION_L);
                px.a += p.lesion.delta_a;
            }
            let c = hair.data()[i];
            if c > 0.0 {
                px = LabPixel::new(
                    px.l + c * (HAIR_COLOR.l - px.l),
                    px.a + c * (HAIR_COLOR.a - px.a),
                    px.b + c * (HAIR_COLOR.b - px.b),
                );
            }
            let edge = (x.min(size - 1 - x).min(y).min(size - 1 - y) as f64 + 0.5) / s;
            let lin = lighting.apply(lab_to_linear_rgb(px, WhitePoint::D65), edge);
            data.push(linear_rgb_to_srgb(lin));
        }
    }
    Ok(SyntheticSample {
        image: Raster::from_vec(size, size, data)?,
        lesion_mask,
        hair_mask,
        params: *p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{ita, srgb_image_to_lab, ItaVariant};
    use crate::estimators::{estimate_segmentation, SegmentationConfig};

    fn params() -> SynthParams {
        SynthParams {
            melanosome_fraction: 0.2,
            mel_range: MelRange::default(),
            lighting_id: 0,
            spatial_lighting: true,
            lesion: LesionParams {
                center: (64.0, 60.0),
                axes: (30.0, 18.0),
                rotation: 0.6,
                delta_l: 25.0,
                delta_a: 4.0,
            },
            n_hairs: 4,
            seed: 77,
            size: 128,
        }
    }

    #[test]
    fn plain_skin_recovers_model_ita() {
        for m in (0..50).map(|i| 0.01 + 0.01 * i as f64) {
            let p = SynthParams {
                melanosome_fraction: m,
                lesion: LesionParams::none(),
                n_hairs: 0,
                seed: (m * 1000.0) as u64,
                ..params()
            };
            let s = generate_sample(&p).unwrap();
            assert_eq!(s.lesion_mask.count(), 0);
            let lab = srgb_image_to_lab(&s.image, WhitePoint::D65);
            let e = estimate_segmentation(&lab, &s.lesion_mask, &SegmentationConfig::default()).unwrap();
            let model = skin_color_model(m, &p.mel_range).unwrap();
            let want = ita(model.l, model.b, ItaVariant::Arctan).unwrap().0;
            assert!((e.ita.0 - want).abs() < 1.0, "m={m}: {} vs {want}", e.ita.0);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_sample(&params()).unwrap();
        let b = generate_sample(&params()).unwrap();
        assert_eq!(a, b);
        let c = generate_sample(&SynthParams { seed: 78, ..params() }).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn lesion_mask_is_painted_ellipse() {
        let p = params();
        let s = generate_sample(&p).unwrap();
        let mut inside = 0;
        for y in 0..128 {
            for x in 0..128 {
                let want = p.lesion.contains(x, y);
                assert_eq!(*s.lesion_mask.get(x, y), want);
                inside += usize::from(want);
            }
        }
        let area = std::f64::consts::PI * 30.0 * 18.0;
        assert!((inside as f64 - area).abs() < 0.05 * area);
        assert!(s.hair_mask.count() > 0);
    }

    #[test]
    fn masks_independent_of_lighting() {
        let a = generate_sample(&params()).unwrap();
        for id in 1..N_LIGHTING as u32 {
            let b = generate_sample(&SynthParams {
                lighting_id: id,
                ..params()
            })
            .unwrap();
            assert_eq!(a.lesion_mask, b.lesion_mask);
            assert_eq!(a.hair_mask, b.hair_mask);
            assert_ne!(a.image, b.image);
        }
    }

    #[test]
    fn invalid_params() {
        let outside = SynthParams {
            lesion: LesionParams {
                center: (10.0, 64.0),
                ..params().lesion
            },
            ..params()
        };
        assert!(matches!(generate_sample(&outside), Err(Error::InvalidParams(_))));
        assert!(generate_sample(&SynthParams {
            lighting_id: 18,
            ..params()
        })
        .is_err());
        assert!(generate_sample(&SynthParams {
            melanosome_fraction: 0.9,
            ..params()
        })
        .is_err());
    }
}
