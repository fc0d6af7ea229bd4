use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kmeans, kneedle, Diagnostics, ItaEstimate, KMeansConfig, KMeansResult, Method};
use crate::color::{hsv_value, ita, lab_to_srgb, srgb_image_to_lab, ItaVariant, LabPixel, WhitePoint};
use crate::error::{Error, Result};
use crate::imgproc::{clahe, dilate, otsu_threshold, ClaheConfig, Mask, RgbImage};

/// Image whose HSV value channel is thresholded for the lesion mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    /// The input sRGB image.
    #[default]
    Original,
    /// The image with CLAHE applied to L*. Amplifies skin texture, so the
    /// split is more likely to cut through healthy skin.
    Enhanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizationConfig {
    pub mask_source: MaskSource,
    /// Used when `mask_source` is [`MaskSource::Enhanced`].
    pub clahe: ClaheConfig,
    pub otsu_bins: usize,
    /// Minimum gap between the Otsu class means of the V channel for the dark
    /// class to be treated as lesion. Below it the split is just skin texture.
    pub min_otsu_separation: f64,
    pub dilation_radius: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub fallback_k: usize,
    /// Skin pixels fed to k-means are subsampled to at most this many.
    pub max_points: usize,
    /// Fail when less than this fraction of the image is left as skin.
    pub min_skin_fraction: f64,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub variant: ItaVariant,
    pub seed: u64,
}

impl Default for QuantizationConfig {
    fn default() -> Self {
        Self {
            mask_source: MaskSource::Original,
            clahe: ClaheConfig::default(),
            otsu_bins: 256,
            min_otsu_separation: 0.1,
            dilation_radius: 5,
            k_min: 2,
            k_max: 8,
            fallback_k: 3,
            max_points: 20_000,
            min_skin_fraction: 0.05,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-4,
            variant: ItaVariant::Arctan,
            seed: 0,
        }
    }
}

struct LesionMask {
    mask: Mask,
    applied: bool,
    dark_fraction: f64,
}

/// Dark side of an Otsu split of a V channel.
fn otsu_lesion_mask(values: &[f64], width: usize, height: usize, cfg: &QuantizationConfig) -> Result<LesionMask> {
    let none = || -> Result<LesionMask> {
        Ok(LesionMask {
            mask: Mask::filled(width, height, false)?,
            applied: false,
            dark_fraction: 0.0,
        })
    };
    let threshold = match otsu_threshold(values, cfg.otsu_bins) {
        Ok(t) => t,
        Err(Error::DegenerateInput(_)) => return none(),
        Err(e) => return Err(e),
    };
    let (mut dark_sum, mut dark_n, mut light_sum) = (0.0, 0usize, 0.0);
    for &v in values {
        if v < threshold {
            dark_sum += v;
            dark_n += 1;
        } else {
            light_sum += v;
        }
    }
    let light_n = values.len() - dark_n;
    if dark_n == 0 || light_n == 0 {
        return none();
    }
    let separation = light_sum / light_n as f64 - dark_sum / dark_n as f64;
    if separation < cfg.min_otsu_separation {
        return none();
    }
    Ok(LesionMask {
        mask: Mask::from_vec(width, height, values.iter().map(|&v| v < threshold).collect())?,
        applied: true,
        dark_fraction: dark_n as f64 / values.len() as f64,
    })
}

fn subsample(points: Vec<LabPixel>, max_points: usize, seed: u64) -> Vec<LabPixel> {
    if max_points == 0 || points.len() <= max_points {
        return points;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut idx = rand::seq::index::sample(&mut rng, points.len(), max_points).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Color-quantization ITA.
///
/// 1. Otsu threshold on the HSV value channel (of the input, or of the image
///    with CLAHE-enhanced L*, per `mask_source`); the dark class, dilated, is
///    masked as lesion and other artifacts.
/// 2. k-means over the remaining skin in the original Lab values for every
///    k in `k_min..=k_max`; the knee of inertia against k picks k
///    (`fallback_k` when the curve has no knee).
/// 3. ITA of the centroid of the most populated cluster.
pub fn estimate_quantization(img: &RgbImage, cfg: &QuantizationConfig) -> Result<ItaEstimate> {
    let (w, h) = img.dims();
    if w < 64 || h < 64 {
        return Err(Error::ImageTooSmall(format!(
            "quantization needs at least 64x64 px, got {w}x{h}"
        )));
    }
    if cfg.k_min < 1 || cfg.k_max < cfg.k_min {
        return Err(Error::InvalidParams(format!(
            "invalid k range {}..={}",
            cfg.k_min, cfg.k_max
        )));
    }
    let lab = srgb_image_to_lab(img, WhitePoint::D65);
    let values: Vec<f64> = match cfg.mask_source {
        MaskSource::Original => img.data().iter().map(|&p| hsv_value(p)).collect(),
        MaskSource::Enhanced => {
            let enhanced_l = clahe(&lab.l, &cfg.clahe)?;
            (0..lab.len())
                .map(|i| {
                    let p = LabPixel::new(enhanced_l.data()[i], lab.a.data()[i], lab.b.data()[i]);
                    hsv_value(lab_to_srgb(p))
                })
                .collect()
        }
    };

    let lesion = otsu_lesion_mask(&values, w, h, cfg)?;
    let excluded = dilate(&lesion.mask, cfg.dilation_radius);
    let points: Vec<LabPixel> = excluded
        .data()
        .iter()
        .enumerate()
        .filter(|&(_, &masked)| !masked)
        .map(|(i, _)| lab.pixel_at(i))
        .collect();
    let required = (cfg.min_skin_fraction * lab.len() as f64).ceil() as usize;
    if points.len() < required.max(cfg.k_max) {
        return Err(Error::InsufficientSkinPixels {
            used: points.len(),
            required: required.max(cfg.k_max),
        });
    }
    let n_pixels_used = points.len();
    let points = subsample(points, cfg.max_points, cfg.seed);

    let runs: Vec<KMeansResult> = (cfg.k_min..=cfg.k_max)
        .map(|k| {
            let mut kc = KMeansConfig::new(k, cfg.seed.wrapping_add(k as u64));
            kc.max_iter = cfg.kmeans_max_iter;
            kc.tol = cfg.kmeans_tol;
            kmeans(&points, &kc)
        })
        .collect::<Result<_>>()?;

    let ks: Vec<f64> = (cfg.k_min..=cfg.k_max).map(|k| k as f64).collect();
    // Lloyd only finds local optima; the running minimum keeps the curve monotone.
    let mut inertia: Vec<f64> = runs.iter().map(|r| r.inertia).collect();
    for i in 1..inertia.len() {
        inertia[i] = inertia[i].min(inertia[i - 1]);
    }
    let k_selected = match kneedle(&ks, &inertia) {
        Ok(knee) => knee.x as usize,
        Err(_) => cfg.fallback_k.clamp(cfg.k_min, cfg.k_max),
    };
    let chosen = &runs[k_selected - cfg.k_min];

    let sizes = chosen.cluster_sizes();
    let (cluster, &size) = sizes
        .iter()
        .enumerate()
        .fold(None::<(usize, &usize)>, |acc, (i, s)| match acc {
            Some((_, b)) if s <= b => acc,
            _ => Some((i, s)),
        })
        .expect("k >= 1");
    let centroid = chosen.centroids[cluster];
    let value = ita(centroid.l, centroid.b, cfg.variant)?;

    Ok(ItaEstimate {
        ita: value,
        method: Method::Quantization,
        diagnostics: Diagnostics::Quantization {
            n_pixels_used,
            k_selected,
            chosen_cluster_size: size,
            lesion_mask_applied: lesion.applied,
            suspect_inverted_contrast: lesion.applied && lesion.dark_fraction > 0.5,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::srgb_to_lab;
    use crate::imgproc::Raster;

    fn direct_ita(p: crate::color::SrgbPixel) -> f64 {
        let lab = srgb_to_lab(p, WhitePoint::D65);
        ita(lab.l, lab.b, ItaVariant::Arctan).unwrap().0
    }

    #[test]
    fn uniform_image() {
        let skin = lab_to_srgb(LabPixel::new(65.0, 10.0, 15.0));
        let img = Raster::filled(96, 96, skin).unwrap();
        let e = estimate_quantization(&img, &QuantizationConfig::default()).unwrap();
        assert!((e.ita.0 - direct_ita(skin)).abs() < 0.5);
        let Diagnostics::Quantization {
            lesion_mask_applied, ..
        } = e.diagnostics
        else {
            panic!()
        };
        assert!(!lesion_mask_applied);
    }

    #[test]
    fn dark_lesion_is_masked() {
        let skin = lab_to_srgb(LabPixel::new(65.0, 10.0, 15.0));
        let lesion = lab_to_srgb(LabPixel::new(35.0, 18.0, 20.0));
        let img = Raster::from_fn(128, 128, |x, y| {
            if (x as i32 - 64).pow(2) + (y as i32 - 64).pow(2) < 35 * 35 {
                lesion
            } else {
                skin
            }
        })
        .unwrap();
        let e = estimate_quantization(&img, &QuantizationConfig::default()).unwrap();
        assert!((e.ita.0 - direct_ita(skin)).abs() < 0.5, "{}", e.ita.0);
        let Diagnostics::Quantization {
            lesion_mask_applied,
            suspect_inverted_contrast,
            ..
        } = e.diagnostics
        else {
            panic!()
        };
        assert!(lesion_mask_applied);
        assert!(!suspect_inverted_contrast);
    }

    #[test]
    fn inverted_contrast_is_flagged() {
        // lesion lighter than skin: Otsu masks the (darker) skin instead
        let skin = lab_to_srgb(LabPixel::new(45.0, 12.0, 18.0));
        let lesion = lab_to_srgb(LabPixel::new(80.0, 4.0, 8.0));
        let img = Raster::from_fn(128, 128, |x, y| {
            if (x as i32 - 64).pow(2) + (y as i32 - 64).pow(2) < 30 * 30 {
                lesion
            } else {
                skin
            }
        })
        .unwrap();
        match estimate_quantization(&img, &QuantizationConfig::default()) {
            Ok(e) => {
                let Diagnostics::Quantization {
                    suspect_inverted_contrast,
                    ..
                } = e.diagnostics
                else {
                    panic!()
                };
                assert!(suspect_inverted_contrast);
                assert!((e.ita.0 - direct_ita(skin)).abs() > 5.0);
            }
            Err(err) => assert!(matches!(err, Error::InsufficientSkinPixels { .. }), "{err}"),
        }
    }

    #[test]
    fn too_small() {
        let img = Raster::filled(63, 80, crate::color::SrgbPixel::new(200, 150, 120)).unwrap();
        assert!(matches!(
            estimate_quantization(&img, &QuantizationConfig::default()),
            Err(Error::ImageTooSmall(_))
        ));
    }
}
