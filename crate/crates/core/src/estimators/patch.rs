use serde::{Deserialize, Serialize};

use super::{Diagnostics, ItaEstimate, Method};
use crate::color::{ita, srgb_image_to_lab, ItaVariant, WhitePoint};
use crate::error::{Error, Result};
use crate::imgproc::RgbImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub patch_size: usize,
    /// 1..=8; the first four are the corners, the rest edge midpoints.
    pub n_patches: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_size: 32,
            n_patches: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub x: usize,
    pub y: usize,
    pub size: usize,
}

/// Patch positions, in order: top-left, top-right, bottom-left, bottom-right
/// corners, then top, bottom, left, right edge midpoints. Every patch keeps a
/// margin of half a patch to the image border.
pub fn patch_layout(width: usize, height: usize, patch_size: usize, n_patches: usize) -> Result<Vec<PatchRect>> {
    if !(1..=8).contains(&n_patches) {
        return Err(Error::InvalidParams(format!(
            "n_patches must be in 1..=8, got {n_patches}"
        )));
    }
    if patch_size == 0 || patch_size > width.min(height) / 4 {
        return Err(Error::ImageTooSmall(format!(
            "patch size {patch_size} needs an image of at least {0}x{0}, got {width}x{height}",
            4 * patch_size.max(1)
        )));
    }
    let p = patch_size;
    let m = p / 2;
    let right = width - m - p;
    let bottom = height - m - p;
    let cx = width / 2 - p / 2;
    let cy = height / 2 - p / 2;
    let all = [
        (m, m),
        (right, m),
        (m, bottom),
        (right, bottom),
        (cx, m),
        (cx, bottom),
        (m, cy),
        (right, cy),
    ];
    Ok(all[..n_patches]
        .iter()
        .map(|&(x, y)| PatchRect { x, y, size: p })
        .collect())
}

pub fn sample_edge_patches(img: &RgbImage, patch_size: usize, n_patches: usize) -> Result<Vec<RgbImage>> {
    let (w, h) = img.dims();
    patch_layout(w, h, patch_size, n_patches)?
        .into_iter()
        .map(|r| img.crop(r.x, r.y, r.size, r.size))
        .collect()
}

/// Patch-based ITA: the highest arctan2 ITA among the border patches, each
/// computed from the patch's mean L* and b*. Ties go to the lowest index.
pub fn estimate_patch(img: &RgbImage, cfg: &PatchConfig) -> Result<ItaEstimate> {
    let patches = sample_edge_patches(img, cfg.patch_size, cfg.n_patches)?;
    let mut itas = Vec::with_capacity(patches.len());
    for patch in &patches {
        let lab = srgb_image_to_lab(patch, WhitePoint::D65);
        let n = lab.len() as f64;
        let mean_l = lab.l.data().iter().sum::<f64>() / n;
        let mean_b = lab.b.data().iter().sum::<f64>() / n;
        itas.push(ita(mean_l, mean_b, ItaVariant::Arctan2)?.0);
    }
    let (best, &value) = itas
        .iter()
        .enumerate()
        .fold(None::<(usize, &f64)>, |acc, (i, v)| match acc {
            Some((_, bv)) if *v <= *bv => acc,
            _ => Some((i, v)),
        })
        .expect("at least one patch");
    Ok(ItaEstimate {
        ita: crate::color::ItaDegrees(value),
        method: Method::Patch,
        diagnostics: Diagnostics::Patch {
            chosen_patch_index: best,
            patch_itas: itas,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{lab_to_srgb, srgb_to_lab, LabPixel, SrgbPixel};
    use crate::imgproc::Raster;

    fn skin() -> SrgbPixel {
        lab_to_srgb(LabPixel::new(65.0, 10.0, 15.0))
    }

    fn ita_of(p: SrgbPixel) -> f64 {
        let lab = srgb_to_lab(p, WhitePoint::D65);
        ita(lab.l, lab.b, ItaVariant::Arctan2).unwrap().0
    }

    #[test]
    fn layout_512() {
        let rects = patch_layout(512, 512, 32, 8).unwrap();
        assert_eq!(rects.len(), 8);
        let pos: Vec<(usize, usize)> = rects.iter().map(|r| (r.x, r.y)).collect();
        assert_eq!(
            pos,
            vec![
                (16, 16),
                (464, 16),
                (16, 464),
                (464, 464),
                (240, 16),
                (240, 464),
                (16, 240),
                (464, 240)
            ]
        );
        let img = Raster::filled(512, 512, skin()).unwrap();
        let patches = sample_edge_patches(&img, 32, 8).unwrap();
        assert!(patches.iter().all(|p| p.dims() == (32, 32)));
        assert_eq!(patch_layout(512, 512, 32, 4).unwrap(), rects[..4].to_vec());
        assert_eq!(patch_layout(512, 512, 32, 8).unwrap(), rects);
    }

    #[test]
    fn rejects_small_images() {
        assert!(matches!(patch_layout(100, 512, 32, 8), Err(Error::ImageTooSmall(_))));
        assert!(patch_layout(512, 512, 32, 9).is_err());
    }

    #[test]
    fn central_lesion_invisible() {
        let img = Raster::from_fn(256, 256, |x, y| {
            if (x as i32 - 128).pow(2) + (y as i32 - 128).pow(2) < 60 * 60 {
                SrgbPixel::new(60, 30, 20)
            } else {
                skin()
            }
        })
        .unwrap();
        let e = estimate_patch(&img, &PatchConfig::default()).unwrap();
        assert!((e.ita.0 - ita_of(skin())).abs() < 1e-9);
    }

    #[test]
    fn dark_corner_ignored() {
        let img = Raster::from_fn(256, 256, |x, y| {
            if x < 64 && y < 64 {
                SrgbPixel::new(20, 15, 10)
            } else {
                skin()
            }
        })
        .unwrap();
        let e = estimate_patch(&img, &PatchConfig::default()).unwrap();
        assert!((e.ita.0 - ita_of(skin())).abs() < 1e-9);
        assert_ne!(e.chosen_patch_index(), Some(0));
    }

    #[test]
    fn hypopigmented_patch_wins() {
        let hypo = lab_to_srgb(LabPixel::new(90.0, 0.0, 5.0));
        let img = Raster::from_fn(256, 256, |x, y| if x >= 192 && y < 64 { hypo } else { skin() }).unwrap();
        let e = estimate_patch(&img, &PatchConfig::default()).unwrap();
        assert_eq!(e.chosen_patch_index(), Some(1));
        // atan2(40, 5) in degrees
        let expected = 40.0f64.atan2(5.0).to_degrees();
        assert!((expected - 82.87).abs() < 0.01);
        assert!((e.ita.0 - expected).abs() < 0.5, "{}", e.ita.0);
    }

    #[test]
    fn deterministic_and_max_of_patches() {
        let img = Raster::from_fn(200, 160, |x, y| SrgbPixel::new((x % 256) as u8, (y % 256) as u8, 90)).unwrap();
        let a = estimate_patch(&img, &PatchConfig::default()).unwrap();
        let b = estimate_patch(&img, &PatchConfig::default()).unwrap();
        assert_eq!(a, b);
        let Diagnostics::Patch {
            patch_itas,
            chosen_patch_index,
        } = &a.diagnostics
        else {
            panic!()
        };
        let max = patch_itas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.ita.0, max);
        assert_eq!(patch_itas[*chosen_patch_index], max);
    }
}
