use serde::{Deserialize, Serialize};

use super::{median_in_place, std_dev, Diagnostics, ItaEstimate, Method};
use crate::color::{ita, ItaVariant};
use crate::error::{Error, Result};
use crate::imgproc::{ensure_same_dims, LabImage, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub min_skin_pixels: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self { min_skin_pixels: 10 }
    }
}

/// Indices of skin pixels that survive outlier rejection: pixels outside the
/// lesion mask whose L* and b* both lie within one standard deviation of the
/// respective median. Returned in raster order.
pub fn robust_skin_pixels(lab: &LabImage, lesion_mask: &Mask) -> Result<Vec<usize>> {
    ensure_same_dims(&lab.l, lesion_mask)?;
    let skin: Vec<usize> = lesion_mask
        .data()
        .iter()
        .enumerate()
        .filter_map(|(i, &lesion)| (!lesion).then_some(i))
        .collect();
    if skin.is_empty() {
        return Ok(skin);
    }
    let ls: Vec<f64> = skin.iter().map(|&i| lab.l.data()[i]).collect();
    let bs: Vec<f64> = skin.iter().map(|&i| lab.b.data()[i]).collect();
    let std_l = std_dev(&ls);
    let std_b = std_dev(&bs);
    let med_l = median_in_place(&mut ls.clone()).expect("non-empty");
    let med_b = median_in_place(&mut bs.clone()).expect("non-empty");
    Ok(skin
        .into_iter()
        .zip(ls.iter().zip(&bs))
        .filter(|(_, (&l, &b))| (l - med_l).abs() <= std_l && (b - med_b).abs() <= std_b)
        .map(|(i, _)| i)
        .collect())
}

/// Segmentation-based ITA: median L* and b* of the robust skin pixels.
pub fn estimate_segmentation(lab: &LabImage, lesion_mask: &Mask, cfg: &SegmentationConfig) -> Result<ItaEstimate> {
    ensure_same_dims(&lab.l, lesion_mask)?;
    let n_skin = lesion_mask.len() - lesion_mask.count();
    if n_skin < cfg.min_skin_pixels {
        return Err(Error::InsufficientSkinPixels {
            used: n_skin,
            required: cfg.min_skin_pixels,
        });
    }
    let kept = robust_skin_pixels(lab, lesion_mask)?;
    if kept.is_empty() {
        return Err(Error::InsufficientSkinPixels { used: 0, required: 1 });
    }
    let mut ls: Vec<f64> = kept.iter().map(|&i| lab.l.data()[i]).collect();
    let mut bs: Vec<f64> = kept.iter().map(|&i| lab.b.data()[i]).collect();
    let med_l = median_in_place(&mut ls).expect("non-empty");
    let med_b = median_in_place(&mut bs).expect("non-empty");
    let value = ita(med_l, med_b, ItaVariant::Arctan)
        .map_err(|_| Error::DegenerateInput(format!("median b* of surviving skin is 0 (median L* = {med_l})")))?;
    Ok(ItaEstimate {
        ita: value,
        method: Method::Segmentation,
        diagnostics: Diagnostics::Segmentation {
            n_pixels_used: kept.len(),
        },
    })
}
