//! ITA estimation pipelines.
//!
//! Three families are implemented:
//! - [`estimate_segmentation`]: robust median color of the skin outside a
//!   known lesion mask;
//! - [`estimate_patch`]: lightest of a fixed set of border patches;
//! - [`estimate_quantization`]: most populated k-means cluster of the skin
//!   left after an Otsu-based lesion mask.

mod kmeans;
mod kneedle;
mod patch;
mod quantization;
mod segmentation;

use serde::{Deserialize, Serialize};

use crate::color::ItaDegrees;

pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use kneedle::{kneedle, Knee};
pub use patch::{estimate_patch, patch_layout, sample_edge_patches, PatchConfig, PatchRect};
pub use quantization::{estimate_quantization, MaskSource, QuantizationConfig};
pub use segmentation::{estimate_segmentation, robust_skin_pixels, SegmentationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Segmentation,
    Patch,
    Quantization,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Segmentation => "segmentation",
            Method::Patch => "patch",
            Method::Quantization => "quantization",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "segmentation" => Ok(Method::Segmentation),
            "patch" => Ok(Method::Patch),
            "quantization" => Ok(Method::Quantization),
            other => Err(format!(
                "unknown method '{other}' (expected segmentation, patch or quantization)"
            )),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-method details of how an estimate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Diagnostics {
    Segmentation {
        /// Skin pixels left after outlier rejection.
        n_pixels_used: usize,
    },
    Patch {
        chosen_patch_index: usize,
        /// ITA of every sampled patch, in layout order.
        patch_itas: Vec<f64>,
    },
    Quantization {
        n_pixels_used: usize,
        k_selected: usize,
        chosen_cluster_size: usize,
        /// False when Otsu found no usable dark class and nothing was masked.
        lesion_mask_applied: bool,
        /// Masked (dark) class covered most of the image: the image probably
        /// has lighter-than-skin lesions and the skin itself was masked.
        suspect_inverted_contrast: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItaEstimate {
    pub ita: ItaDegrees,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl ItaEstimate {
    pub fn n_pixels_used(&self) -> Option<usize> {
        match &self.diagnostics {
            Diagnostics::Segmentation { n_pixels_used } => Some(*n_pixels_used),
            Diagnostics::Quantization { n_pixels_used, .. } => Some(*n_pixels_used),
            Diagnostics::Patch { .. } => None,
        }
    }

    pub fn chosen_patch_index(&self) -> Option<usize> {
        match &self.diagnostics {
            Diagnostics::Patch { chosen_patch_index, .. } => Some(*chosen_patch_index),
            _ => None,
        }
    }

    pub fn k_selected(&self) -> Option<usize> {
        match &self.diagnostics {
            Diagnostics::Quantization { k_selected, .. } => Some(*k_selected),
            _ => None,
        }
    }

    pub fn chosen_cluster_size(&self) -> Option<usize> {
        match &self.diagnostics {
            Diagnostics::Quantization {
                chosen_cluster_size, ..
            } => Some(*chosen_cluster_size),
            _ => None,
        }
    }
}

/// Median of a slice (mean of the two central values for even lengths).
/// Reorders the slice. Returns `None` when empty.
pub(crate) fn median_in_place(v: &mut [f64]) -> Option<f64> {
    let n = v.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lower, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if n % 2 == 1 {
        Some(m)
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((below + m) / 2.0)
    }
}

/// Population standard deviation.
pub(crate) fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median_in_place(&mut []), None);
    }

    #[test]
    fn method_parse_round_trip() {
        for m in [Method::Segmentation, Method::Patch, Method::Quantization] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lightest".parse::<Method>().is_err());
    }
}
