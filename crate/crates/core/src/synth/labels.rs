use serde::{Deserialize, Serialize};

use super::skin::MelRange;
use crate::color::{
    ita, ita_to_fitzpatrick, srgb_image_to_lab, FitzpatrickType, ItaDegrees, ItaThresholds, ItaVariant, WhitePoint,
};
use crate::error::{Error, Result};
use crate::estimators::robust_skin_pixels;
use crate::imgproc::{Mask, RgbImage};

const K: usize = FitzpatrickType::COUNT;

/// Five non-decreasing melanosome fractions separating types I..VI.
///
/// A type whose provisional bin was empty at either end of the scale gets a
/// boundary at the end of the range and is never assigned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelanosomeThresholds {
    pub boundaries: [f64; 5],
}

impl MelanosomeThresholds {
    pub fn new(boundaries: [f64; 5], range: &MelRange) -> Result<Self> {
        if boundaries.iter().any(|b| !b.is_finite() || !range.contains(*b)) {
            return Err(Error::InvalidThresholds(format!(
                "melanosome thresholds {boundaries:?} must lie in [{}, {}]",
                range.min, range.max
            )));
        }
        if boundaries.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidThresholds(format!(
                "melanosome thresholds {boundaries:?} must be non-decreasing"
            )));
        }
        Ok(Self { boundaries })
    }

    /// Type `1 + #{boundaries ≤ m}`.
    pub fn label(&self, m: f64) -> FitzpatrickType {
        let n = self.boundaries.iter().filter(|&&b| b <= m).count();
        FitzpatrickType::from_zero_based(n).expect("at most 5 boundaries")
    }
}

/// Mean per-pixel ITA of the skin: lesion pixels removed, then pixels more
/// than one standard deviation from the median L* or b* discarded.
pub fn image_mean_ita(img: &RgbImage, lesion_mask: &Mask) -> Result<f64> {
    let lab = srgb_image_to_lab(img, WhitePoint::D65);
    let kept = robust_skin_pixels(&lab, lesion_mask)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for i in kept {
        if let Ok(v) = ita(lab.l.data()[i], lab.b.data()[i], ItaVariant::Arctan) {
            sum += v.0;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientSkinPixels { used: 0, required: 1 });
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtLabels {
    pub labels: Vec<FitzpatrickType>,
    /// Types from binning each image's mean ITA.
    pub provisional: Vec<FitzpatrickType>,
    pub bin_counts: [usize; K],
    /// Mean melanosome fraction of each provisional bin; `None` when empty.
    pub bin_means: [Option<f64>; K],
    pub thresholds: MelanosomeThresholds,
}

/// Weighted least-squares non-decreasing fit: adjacent values that violate
/// the order are replaced by their weighted mean until none remain.
pub fn pool_adjacent_violators(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // (mean, weight, run length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, n2) = blocks.pop().unwrap();
            let (m1, w1, n1) = blocks.pop().unwrap();
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, n1 + n2));
        }
    }
    blocks.iter().flat_map(|&(m, _, n)| std::iter::repeat_n(m, n)).collect()
}

/// Ground-truth Fitzpatrick labels.
///
/// Mean ITAs are binned with `ita_thresholds`; each occupied bin's mean
/// melanosome fraction is computed and made non-decreasing over the bins by
/// a count-weighted isotonic fit (empty bins between occupied ones are
/// linearly interpolated by bin index); thresholds are the midpoints between
/// consecutive means; every image is finally labeled from its own
/// melanosome fraction.
pub fn derive_gt_fp_labels(
    mean_itas: &[f64],
    mels: &[f64],
    ita_thresholds: &ItaThresholds,
    range: &MelRange,
) -> Result<GtLabels> {
    if mean_itas.len() != mels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} mean ITAs for {} melanosome fractions",
            mean_itas.len(),
            mels.len()
        )));
    }
    let provisional: Vec<FitzpatrickType> = mean_itas
        .iter()
        .map(|&v| ita_to_fitzpatrick(ItaDegrees(v), ita_thresholds))
        .collect();
    let mut sums = [0.0; K];
    let mut bin_counts = [0usize; K];
    for (t, &m) in provisional.iter().zip(mels) {
        sums[t.zero_based()] += m;
        bin_counts[t.zero_based()] += 1;
    }
    let occupied: Vec<usize> = (0..K).filter(|&k| bin_counts[k] > 0).collect();
    if occupied.len() < 2 {
        return Err(Error::InsufficientBins(format!(
            "{} provisional type bin(s) occupied, at least 2 required",
            occupied.len()
        )));
    }
    let bin_means: [Option<f64>; K] =
        std::array::from_fn(|k| (bin_counts[k] > 0).then(|| sums[k] / bin_counts[k] as f64));
    let fitted = pool_adjacent_violators(
        &occupied.iter().map(|&k| bin_means[k].unwrap()).collect::<Vec<_>>(),
        &occupied.iter().map(|&k| bin_counts[k] as f64).collect::<Vec<_>>(),
    );
    if fitted[fitted.len() - 1] <= fitted[0] {
        return Err(Error::DegenerateInput(format!(
            "bin mean melanosome fractions do not increase with type: {bin_means:?}"
        )));
    }
    let mut monotone = [None; K];
    for (&k, &m) in occupied.iter().zip(&fitted) {
        monotone[k] = Some(m);
    }

    let (first, last) = (occupied[0], occupied[occupied.len() - 1]);
    let mut filled = [f64::NAN; K];
    for w in occupied.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (mi, mj) = (monotone[i].unwrap(), monotone[j].unwrap());
        for (k, slot) in filled.iter_mut().enumerate().take(j + 1).skip(i) {
            *slot = mi + (mj - mi) * (k - i) as f64 / (j - i) as f64;
        }
    }
    let boundaries: [f64; 5] = std::array::from_fn(|k| {
        if k < first {
            range.min
        } else if k >= last {
            range.max
        } else {
            (filled[k] + filled[k + 1]) / 2.0
        }
    });
    let thresholds = MelanosomeThresholds::new(boundaries, range)?;
    Ok(GtLabels {
        labels: mels.iter().map(|&m| thresholds.label(m)).collect(),
        provisional,
        bin_counts,
        bin_means,
        thresholds,
    })
}
