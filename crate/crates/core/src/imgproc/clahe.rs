use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheConfig {
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Histogram clip level in multiples of the mean bin count.
    pub clip_limit: f64,
    pub bins: usize,
    /// Value range of the channel; output stays inside it.
    pub range: (f64, f64),
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: 2.0,
            bins: 256,
            range: (0.0, 100.0),
        }
    }
}

/// Tile boundaries `[0, ..., n]` splitting `n` pixels into `tiles` near-equal runs.
fn tile_edges(n: usize, tiles: usize) -> Vec<usize> {
    (0..=tiles).map(|k| (k * n + tiles / 2) / tiles).collect()
}

/// For a pixel center `p`, the pair of neighboring tile indices and the
/// weight of the second one.
fn neighbors(p: f64, centers: &[f64]) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if p <= centers[0] {
        return (0, 0, 0.0);
    }
    if p >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= p) - 1;
    let f = (p - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, f)
}

/// Contrast-limited adaptive histogram equalization of a single channel.
///
/// Each tile gets a clipped-histogram equalization lookup table (excess
/// counts are spread evenly over all bins); pixels blend the tables of the
/// four nearest tile centers bilinearly. A value maps to the CDF at the
/// middle of its bin, so a flat histogram is the identity up to one bin.
pub fn clahe(channel: &Raster<f64>, cfg: &ClaheConfig) -> Result<Raster<f64>> {
    let (lo, hi) = cfg.range;
    if cfg.tiles_x == 0 || cfg.tiles_y == 0 {
        return Err(Error::InvalidParams("CLAHE tile grid must be at least 1x1".into()));
    }
    if cfg.clip_limit.is_nan() || cfg.clip_limit <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "CLAHE clip limit must be positive, got {}",
            cfg.clip_limit
        )));
    }
    if cfg.bins < 2 || hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::InvalidParams(
            "CLAHE needs >= 2 bins and a non-empty range".into(),
        ));
    }
    let (w, h) = channel.dims();
    if w / cfg.tiles_x < 2 || h / cfg.tiles_y < 2 {
        return Err(Error::ImageTooSmall(format!(
            "{w}x{h} image cannot hold {}x{} tiles of at least 2x2 px",
            cfg.tiles_x, cfg.tiles_y
        )));
    }

    let bins = cfg.bins;
    let span = hi - lo;
    let bin_of = |v: f64| -> usize {
        let t = ((v - lo) / span * bins as f64).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(bins - 1)
        }
    };
    let bin_idx: Vec<usize> = channel.data().iter().map(|&v| bin_of(v)).collect();

    let xe = tile_edges(w, cfg.tiles_x);
    let ye = tile_edges(h, cfg.tiles_y);
    let mut luts = vec![vec![0.0f64; bins]; cfg.tiles_x * cfg.tiles_y];
    for ty in 0..cfg.tiles_y {
        for tx in 0..cfg.tiles_x {
            let mut hist = vec![0.0f64; bins];
            for y in ye[ty]..ye[ty + 1] {
                for x in xe[tx]..xe[tx + 1] {
                    hist[bin_idx[y * w + x]] += 1.0;
                }
            }
            let n = ((xe[tx + 1] - xe[tx]) * (ye[ty + 1] - ye[ty])) as f64;
            let limit = (cfg.clip_limit * n / bins as f64).max(1.0);
            let mut excess = 0.0;
            for c in hist.iter_mut() {
                if *c > limit {
                    excess += *c - limit;
                    *c = limit;
                }
            }
            let spread = excess / bins as f64;
            let lut = &mut luts[ty * cfg.tiles_x + tx];
            let mut below = 0.0;
            for (j, c) in hist.iter().enumerate() {
                let c = c + spread;
                lut[j] = lo + span * ((below + 0.5 * c) / n).clamp(0.0, 1.0);
                below += c;
            }
        }
    }

    let cx: Vec<f64> = xe.windows(2).map(|e| (e[0] + e[1]) as f64 / 2.0).collect();
    let cy: Vec<f64> = ye.windows(2).map(|e| (e[0] + e[1]) as f64 / 2.0).collect();
    let xn: Vec<(usize, usize, f64)> = (0..w).map(|x| neighbors(x as f64 + 0.5, &cx)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (ty0, ty1, fy) = neighbors(y as f64 + 0.5, &cy);
        for (x, &(tx0, tx1, fx)) in xn.iter().enumerate() {
            let b = bin_idx[y * w + x];
            let lut = |tx: usize, ty: usize| luts[ty * cfg.tiles_x + tx][b];
            let top = (1.0 - fx) * lut(tx0, ty0) + fx * lut(tx1, ty0);
            let bottom = (1.0 - fx) * lut(tx0, ty1) + fx * lut(tx1, ty1);
            out.push((1.0 - fy) * top + fy * bottom);
        }
    }
    Raster::from_vec(w, h, out)
}
