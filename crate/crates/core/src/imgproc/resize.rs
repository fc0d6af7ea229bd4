use super::Raster;
use crate::error::{Error, Result};

/// Sparse resampling weights: for every output sample, `(source index, weight)`.
type AxisWeights = Vec<Vec<(usize, f64)>>;

/// Bilinear weights with half-pixel centers and clamped borders.
fn bilinear_weights(src: usize, dst: usize) -> AxisWeights {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let c = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = c.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            let f = c - i0 as f64;
            if i0 == i1 || f == 0.0 {
                vec![(i0, 1.0)]
            } else {
                vec![(i0, 1.0 - f), (i1, f)]
            }
        })
        .collect()
}

/// Box-filter weights: each output sample averages the source interval it covers,
/// with fractional coverage at the ends.
fn area_weights(src: usize, dst: usize) -> AxisWeights {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let start = o as f64 * scale;
            let end = start + scale;
            let mut ws = Vec::new();
            let mut i = start.floor() as usize;
            while (i as f64) < end && i < src {
                let overlap = (end.min(i as f64 + 1.0) - start.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    ws.push((i, overlap / scale));
                }
                i += 1;
            }
            ws
        })
        .collect()
}

fn axis_weights(src: usize, dst: usize) -> AxisWeights {
    if src >= 2 * dst {
        area_weights(src, dst)
    } else {
        bilinear_weights(src, dst)
    }
}

/// Resamples to `new_w` x `new_h`. Each axis uses area averaging when it
/// shrinks by 2x or more and bilinear interpolation otherwise.
pub fn resize(img: &Raster<f64>, new_w: usize, new_h: usize) -> Result<Raster<f64>> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidParams(format!(
            "resize target must be at least 1x1, got {new_w}x{new_h}"
        )));
    }
    let (w, h) = img.dims();
    if (w, h) == (new_w, new_h) {
        return Ok(img.clone());
    }
    let wx = axis_weights(w, new_w);
    let wy = axis_weights(h, new_h);
    let src = img.data();

    let mut tmp = vec![0.0; new_w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (x, ws) in wx.iter().enumerate() {
            tmp[y * new_w + x] = ws.iter().map(|&(i, k)| k * row[i]).sum();
        }
    }
    let mut out = vec![0.0; new_w * new_h];
    for (y, ws) in wy.iter().enumerate() {
        for &(sy, k) in ws {
            let src_row = &tmp[sy * new_w..(sy + 1) * new_w];
            for (d, s) in out[y * new_w..(y + 1) * new_w].iter_mut().zip(src_row) {
                *d += k * s;
            }
        }
    }
    Raster::from_vec(new_w, new_h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_bitwise_equal() {
        let img = Raster::from_fn(7, 5, |x, y| (x as f64).sin() + y as f64 / 3.0).unwrap();
        assert_eq!(resize(&img, 7, 5).unwrap(), img);
    }

    #[test]
    fn checkerboard_to_single_pixel() {
        let img = Raster::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = resize(&img, 1, 1).unwrap();
        assert!((out.data()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn four_by_four_block_averages() {
        let vals: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let img = Raster::from_vec(4, 4, vals).unwrap();
        let out = resize(&img, 2, 2).unwrap();
        // manual 2x2 block means
        let want = [
            (0.0 + 1.0 + 4.0 + 5.0) / 4.0,
            (2.0 + 3.0 + 6.0 + 7.0) / 4.0,
            (8.0 + 9.0 + 12.0 + 13.0) / 4.0,
            (10.0 + 11.0 + 14.0 + 15.0) / 4.0,
        ];
        for (g, w) in out.data().iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn non_integer_area_ratio_preserves_mean() {
        let img = Raster::from_fn(100, 70, |x, y| ((x * 3 + y * 5) % 17) as f64).unwrap();
        let out = resize(&img, 32, 32).unwrap();
        assert!((img.mean() - out.mean()).abs() < 1e-9);
    }

    #[test]
    fn bilinear_upscale_keeps_constant_and_range() {
        let img = Raster::filled(3, 3, 0.4).unwrap();
        let out = resize(&img, 5, 4).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.4).abs() < 1e-15));
        let ramp = Raster::from_fn(4, 1, |x, _| x as f64).unwrap();
        let up = resize(&ramp, 7, 1).unwrap();
        assert!(up.data().windows(2).all(|w| w[1] >= w[0]));
        assert!(up.data().iter().all(|&v| (0.0..=3.0).contains(&v)));
    }

    #[test]
    fn zero_target_rejected() {
        let img = Raster::filled(3, 3, 0.0).unwrap();
        assert!(resize(&img, 0, 3).is_err());
    }
}
