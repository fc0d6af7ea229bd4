use super::Raster;
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps of odd length `kernel_size`.
pub fn gaussian_kernel_1d(sigma: f64, kernel_size: usize) -> Result<Vec<f64>> {
    if kernel_size < 3 || kernel_size.is_multiple_of(2) {
        return Err(Error::InvalidKernel(format!(
            "kernel size must be odd and >= 3, got {kernel_size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidKernel(format!("sigma must be positive, got {sigma}")));
    }
    let half = (kernel_size / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Mirror index without repeating the edge sample (`dcb|abcd|cba`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur(img: &Raster<f64>, sigma: f64, kernel_size: usize) -> Result<Raster<f64>> {
    let taps = gaussian_kernel_1d(sigma, kernel_size)?;
    let half = (kernel_size / 2) as isize;
    let (w, h) = img.dims();
    let src = img.data();

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * row[reflect(x as isize + k as isize - half, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (k, t) in taps.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - half, h);
            let src_row = &tmp[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += t * s;
            }
        }
    }
    Raster::from_vec(w, h, out)
}
