use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{gaussian_blur, resize, Raster, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub blur_sigma: f64,
    pub kernel_size: usize,
    /// Side of the square the blurred image is resized to.
    pub resize_to: usize,
    pub channels: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 5.0,
            kernel_size: 21,
            resize_to: 32,
            channels: 3,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.resize_to * self.resize_to * self.channels
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels != 3 {
            return Err(Error::InvalidParams(format!(
                "features are built from 3 RGB channels, got {}",
                self.channels
            )));
        }
        if self.resize_to == 0 {
            return Err(Error::InvalidParams("resize target must be at least 1 px".into()));
        }
        Ok(())
    }
}

fn channel(img: &RgbImage, c: usize) -> Raster<f64> {
    img.map(|p| f64::from(p.channels()[c]))
}

/// Blur at native resolution, resize, scale to [0, 1] and flatten
/// channel-major (all R, then all G, then all B; rows top to bottom).
pub fn featurize(img: &RgbImage, cfg: &FeatureConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.dim());
    for c in 0..3 {
        let blurred = gaussian_blur(&channel(img, c), cfg.blur_sigma, cfg.kernel_size)?;
        let small = resize(&blurred, cfg.resize_to, cfg.resize_to)?;
        out.extend(small.data().iter().map(|v| v / 255.0));
    }
    Ok(out)
}
