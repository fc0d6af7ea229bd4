//! Raster primitives used by the estimators and the ordinal model.

mod blur;
mod clahe;
mod morph;
mod otsu;
mod raster;
mod resize;

pub use blur::{gaussian_blur, gaussian_kernel_1d};
pub use clahe::{clahe, ClaheConfig};
pub use morph::{dilate, disk_offsets};
pub use otsu::{otsu_from_histogram, otsu_threshold, OtsuResult};
pub use raster::{LabImage, Mask, Raster, RgbImage};
pub use resize::resize;

pub(crate) use raster::ensure_same_dims;
