//! Skin-tone colorimetry for dermatoscopic images.
//!
//! The crate bundles three ITA (Individual Typology Angle) estimators, an
//! ordinal Fitzpatrick classifier, a procedural generator of synthetic
//! dermatoscopic images with known melanin content and lighting, and the
//! statistics used to compare the methods against ground truth.
//!
//! Module map:
//! - [`color`]: sRGB / CIELAB / HSV conversions, ITA and Fitzpatrick binning
//! - [`imgproc`]: rasters, CLAHE, Otsu, dilation, Gaussian blur, resizing
//! - [`io`]: PNG reading and writing of images and masks
//! - [`estimators`]: segmentation, patch and color-quantization ITA pipelines
//! - [`calibration`]: OLS mapping of raw patch ITA onto a reference ITA
//! - [`stats`]: correlation, bootstrap, Bland-Altman, R² models, FP metrics
//! - [`synth`]: synthetic sample/dataset generation and ground-truth labels
//! - [`ordinal`]: CORAL ordinal regression on blurred, downscaled images

pub mod calibration;
pub mod color;
pub mod error;
pub mod estimators;
pub mod imgproc;
pub mod io;
pub mod ordinal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
