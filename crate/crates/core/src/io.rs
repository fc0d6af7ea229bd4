//! PNG reading and writing for images and masks, and file hashing.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::color::SrgbPixel;
use crate::error::{Error, Result};
use crate::imgproc::{Mask, Raster, RgbImage};

fn codec(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        other => Error::Codec {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| codec(path, e))?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| SrgbPixel::new(p[0], p[1], p[2])).collect();
    Raster::from_vec(w, h, data)
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    create_parent(path)?;
    let bytes: Vec<u8> = img.data().iter().flat_map(|p| [p.r, p.g, p.b]).collect();
    image::save_buffer(
        path,
        &bytes,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| codec(path, e))
}

/// Reads a grayscale mask; values above 127 are set.
pub fn read_mask_png(path: &Path) -> Result<Mask> {
    let img = image::open(path).map_err(|e| codec(path, e))?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Raster::from_vec(w, h, img.pixels().map(|p| p[0] > 127).collect())
}

/// Writes a mask as 8-bit grayscale with values {0, 255}.
pub fn write_mask_png(path: &Path, mask: &Mask) -> Result<()> {
    create_parent(path)?;
    let bytes: Vec<u8> = mask.data().iter().map(|&m| if m { 255 } else { 0 }).collect();
    image::save_buffer(
        path,
        &bytes,
        mask.width() as u32,
        mask.height() as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| codec(path, e))
}

/// Hex SHA-256 of a file's contents.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
