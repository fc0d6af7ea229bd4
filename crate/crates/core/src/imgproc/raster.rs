use crate::color::{LabPixel, SrgbPixel};
use crate::error::{Error, Result};

/// Row-major single-plane raster. Multi-channel images use a pixel struct
/// (`Raster<SrgbPixel>`) or one raster per plane ([`LabImage`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type RgbImage = Raster<SrgbPixel>;
pub type Mask = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} raster needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        let i = self.index(x, y);
        self.data[i] = v;
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Copies out the `w`x`h` window whose top-left corner is (`x0`, `y0`).
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster<T>>
    where
        T: Clone,
    {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::ImageTooSmall(format!(
                "crop {w}x{h} at ({x0},{y0}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Raster {
            width: w,
            height: h,
            data,
        })
    }

    pub fn same_dims<U>(&self, other: &Raster<U>) -> bool {
        self.dims() == other.dims()
    }
}

impl Raster<f64> {
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn invert(&self) -> Mask {
        self.map(|v| !v)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        ensure_same_dims(self, other)?;
        Ok(Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a || *b).collect(),
        })
    }

    /// True when every pixel selected here is also selected in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.same_dims(other) && self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }
}

pub(crate) fn ensure_same_dims<A, B>(a: &Raster<A>, b: &Raster<B>) -> Result<()> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )))
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ImageTooSmall(format!(
            "raster dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Planar CIELAB image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub l: Raster<f64>,
    pub a: Raster<f64>,
    pub b: Raster<f64>,
}

impl LabImage {
    pub fn filled(width: usize, height: usize, p: LabPixel) -> Result<Self> {
        Ok(Self {
            l: Raster::filled(width, height, p.l)?,
            a: Raster::filled(width, height, p.a)?,
            b: Raster::filled(width, height, p.b)?,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> LabPixel) -> Result<Self> {
        let mut l = Vec::with_capacity(width * height);
        let mut a = Vec::with_capacity(width * height);
        let mut b = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let p = f(x, y);
                l.push(p.l);
                a.push(p.a);
                b.push(p.b);
            }
        }
        Ok(Self {
            l: Raster::from_vec(width, height, l)?,
            a: Raster::from_vec(width, height, a)?,
            b: Raster::from_vec(width, height, b)?,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.l.dims()
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn pixel_at(&self, i: usize) -> LabPixel {
        LabPixel::new(self.l.data()[i], self.a.data()[i], self.b.data()[i])
    }

    pub fn pixel(&self, x: usize, y: usize) -> LabPixel {
        self.pixel_at(self.l.index(x, y))
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, p: LabPixel) {
        self.l.set(x, y, p.l);
        self.a.set(x, y, p.a);
        self.b.set(x, y, p.b);
    }
}
