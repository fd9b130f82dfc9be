use std::path::Path;

use crate::error::{JpegElaError, Result};

/// Minimum edge length. The synthetic generator never goes below this,
/// and the patch-grid features downstream assume it.
pub const MIN_DIM: usize = 16;

/// 8-bit sRGB image, interleaved row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::from_pixels(width, height, vec![0; width * height * 3])
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_DIM || height < MIN_DIM {
            return Err(JpegElaError::Geometry(format!(
                "image {width}x{height} below the {MIN_DIM}-pixel floor"
            )));
        }
        if pixels.len() != width * height * 3 {
            return Err(JpegElaError::Geometry(format!(
                "pixel buffer holds {} bytes, {width}x{height} rgb needs {}",
                pixels.len(),
                width * height * 3
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Mean absolute per-channel difference against another image of the
    /// same dimensions.
    pub fn mean_abs_diff(&self, other: &ImageBuffer) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(JpegElaError::Geometry(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let total: u64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| (a as i32 - b as i32).unsigned_abs() as u64)
            .sum();
        Ok(total as f64 / self.pixels.len() as f64)
    }

    pub fn save_png<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let img =
            image::RgbImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
                .expect("buffer length is validated");
        img.save_with_format(path.as_ref(), image::ImageFormat::Png)
            .map_err(|e| JpegElaError::Data(format!("png write failed: {e}")))
    }

    pub fn load_png<P: AsRef<Path>>(path: P) -> Result<Self> {
        let img = image::open(path.as_ref())
            .map_err(|e| JpegElaError::Data(format!("png read failed: {e}")))?
            .into_rgb8();
        Self::from_pixels(img.width() as usize, img.height() as usize, img.into_raw())
    }
}
