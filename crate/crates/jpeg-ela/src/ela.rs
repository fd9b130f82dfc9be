use std::path::Path;

use crate::codec::{jpeg_decode, jpeg_encode};
use crate::error::{JpegElaError, Result};
use crate::image::ImageBuffer;

/// Per-pixel, per-channel absolute resave error. Raw values are kept as
/// measured; `amplification` is carried along for visualization export
/// and never touches the values themselves.
#[derive(Debug, Clone)]
pub struct ElaMap {
    width: usize,
    height: usize,
    values: Vec<u8>,
    pub quality: u8,
    pub amplification: f64,
}

impl ElaMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw error levels, interleaved rgb row-major.
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }

    /// Export with amplification applied and clamped to 8 bits.
    pub fn save_png<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let pixels: Vec<u8> = self
            .values
            .iter()
            .map(|&v| (v as f64 * self.amplification).round().clamp(0.0, 255.0) as u8)
            .collect();
        let img = ImageBuffer::from_pixels(self.width, self.height, pixels)?;
        img.save_png(path)
    }
}

/// Error Level Analysis: resave at `quality`, difference against the
/// input. A region that was last compressed at a very different rate, or
/// whose block grid is misaligned with everything around it, stands out.
pub fn ela(img: &ImageBuffer, quality: u8, amplification: f64) -> Result<ElaMap> {
    if amplification <= 0.0 {
        return Err(JpegElaError::Config(format!(
            "amplification {amplification} must be positive"
        )));
    }
    let resaved = jpeg_decode(&jpeg_encode(img, quality)?)?;
    let values = img
        .pixels()
        .iter()
        .zip(resaved.pixels())
        .map(|(&a, &b)| (a as i16 - b as i16).unsigned_abs() as u8)
        .collect();
    Ok(ElaMap {
        width: img.width(),
        height: img.height(),
        values,
        quality,
        amplification,
    })
}

/// Apply decode∘encode at `quality` k times.
pub fn resave_chain(img: &ImageBuffer, quality: u8, k: usize) -> Result<ImageBuffer> {
    if k == 0 {
        return Err(JpegElaError::Config(
            "resave chain needs at least one pass".into(),
        ));
    }
    let mut current = img.clone();
    for _ in 0..k {
        current = jpeg_decode(&jpeg_encode(&current, quality)?)?;
    }
    Ok(current)
}

#[derive(Debug, Clone, Copy)]
pub struct RegionStats {
    pub mean_in: f64,
    pub mean_out: f64,
    pub ratio: f64,
}

/// Channel-averaged mean error level inside and outside a mask, with the
/// denominator floored at 1e-6 so an exactly-clean outside still yields a
/// finite ratio.
pub fn ela_region_stats(map: &ElaMap, mask: &[bool]) -> Result<RegionStats> {
    if mask.len() != map.width * map.height {
        return Err(JpegElaError::Geometry(format!(
            "mask holds {} entries, map is {}x{}",
            mask.len(),
            map.width,
            map.height
        )));
    }
    let mut sum_in = 0.0;
    let mut n_in = 0usize;
    let mut sum_out = 0.0;
    let mut n_out = 0usize;
    for (i, &inside) in mask.iter().enumerate() {
        let px = &map.values[i * 3..i * 3 + 3];
        let v = (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0;
        if inside {
            sum_in += v;
            n_in += 1;
        } else {
            sum_out += v;
            n_out += 1;
        }
    }
    if n_in == 0 || n_out == 0 {
        return Err(JpegElaError::Data(
            "region stats need both regions non-empty".into(),
        ));
    }
    let mean_in = sum_in / n_in as f64;
    let mean_out = sum_out / n_out as f64;
    Ok(RegionStats {
        mean_in,
        mean_out,
        ratio: mean_in / mean_out.max(1e-6),
    })
}
