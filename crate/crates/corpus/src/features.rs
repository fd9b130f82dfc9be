use jpeg_ela::ImageBuffer;

use crate::error::{CorpusError, Result};

/// All images are normalized to this square size before featurization,
/// whatever resolution they were stored at.
pub const TARGET_SIZE: usize = 128;

/// Patch-grid visual features: `rows * cols` regions, each a flattened
/// RGB patch scaled to [0, 1]. Row-major region order.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionFeatures {
    pub rows: usize,
    pub cols: usize,
    /// Length of one region vector.
    pub d: usize,
    data: Vec<f32>,
}

impl RegionFeatures {
    pub fn n_regions(&self) -> usize {
        self.rows * self.cols
    }

    pub fn region(&self, index: usize) -> &[f32] {
        &self.data[index * self.d..(index + 1) * self.d]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Bilinear resample to `dst_w` x `dst_h`; returns RGB rows of f32 still in
/// the 0..=255 range. Pixel centers map to pixel centers, edges clamp.
pub fn resize_bilinear(img: &ImageBuffer, dst_w: usize, dst_h: usize) -> Vec<f32> {
    let (sw, sh) = (img.width(), img.height());
    let px = img.pixels();
    let mut out = Vec::with_capacity(dst_w * dst_h * 3);
    for dy in 0..dst_h {
        let sy = ((dy as f64 + 0.5) * sh as f64 / dst_h as f64 - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = sy - y0 as f64;
        for dx in 0..dst_w {
            let sx =
                ((dx as f64 + 0.5) * sw as f64 / dst_w as f64 - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let fx = sx - x0 as f64;
            for ch in 0..3 {
                let at = |x: usize, y: usize| px[(y * sw + x) * 3 + ch] as f64;
                let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
                let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
                out.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    out
}

/// Cut the normalized image into a `rows` x `cols` grid of flattened
/// patches. The learned projection into model width is the models' job;
/// these are raw pixel features.
pub fn patch_features(img: &ImageBuffer, rows: usize, cols: usize) -> Result<RegionFeatures> {
    if rows == 0
        || cols == 0
        || !TARGET_SIZE.is_multiple_of(rows)
        || !TARGET_SIZE.is_multiple_of(cols)
    {
        return Err(CorpusError::Config(format!(
            "grid {rows}x{cols} must evenly divide the {TARGET_SIZE}-pixel frame"
        )));
    }
    let resized = resize_bilinear(img, TARGET_SIZE, TARGET_SIZE);
    let patch_h = TARGET_SIZE / rows;
    let patch_w = TARGET_SIZE / cols;
    let d = patch_h * patch_w * 3;
    let mut data = Vec::with_capacity(rows * cols * d);
    for gy in 0..rows {
        for gx in 0..cols {
            for y in 0..patch_h {
                for x in 0..patch_w {
                    let sy = gy * patch_h + y;
                    let sx = gx * patch_w + x;
                    for ch in 0..3 {
                        data.push(resized[(sy * TARGET_SIZE + sx) * 3 + ch] / 255.0);
                    }
                }
            }
        }
    }
    Ok(RegionFeatures {
        rows,
        cols,
        d,
        data,
    })
}
