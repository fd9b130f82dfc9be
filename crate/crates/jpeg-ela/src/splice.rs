use crate::codec::{jpeg_decode, jpeg_encode};
use crate::error::{JpegElaError, Result};
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}

/// Ground truth for one synthesized splice.
#[derive(Debug, Clone)]
pub struct SpliceRecord {
    /// Caller-assigned reference to the host image (path or id); empty
    /// until set.
    pub host: String,
    pub rect: Rect,
    pub host_quality: u8,
    pub donor_quality: u8,
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl SpliceRecord {
    pub fn with_host(mut self, host: impl Into<String>) -> Self {
        self.host = host.into();
        self
    }

    /// Row-major per-pixel mask, true exactly on the donor rect.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn mask_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Build a mask for `rect` over a width×height image.
pub fn rect_mask(width: usize, height: usize, rect: Rect) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            mask[y * width + x] = true;
        }
    }
    mask
}

/// Manufacture a tampered image with known ground truth: the host is
/// roundtripped at `host_quality`, the donor at `donor_quality`, and the
/// donor's top-left rect-sized patch is pasted at `rect`. When the rect
/// origin is off the 8-pixel block grid, the pasted region carries a
/// compression grid misaligned with the rest of the image, which is what
/// error level analysis keys on.
pub fn synth_splice(
    host: &ImageBuffer,
    donor: &ImageBuffer,
    rect: Rect,
    host_quality: u8,
    donor_quality: u8,
) -> Result<(ImageBuffer, SpliceRecord)> {
    if rect.w == 0 || rect.h == 0 {
        return Err(JpegElaError::Geometry("empty splice rect".into()));
    }
    if rect.x + rect.w > host.width() || rect.y + rect.h > host.height() {
        return Err(JpegElaError::Geometry(format!(
            "rect {rect:?} outside host {}x{}",
            host.width(),
            host.height()
        )));
    }
    if donor.width() < rect.w || donor.height() < rect.h {
        return Err(JpegElaError::Geometry(format!(
            "donor {}x{} smaller than rect {rect:?}",
            donor.width(),
            donor.height()
        )));
    }

    let mut out = jpeg_decode(&jpeg_encode(host, host_quality)?)?;
    let donor_rt = jpeg_decode(&jpeg_encode(donor, donor_quality)?)?;
    for dy in 0..rect.h {
        for dx in 0..rect.w {
            out.set(rect.x + dx, rect.y + dy, donor_rt.get(dx, dy));
        }
    }
    let record = SpliceRecord {
        host: String::new(),
        rect,
        host_quality,
        donor_quality,
        width: host.width(),
        height: host.height(),
        mask: rect_mask(host.width(), host.height(), rect),
    };
    Ok((out, record))
}
