//! Deterministic baseline JPEG codec, Error Level Analysis, and a splice
//! synthesizer with ground-truth masks.
//!
//! The codec is the crate's foundation and is intentionally minimal:
//! baseline sequential, 4:4:4, standard example tables. Owning the codec
//! (rather than wrapping a platform library) is what makes every ELA
//! value and every synthesized forgery bit-reproducible across machines.

mod bits;
mod codec;
mod dct;
mod ela;
mod error;
mod huffman;
mod image;
mod splice;
pub mod tables;
pub mod texture;

pub use codec::{jpeg_decode, jpeg_encode, jpeg_encode_restart};
pub use ela::{ela, ela_region_stats, resave_chain, ElaMap, RegionStats};
pub use error::{JpegElaError, Result};
pub use image::{ImageBuffer, MIN_DIM};
pub use splice::{rect_mask, synth_splice, Rect, SpliceRecord};
