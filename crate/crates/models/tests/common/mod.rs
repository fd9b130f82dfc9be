//! Shared fixtures: slim configs and hand-built samples so model tests
//! never touch the filesystem.
//!
//! Each test binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use jpeg_ela::ImageBuffer;
use models::{ModelConfig, Sample, StreamConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Narrow streams keep per-test forwards cheap; the layer counts still
/// exercise the self-attention prefix plus one co-attentive pair.
pub fn mini_config() -> ModelConfig {
    ModelConfig {
        stream: StreamConfig {
            v_layers: 2,
            t_layers: 2,
            d_v: 32,
            d_t: 32,
            heads: 4,
            coattn_pairs: 1,
            visual_positions: false,
        },
        max_len: 8,
        grid: 4,
        ..ModelConfig::default()
    }
}

pub const VOCAB: usize = 24;

pub fn patchwork_image(seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels: Vec<u8> = (0..128 * 128 * 3).map(|_| rng.gen()).collect();
    ImageBuffer::from_pixels(128, 128, pixels).unwrap()
}

/// Rearrange the image's grid x grid patch blocks by `perm`, so that
/// output patch i is input patch perm[i].
pub fn permute_patches(img: &ImageBuffer, grid: usize, perm: &[usize]) -> ImageBuffer {
    let side = 128 / grid;
    let src = img.pixels();
    let mut dst = vec![0u8; src.len()];
    for (i, &j) in perm.iter().enumerate() {
        let (dy, dx) = (i / grid * side, i % grid * side);
        let (sy, sx) = (j / grid * side, j % grid * side);
        for y in 0..side {
            for x in 0..side {
                let d = ((dy + y) * 128 + dx + x) * 3;
                let s = ((sy + y) * 128 + sx + x) * 3;
                dst[d..d + 3].copy_from_slice(&src[s..s + 3]);
            }
        }
    }
    ImageBuffer::from_pixels(128, 128, dst).unwrap()
}

pub fn tokens_and_mask(seed: u64, real_len: usize, max_len: usize) -> (Vec<usize>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens = vec![corpus::CLS_ID];
    for _ in 1..real_len {
        tokens.push(rng.gen_range(3..VOCAB));
    }
    tokens.resize(max_len, corpus::PAD_ID);
    let mask = (0..max_len).map(|i| i < real_len).collect();
    (tokens, mask)
}

/// A sample carrying every feature kind, so any model can consume it.
pub fn full_sample(seed: u64, cfg: &ModelConfig) -> Sample {
    let (tokens, mask) = tokens_and_mask(seed, 5, cfg.max_len);
    let img = patchwork_image(seed.wrapping_add(99));
    let regions = corpus::patch_features(&img, cfg.grid, cfg.grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
    let ela = (0..128 * 128 * 3).map(|_| rng.gen::<f32>()).collect();
    Sample {
        id: format!("sample-{seed}"),
        label: (seed % 2) as usize,
        tokens,
        mask,
        regions: Some(regions),
        ela: Some(ela),
    }
}

pub fn logits_f64(
    model: &dyn models::Model<f64>,
    sample: &Sample,
    rng: Option<&mut ChaCha8Rng>,
) -> Vec<f64> {
    let mut g = autodiff::Graph::new();
    let bound = model.store().bind(&mut g);
    let id = model.forward(&mut g, &bound, sample, rng).unwrap();
    assert_eq!(g.shape(id), &[1, 2]);
    g.value(id).data().to_vec()
}
