//! Reference implementations used as oracles. Everything here is written
//! in the most literal loop form available, on plain f64 slices, with no
//! shared code with the library under test.
//!
//! Each test binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rand_vec(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn as_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Triple-loop matrix product.
pub fn matmul_oracle(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for t in 0..k {
                acc += a[i * k + t] * b[t * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Valid cross-correlation with nested loops. Input is H×W×Cin row-major,
/// kernels K×K×Cin×Cout, output (H-K+1)×(W-K+1)×Cout.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_oracle(
    input: &[f64],
    kernels: &[f64],
    bias: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    cout: usize,
) -> Vec<f64> {
    let oh = h - k + 1;
    let ow = w - k + 1;
    let mut out = vec![0.0; oh * ow * cout];
    for oy in 0..oh {
        for ox in 0..ow {
            for co in 0..cout {
                let mut acc = bias[co];
                for ky in 0..k {
                    for kx in 0..k {
                        for ci in 0..cin {
                            let iv = input[((oy + ky) * w + (ox + kx)) * cin + ci];
                            let kv = kernels[((ky * k + kx) * cin + ci) * cout + co];
                            acc += iv * kv;
                        }
                    }
                }
                out[(oy * ow + ox) * cout + co] = acc;
            }
        }
    }
    out
}

/// 2×2 stride-2 max pooling; trailing odd row/column ignored.
pub fn maxpool2_oracle(input: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    let oh = h / 2;
    let ow = w / 2;
    let mut out = vec![0.0; oh * ow * c];
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let v = input[((oy * 2 + dy) * w + (ox * 2 + dx)) * c + ch];
                        if v > best {
                            best = v;
                        }
                    }
                }
                out[(oy * ow + ox) * c + ch] = best;
            }
        }
    }
    out
}

/// Row softmax with optional key mask; masked entries get zero weight.
pub fn softmax_rows_oracle(x: &[f64], m: usize, n: usize, mask: Option<&[bool]>) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &x[i * n..(i + 1) * n];
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            if mask.is_none_or(|m| m[j]) && row[j] > max {
                max = row[j];
            }
        }
        let mut sum = 0.0;
        for j in 0..n {
            if mask.is_none_or(|m| m[j]) {
                out[i * n + j] = (row[j] - max).exp();
                sum += out[i * n + j];
            }
        }
        for j in 0..n {
            out[i * n + j] /= sum;
        }
    }
    out
}

/// Row layer normalization by the direct formula.
pub fn layer_norm_oracle(
    x: &[f64],
    gain: &[f64],
    shift: &[f64],
    l: usize,
    d: usize,
    eps: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; l * d];
    for i in 0..l {
        let row = &x[i * d..(i + 1) * d];
        let mean: f64 = row.iter().sum::<f64>() / d as f64;
        let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rstd = 1.0 / (var + eps).sqrt();
        for j in 0..d {
            out[i * d + j] = (row[j] - mean) * rstd * gain[j] + shift[j];
        }
    }
    out
}

/// Mean negative log-likelihood of the labeled class under row softmax.
pub fn cross_entropy_oracle(logits: &[f64], labels: &[usize], n: usize, c: usize) -> f64 {
    let probs = softmax_rows_oracle(logits, n, c, None);
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        loss -= probs[i * c + y].ln();
    }
    loss / n as f64
}

/// Multi-head scaled dot-product attention, one head at a time, on plain
/// slices. Mirrors: project, split heads, score, mask, softmax, mix,
/// concatenate, project out.
#[allow(clippy::too_many_arguments)]
pub fn attention_oracle(
    queries: &[f64],
    keys: &[f64],
    values: &[f64],
    lq: usize,
    lk: usize,
    d: usize,
    heads: usize,
    wq: &[f64],
    wk: &[f64],
    wv: &[f64],
    wo: &[f64],
    key_mask: Option<&[bool]>,
) -> Vec<f64> {
    let dh = d / heads;
    let q = matmul_oracle(queries, wq, lq, d, d);
    let k = matmul_oracle(keys, wk, lk, d, d);
    let v = matmul_oracle(values, wv, lk, d, d);
    let mut merged = vec![0.0; lq * d];
    for h in 0..heads {
        let col0 = h * dh;
        // slice head columns
        let mut qh = vec![0.0; lq * dh];
        let mut kh = vec![0.0; lk * dh];
        let mut vh = vec![0.0; lk * dh];
        for i in 0..lq {
            qh[i * dh..(i + 1) * dh].copy_from_slice(&q[i * d + col0..i * d + col0 + dh]);
        }
        for i in 0..lk {
            kh[i * dh..(i + 1) * dh].copy_from_slice(&k[i * d + col0..i * d + col0 + dh]);
            vh[i * dh..(i + 1) * dh].copy_from_slice(&v[i * d + col0..i * d + col0 + dh]);
        }
        // scores[i][j] = qh_i · kh_j / sqrt(dh)
        let mut scores = vec![0.0; lq * lk];
        for i in 0..lq {
            for j in 0..lk {
                let mut acc = 0.0;
                for t in 0..dh {
                    acc += qh[i * dh + t] * kh[j * dh + t];
                }
                scores[i * lk + j] = acc / (dh as f64).sqrt();
            }
        }
        let attn = softmax_rows_oracle(&scores, lq, lk, key_mask);
        let ctx = matmul_oracle(&attn, &vh, lq, lk, dh);
        for i in 0..lq {
            merged[i * d + col0..i * d + col0 + dh].copy_from_slice(&ctx[i * dh..(i + 1) * dh]);
        }
    }
    matmul_oracle(&merged, wo, lq, d, d)
}

pub fn assert_close(actual: &[f64], expected: &[f64], tol: f64, what: &str) {
    assert_eq!(actual.len(), expected.len(), "{what}: length");
    for (i, (&a, &e)) in actual.iter().zip(expected).enumerate() {
        let denom = 1.0f64.max(e.abs());
        assert!(
            (a - e).abs() / denom <= tol,
            "{what}: index {i}, actual {a}, expected {e}"
        );
    }
}
