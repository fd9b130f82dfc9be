//! Separable 8×8 type-II DCT and its inverse, in f64. Slow-but-exact form:
//! the codec's determinism matters more than its throughput, and the
//! thumbnail sizes involved keep this far off any hot path.

use std::sync::OnceLock;

const N: usize = 8;

/// cos((2x+1) u π / 16), indexed [x][u].
fn cos_table() -> &'static [[f64; N]; N] {
    static TABLE: OnceLock<[[f64; N]; N]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; N]; N];
        for (x, row) in t.iter_mut().enumerate() {
            for (u, v) in row.iter_mut().enumerate() {
                *v = (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        t
    })
}

#[inline]
fn c(u: usize) -> f64 {
    if u == 0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        1.0
    }
}

fn dct_1d(input: &[f64; N], out: &mut [f64; N]) {
    let cos = cos_table();
    for u in 0..N {
        let mut acc = 0.0;
        for x in 0..N {
            acc += input[x] * cos[x][u];
        }
        out[u] = acc * c(u) * 0.5;
    }
}

fn idct_1d(input: &[f64; N], out: &mut [f64; N]) {
    let cos = cos_table();
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for u in 0..N {
            acc += c(u) * input[u] * cos[x][u];
        }
        *o = acc * 0.5;
    }
}

/// Forward 2-D DCT of a row-major 8×8 block, in place.
pub fn forward(block: &mut [f64; 64]) {
    let mut tmp = [0.0f64; 64];
    let mut line = [0.0f64; N];
    let mut coef = [0.0f64; N];
    for y in 0..N {
        line.copy_from_slice(&block[y * N..(y + 1) * N]);
        dct_1d(&line, &mut coef);
        tmp[y * N..(y + 1) * N].copy_from_slice(&coef);
    }
    for x in 0..N {
        for y in 0..N {
            line[y] = tmp[y * N + x];
        }
        dct_1d(&line, &mut coef);
        for y in 0..N {
            block[y * N + x] = coef[y];
        }
    }
}

/// Inverse 2-D DCT of a row-major 8×8 block, in place.
pub fn inverse(block: &mut [f64; 64]) {
    let mut tmp = [0.0f64; 64];
    let mut line = [0.0f64; N];
    let mut vals = [0.0f64; N];
    for x in 0..N {
        for y in 0..N {
            line[y] = block[y * N + x];
        }
        idct_1d(&line, &mut vals);
        for y in 0..N {
            tmp[y * N + x] = vals[y];
        }
    }
    for y in 0..N {
        line.copy_from_slice(&tmp[y * N..(y + 1) * N]);
        idct_1d(&line, &mut vals);
        block[y * N..(y + 1) * N].copy_from_slice(&vals);
    }
}
