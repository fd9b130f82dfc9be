//! Raw numeric kernels behind the graph ops.
//!
//! Every kernel accumulates each output element in a fixed reduction
//! order, so results are bit-reproducible run to run. The orders are
//! chosen for contiguous access and vectorizable inner loops; the heavy
//! backward kernels mirror the forward loop structure instead of the
//! textbook transposed form for exactly that reason.

use crate::element::Element;

/// Dot product with eight independent accumulator lanes. The lane split
/// is part of the fixed reduction order, not a parallelism knob.
fn dot<T: Element>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let ar = &a[c * 8..(c + 1) * 8];
        let br = &b[c * 8..(c + 1) * 8];
        for l in 0..8 {
            lanes[l] = ar[l].mul_add(br[l], lanes[l]);
        }
    }
    let mut acc = T::zero();
    for l in lanes {
        acc = acc + l;
    }
    for i in chunks * 8..a.len() {
        acc = a[i].mul_add(b[i], acc);
    }
    acc
}

/// C[m×n] = A[m×k] · B[k×n].
pub fn matmul<T: Element>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        o_row.fill(T::zero());
        for (p, &av) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o = av.mul_add(bv, *o);
            }
        }
    }
}

/// C[m×k] = A[m×n] · B[k×n]ᵀ, reading B row-wise so no transpose is ever
/// materialized. This is the dA rule of matmul backward.
pub fn matmul_bt<T: Element>(a: &[T], b: &[T], m: usize, n: usize, k: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * k);
    for i in 0..m {
        let a_row = &a[i * n..(i + 1) * n];
        for p in 0..k {
            out[i * k + p] = dot(a_row, &b[p * n..(p + 1) * n]);
        }
    }
}

/// C[k×n] = A[m×k]ᵀ · G[m×n], accumulating row saxpys so no transpose is
/// ever materialized. This is the dB rule of matmul backward.
pub fn matmul_at<T: Element>(a: &[T], g: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(g.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    out.fill(T::zero());
    for i in 0..m {
        let g_row = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let o_row = &mut out[p * n..(p + 1) * n];
            for (o, &gv) in o_row.iter_mut().zip(g_row) {
                *o = av.mul_add(gv, *o);
            }
        }
    }
}

/// out[n×m] = in[m×n] transposed.
pub fn transpose<T: Element>(x: &[T], m: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(x.len(), m * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = x[i * n + j];
        }
    }
}

/// Valid cross-correlation, stride 1. Input is H×W×Cin row-major, kernels
/// are K×K×Cin×Cout, bias is Cout. Output is (H-K+1)×(W-K+1)×Cout.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward<T: Element>(
    input: &[T],
    kernels: &[T],
    bias: &[T],
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    cout: usize,
    out: &mut [T],
) {
    let oh = h - k + 1;
    let ow = w - k + 1;
    debug_assert_eq!(out.len(), oh * ow * cout);
    for oy in 0..oh {
        for ox in 0..ow {
            let acc = &mut out[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
            acc.copy_from_slice(bias);
            for ky in 0..k {
                let in_row = &input[((oy + ky) * w + ox) * cin..((oy + ky) * w + ox + k) * cin];
                let k_row = &kernels[ky * k * cin * cout..(ky + 1) * k * cin * cout];
                // in_row is the k*cin input window slice for this kernel row;
                // k_row is the matching k*cin runs of cout weights.
                for (i, &xv) in in_row.iter().enumerate() {
                    let w_run = &k_row[i * cout..(i + 1) * cout];
                    for (o, &wv) in acc.iter_mut().zip(w_run) {
                        *o = xv.mul_add(wv, *o);
                    }
                }
            }
        }
    }
}

/// Gradient of conv2d w.r.t. its input. Kernels are staged transposed to
/// [cout][k·k·cin] once so the inner loop is a contiguous saxpy into the
/// input window; exact zeros in grad_out (dead relu units upstream) are
/// skipped, which contributes exactly nothing and keeps the fixed order.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward_input<T: Element>(
    grad_out: &[T],
    kernels: &[T],
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    cout: usize,
    grad_in: &mut [T],
) {
    let oh = h - k + 1;
    let ow = w - k + 1;
    let plane = k * k * cin;
    let mut kt = vec![T::zero(); plane * cout];
    for idx in 0..plane {
        for co in 0..cout {
            kt[co * plane + idx] = kernels[idx * cout + co];
        }
    }
    for oy in 0..oh {
        for ox in 0..ow {
            let g = &grad_out[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
            for (co, &gv) in g.iter().enumerate() {
                if gv == T::zero() {
                    continue;
                }
                let ktc = &kt[co * plane..(co + 1) * plane];
                for ky in 0..k {
                    let gi_row =
                        &mut grad_in[((oy + ky) * w + ox) * cin..((oy + ky) * w + ox + k) * cin];
                    let kt_row = &ktc[ky * k * cin..(ky + 1) * k * cin];
                    for (gi, &wv) in gi_row.iter_mut().zip(kt_row) {
                        *gi = gv.mul_add(wv, *gi);
                    }
                }
            }
        }
    }
}

/// Gradients of conv2d w.r.t. kernels and bias. Each kernel coordinate
/// keeps its cout accumulator run in registers across one sweep of the
/// output grads.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward_params<T: Element>(
    grad_out: &[T],
    input: &[T],
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    cout: usize,
    grad_kernels: &mut [T],
    grad_bias: &mut [T],
) {
    let oh = h - k + 1;
    let ow = w - k + 1;
    for oy in 0..oh {
        for ox in 0..ow {
            let g = &grad_out[(oy * ow + ox) * cout..(oy * ow + ox + 1) * cout];
            for (gb, &gv) in grad_bias.iter_mut().zip(g) {
                *gb = *gb + gv;
            }
        }
    }
    for ky in 0..k {
        for kx in 0..k {
            for ci in 0..cin {
                let dk = &mut grad_kernels
                    [((ky * k + kx) * cin + ci) * cout..((ky * k + kx) * cin + ci + 1) * cout];
                for oy in 0..oh {
                    let in_base = ((oy + ky) * w + kx) * cin + ci;
                    let g_base = oy * ow * cout;
                    for ox in 0..ow {
                        let xv = input[in_base + ox * cin];
                        if xv == T::zero() {
                            continue;
                        }
                        let g = &grad_out[g_base + ox * cout..g_base + (ox + 1) * cout];
                        for (d, &gv) in dk.iter_mut().zip(g) {
                            *d = xv.mul_add(gv, *d);
                        }
                    }
                }
            }
        }
    }
}

/// 2×2 max pooling with stride 2; odd trailing row/column dropped.
/// Returns the flat input index of each window maximum (first occurrence in
/// scan order wins ties) so the backward pass can route gradients.
pub fn maxpool2_forward<T: Element>(
    input: &[T],
    h: usize,
    w: usize,
    c: usize,
    out: &mut [T],
    argmax: &mut [usize],
) {
    let oh = h / 2;
    let ow = w / 2;
    debug_assert_eq!(out.len(), oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((2 * oy) * w + 2 * ox) * c + ch;
                let mut best = input[best_idx];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (oy * ow + ox) * c + ch;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}
