// Sizes in vector literals spell out the H*W*C shape structure.
#![allow(clippy::identity_op)]

mod common;

use autodiff::{AttentionWeights, AutodiffError, ElementwiseKind, Graph, Tensor, LAYER_NORM_EPS};
use common::*;

fn leaf64(g: &mut Graph<f64>, data: Vec<f64>, shape: Vec<usize>) -> autodiff::NodeId {
    g.leaf(Tensor::from_vec(data, shape).unwrap())
}

#[test]
fn matmul_matches_triple_loop() {
    for (seed, (m, k, n)) in [
        (1, (1, 1, 1)),
        (2, (2, 3, 4)),
        (3, (5, 8, 3)),
        (4, (16, 16, 16)),
    ] {
        let a = rand_vec(seed, m * k, -2.0, 2.0);
        let b = rand_vec(seed + 100, k * n, -2.0, 2.0);
        let want = matmul_oracle(&a, &b, m, k, n);
        let mut g = Graph::new();
        let na = leaf64(&mut g, a, vec![m, k]);
        let nb = leaf64(&mut g, b, vec![k, n]);
        let out = g.matmul(na, nb).unwrap();
        assert_eq!(g.shape(out), &[m, n]);
        assert_close(g.value(out).data(), &want, 1e-12, "matmul");
    }
}

#[test]
fn matmul_rejects_mismatched_inner_dims() {
    let mut g = Graph::new();
    let a = leaf64(&mut g, vec![0.0; 6], vec![2, 3]);
    let b = leaf64(&mut g, vec![0.0; 8], vec![4, 2]);
    match g.matmul(a, b) {
        Err(AutodiffError::ShapeMismatch { lhs, rhs, .. }) => {
            assert_eq!(lhs, vec![2, 3]);
            assert_eq!(rhs, vec![4, 2]);
        }
        other => panic!("expected shape mismatch, got {other:?}"),
    }
}

#[test]
fn matmul_f32_tracks_f64_oracle() {
    let (m, k, n) = (7, 9, 5);
    let a = rand_vec(10, m * k, -1.0, 1.0);
    let b = rand_vec(11, k * n, -1.0, 1.0);
    let want = matmul_oracle(&a, &b, m, k, n);
    let mut g: Graph<f32> = Graph::new();
    let na = g.leaf(Tensor::from_vec(as_f32(&a), vec![m, k]).unwrap());
    let nb = g.leaf(Tensor::from_vec(as_f32(&b), vec![k, n]).unwrap());
    let out = g.matmul(na, nb).unwrap();
    let got: Vec<f64> = g.value(out).data().iter().map(|&v| v as f64).collect();
    assert_close(&got, &want, 1e-5, "matmul f32");
}

#[test]
fn conv2d_matches_nested_loops() {
    for (seed, (h, w, cin, k, cout)) in [
        (20, (6, 7, 2, 3, 4)),
        (21, (5, 5, 1, 1, 3)),
        (22, (4, 4, 3, 4, 2)),
        (23, (8, 3, 2, 3, 5)),
    ] {
        let input = rand_vec(seed, h * w * cin, -1.0, 1.0);
        let kernels = rand_vec(seed + 100, k * k * cin * cout, -1.0, 1.0);
        let bias = rand_vec(seed + 200, cout, -0.5, 0.5);
        let want = conv2d_oracle(&input, &kernels, &bias, h, w, cin, k, cout);
        let mut g = Graph::new();
        let ni = leaf64(&mut g, input, vec![h, w, cin]);
        let nk = leaf64(&mut g, kernels, vec![k, k, cin, cout]);
        let nb = leaf64(&mut g, bias, vec![cout]);
        let out = g.conv2d(ni, nk, nb).unwrap();
        assert_eq!(g.shape(out), &[h - k + 1, w - k + 1, cout]);
        assert_close(g.value(out).data(), &want, 1e-12, "conv2d");
    }
}

#[test]
fn conv2d_rejects_kernel_larger_than_input() {
    let mut g = Graph::new();
    let i = leaf64(&mut g, vec![0.0; 2 * 2 * 1], vec![2, 2, 1]);
    let k = leaf64(&mut g, vec![0.0; 3 * 3 * 1 * 1], vec![3, 3, 1, 1]);
    let b = leaf64(&mut g, vec![0.0], vec![1]);
    assert!(matches!(
        g.conv2d(i, k, b),
        Err(AutodiffError::ShapeMismatch { .. })
    ));
}

#[test]
fn conv2d_rejects_channel_mismatch() {
    let mut g = Graph::new();
    let i = leaf64(&mut g, vec![0.0; 4 * 4 * 2], vec![4, 4, 2]);
    let k = leaf64(&mut g, vec![0.0; 3 * 3 * 3 * 1], vec![3, 3, 3, 1]);
    let b = leaf64(&mut g, vec![0.0], vec![1]);
    assert!(g.conv2d(i, k, b).is_err());
}

#[test]
fn maxpool2_matches_oracle_and_drops_odd_edges() {
    for (seed, (h, w, c)) in [(30, (6, 6, 3)), (31, (7, 5, 2)), (32, (2, 2, 1))] {
        let input = rand_vec(seed, h * w * c, -3.0, 3.0);
        let want = maxpool2_oracle(&input, h, w, c);
        let mut g = Graph::new();
        let ni = leaf64(&mut g, input, vec![h, w, c]);
        let out = g.maxpool2(ni).unwrap();
        assert_eq!(g.shape(out), &[h / 2, w / 2, c]);
        assert_close(g.value(out).data(), &want, 0.0, "maxpool2");
    }
}

#[test]
fn softmax_rows_matches_oracle_and_sums_to_one() {
    let (m, n) = (4, 6);
    let x = rand_vec(40, m * n, -4.0, 4.0);
    let mut g = Graph::new();
    let nx = leaf64(&mut g, x.clone(), vec![m, n]);
    let out = g.softmax_rows(nx, None).unwrap();
    let want = softmax_rows_oracle(&x, m, n, None);
    assert_close(g.value(out).data(), &want, 1e-12, "softmax");
    for row in g.value(out).data().chunks_exact(n) {
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn masked_softmax_zeroes_masked_columns() {
    let (m, n) = (3, 5);
    let x = rand_vec(41, m * n, -2.0, 2.0);
    let mask = vec![true, false, true, true, false];
    let mut g = Graph::new();
    let nx = leaf64(&mut g, x.clone(), vec![m, n]);
    let out = g.softmax_rows(nx, Some(&mask)).unwrap();
    let want = softmax_rows_oracle(&x, m, n, Some(&mask));
    assert_close(g.value(out).data(), &want, 1e-12, "masked softmax");
    for row in g.value(out).data().chunks_exact(n) {
        assert_eq!(row[1], 0.0);
        assert_eq!(row[4], 0.0);
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fully_masked_softmax_is_a_numeric_error() {
    let mut g = Graph::new();
    let nx = leaf64(&mut g, vec![1.0, 2.0], vec![1, 2]);
    assert!(matches!(
        g.softmax_rows(nx, Some(&[false, false])),
        Err(AutodiffError::Numeric(_))
    ));
}

#[test]
fn layer_norm_matches_direct_formula() {
    let (l, d) = (5, 8);
    let x = rand_vec(50, l * d, -2.0, 2.0);
    let gain = rand_vec(51, d, 0.5, 1.5);
    let shift = rand_vec(52, d, -0.5, 0.5);
    let want = layer_norm_oracle(&x, &gain, &shift, l, d, LAYER_NORM_EPS);
    let mut g = Graph::new();
    let nx = leaf64(&mut g, x, vec![l, d]);
    let ng = leaf64(&mut g, gain, vec![d]);
    let ns = leaf64(&mut g, shift, vec![d]);
    let out = g.layer_norm(nx, ng, ns).unwrap();
    assert_close(g.value(out).data(), &want, 1e-12, "layer_norm");
}

#[test]
fn cross_entropy_matches_log_sum_exp() {
    let (n, c) = (6, 3);
    let logits = rand_vec(60, n * c, -3.0, 3.0);
    let labels = [0usize, 2, 1, 1, 0, 2];
    let want = cross_entropy_oracle(&logits, &labels, n, c);
    let mut g = Graph::new();
    let nl = leaf64(&mut g, logits, vec![n, c]);
    let loss = g.softmax_cross_entropy(nl, &labels).unwrap();
    assert!((g.scalar_value(loss) - want).abs() < 1e-12);
}

#[test]
fn cross_entropy_rejects_out_of_range_label() {
    let mut g = Graph::new();
    let nl = leaf64(&mut g, vec![0.0; 4], vec![2, 2]);
    assert!(matches!(
        g.softmax_cross_entropy(nl, &[0, 2]),
        Err(AutodiffError::Data(_))
    ));
}

#[test]
fn attention_matches_per_head_loop() {
    let (l, d, heads) = (5, 8, 2);
    let x = rand_vec(70, l * d, -1.0, 1.0);
    let wq = rand_vec(71, d * d, -0.5, 0.5);
    let wk = rand_vec(72, d * d, -0.5, 0.5);
    let wv = rand_vec(73, d * d, -0.5, 0.5);
    let wo = rand_vec(74, d * d, -0.5, 0.5);
    let want = attention_oracle(&x, &x, &x, l, l, d, heads, &wq, &wk, &wv, &wo, None);

    let mut g = Graph::new();
    let nx = leaf64(&mut g, x, vec![l, d]);
    let weights = AttentionWeights {
        wq: leaf64(&mut g, wq, vec![d, d]),
        wk: leaf64(&mut g, wk, vec![d, d]),
        wv: leaf64(&mut g, wv, vec![d, d]),
        wo: leaf64(&mut g, wo, vec![d, d]),
    };
    let out = autodiff::multi_head_attention(&mut g, nx, nx, nx, &weights, heads, None).unwrap();
    assert_eq!(g.shape(out.output), &[l, d]);
    assert_eq!(out.head_weights.len(), heads);
    assert_close(g.value(out.output).data(), &want, 1e-12, "self attention");
}

#[test]
fn cross_attention_with_key_mask_matches_oracle() {
    let (lq, lk, d, heads) = (3, 6, 8, 4);
    let q = rand_vec(80, lq * d, -1.0, 1.0);
    let kv = rand_vec(81, lk * d, -1.0, 1.0);
    let wq = rand_vec(82, d * d, -0.5, 0.5);
    let wk = rand_vec(83, d * d, -0.5, 0.5);
    let wv = rand_vec(84, d * d, -0.5, 0.5);
    let wo = rand_vec(85, d * d, -0.5, 0.5);
    let mask = vec![true, true, true, true, false, false];
    let want = attention_oracle(
        &q,
        &kv,
        &kv,
        lq,
        lk,
        d,
        heads,
        &wq,
        &wk,
        &wv,
        &wo,
        Some(&mask),
    );

    let mut g = Graph::new();
    let nq = leaf64(&mut g, q, vec![lq, d]);
    let nkv = leaf64(&mut g, kv, vec![lk, d]);
    let weights = AttentionWeights {
        wq: leaf64(&mut g, wq, vec![d, d]),
        wk: leaf64(&mut g, wk, vec![d, d]),
        wv: leaf64(&mut g, wv, vec![d, d]),
        wo: leaf64(&mut g, wo, vec![d, d]),
    };
    let out =
        autodiff::multi_head_attention(&mut g, nq, nkv, nkv, &weights, heads, Some(&mask)).unwrap();
    assert_eq!(g.shape(out.output), &[lq, d]);
    assert_close(g.value(out.output).data(), &want, 1e-12, "cross attention");
    // Masked keys must get zero weight in every head.
    for hw in &out.head_weights {
        for row in g.value(*hw).data().chunks_exact(lk) {
            assert_eq!(row[4], 0.0);
            assert_eq!(row[5], 0.0);
        }
    }
}

#[test]
fn attention_rejects_indivisible_head_count() {
    let mut g = Graph::new();
    let x = leaf64(&mut g, vec![0.0; 6], vec![1, 6]);
    let w = AttentionWeights {
        wq: leaf64(&mut g, vec![0.0; 36], vec![6, 6]),
        wk: leaf64(&mut g, vec![0.0; 36], vec![6, 6]),
        wv: leaf64(&mut g, vec![0.0; 36], vec![6, 6]),
        wo: leaf64(&mut g, vec![0.0; 36], vec![6, 6]),
    };
    assert!(matches!(
        autodiff::multi_head_attention(&mut g, x, x, x, &w, 4, None),
        Err(AutodiffError::Config(_))
    ));
}

#[test]
fn structural_ops_roundtrip() {
    let (m, n) = (4, 6);
    let x = rand_vec(90, m * n, -1.0, 1.0);
    let mut g = Graph::new();
    let nx = leaf64(&mut g, x.clone(), vec![m, n]);

    let t = g.transpose(nx).unwrap();
    let tt = g.transpose(t).unwrap();
    assert_eq!(g.value(tt).data(), &x[..]);

    let left = g.slice_cols(nx, 0, 2).unwrap();
    let right = g.slice_cols(nx, 2, 4).unwrap();
    let joined = g.concat_cols(&[left, right]).unwrap();
    assert_eq!(g.value(joined).data(), &x[..]);

    let top = g.slice_rows(nx, 0, 1).unwrap();
    assert_eq!(g.value(top).data(), &x[..n]);

    let r = g.reshape(nx, vec![n, m]).unwrap();
    assert_eq!(g.value(r).data(), &x[..]);
    assert!(g.reshape(nx, vec![5, 5]).is_err());

    let mean = g.mean_rows(nx).unwrap();
    let mut want = vec![0.0; n];
    for row in x.chunks_exact(n) {
        for (o, &v) in want.iter_mut().zip(row) {
            *o += v / m as f64;
        }
    }
    assert_close(g.value(mean).data(), &want, 1e-12, "mean_rows");

    let total = g.sum_all(nx);
    assert!((g.scalar_value(total) - x.iter().sum::<f64>()).abs() < 1e-12);
}

#[test]
fn gather_rows_looks_up_and_validates() {
    let table = rand_vec(95, 5 * 3, -1.0, 1.0);
    let mut g = Graph::new();
    let nt = leaf64(&mut g, table.clone(), vec![5, 3]);
    let out = g.gather_rows(nt, &[4, 0, 4]).unwrap();
    assert_eq!(g.shape(out), &[3, 3]);
    assert_eq!(&g.value(out).data()[0..3], &table[12..15]);
    assert_eq!(&g.value(out).data()[3..6], &table[0..3]);
    assert!(matches!(
        g.gather_rows(nt, &[5]),
        Err(AutodiffError::Data(_))
    ));
}

#[test]
fn elementwise_dispatcher_enforces_arity() {
    let mut g = Graph::new();
    let a = leaf64(&mut g, vec![1.0, -2.0], vec![1, 2]);
    let b = leaf64(&mut g, vec![3.0, 4.0], vec![1, 2]);
    let sum = g.elementwise(ElementwiseKind::Add, a, Some(b)).unwrap();
    assert_eq!(g.value(sum).data(), &[4.0, 2.0]);
    let prod = g.elementwise(ElementwiseKind::Mul, a, Some(b)).unwrap();
    assert_eq!(g.value(prod).data(), &[3.0, -8.0]);
    let r = g.elementwise(ElementwiseKind::Relu, a, None).unwrap();
    assert_eq!(g.value(r).data(), &[1.0, 0.0]);
    let t = g.elementwise(ElementwiseKind::Tanh, a, None).unwrap();
    assert!((g.value(t).data()[0] - 1.0f64.tanh()).abs() < 1e-15);
    assert!(g.elementwise(ElementwiseKind::Relu, a, Some(b)).is_err());
    assert!(g.elementwise(ElementwiseKind::Add, a, None).is_err());
}

#[test]
fn add_rejects_shape_mismatch() {
    let mut g = Graph::new();
    let a = leaf64(&mut g, vec![0.0; 6], vec![2, 3]);
    let b = leaf64(&mut g, vec![0.0; 6], vec![3, 2]);
    assert!(matches!(
        g.add(a, b),
        Err(AutodiffError::ShapeMismatch { .. })
    ));
}
