mod common;

use autodiff::{Graph, ParamStore};
use common::*;
use models::{
    build_model, coattention_block, CoattnBlockParams, CoattnModel, FusionKind, FusionModel,
    ImageModel, Model, ModelConfig, ModelError, StreamConfig,
};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Padded positions may hold any token id: the mask must keep them out of
/// every attention sum that reaches the cls state.
#[test]
fn padding_tokens_never_reach_the_logits() {
    let cfg = mini_config();
    let model = build_model::<f64>("text", &cfg, VOCAB, 21).unwrap();
    let mut a = full_sample(1, &cfg);
    let mut b = a.clone();
    let real = a.mask.iter().filter(|&&m| m).count();
    assert!(real < cfg.max_len, "fixture must include padding");
    for i in real..cfg.max_len {
        a.tokens[i] = corpus::PAD_ID;
        b.tokens[i] = 3 + (i % (VOCAB - 3));
    }
    assert_eq!(
        logits_f64(model.as_ref(), &a, None),
        logits_f64(model.as_ref(), &b, None),
    );
}

/// Without position embeddings the region encoder is a set function:
/// reordering the patch blocks of the image permutes the states and
/// leaves the mean-pooled logits unchanged.
#[test]
fn region_order_is_meaningless_without_positions() {
    let cfg = mini_config();
    let grid = cfg.grid;
    let img = patchwork_image(77);
    let perm: Vec<usize> = (0..grid * grid).rev().collect();
    let permuted = permute_patches(&img, grid, &perm);

    let mut a = full_sample(1, &cfg);
    a.regions = Some(corpus::patch_features(&img, grid, grid).unwrap());
    let mut b = a.clone();
    b.regions = Some(corpus::patch_features(&permuted, grid, grid).unwrap());

    let model = ImageModel::<f64>::new(&cfg, 31).unwrap();
    let la = logits_f64(&model, &a, None);
    let lb = logits_f64(&model, &b, None);
    assert!(max_abs_diff(&la, &lb) < 1e-9, "{la:?} vs {lb:?}");

    let mut g = Graph::new();
    let bound = Model::store(&model).bind(&mut g);
    let sa = model
        .encoder()
        .states(&mut g, &bound, a.regions.as_ref().unwrap(), None)
        .unwrap();
    let sb = model
        .encoder()
        .states(&mut g, &bound, b.regions.as_ref().unwrap(), None)
        .unwrap();
    let d = cfg.stream.d_v;
    let (va, vb) = (g.value(sa).data().to_vec(), g.value(sb).data().to_vec());
    for (i, &j) in perm.iter().enumerate() {
        let row_b = &vb[i * d..(i + 1) * d];
        let row_a = &va[j * d..(j + 1) * d];
        assert!(
            max_abs_diff(row_a, row_b) < 1e-9,
            "state row {i} does not track its patch"
        );
    }
}

#[test]
fn position_embeddings_make_region_order_matter() {
    let cfg = ModelConfig {
        stream: StreamConfig {
            visual_positions: true,
            ..mini_config().stream
        },
        ..mini_config()
    };
    let grid = cfg.grid;
    let img = patchwork_image(78);
    let perm: Vec<usize> = (0..grid * grid).rev().collect();
    let mut a = full_sample(1, &cfg);
    a.regions = Some(corpus::patch_features(&img, grid, grid).unwrap());
    let mut b = a.clone();
    b.regions =
        Some(corpus::patch_features(&permute_patches(&img, grid, &perm), grid, grid).unwrap());
    let model = ImageModel::<f64>::new(&cfg, 31).unwrap();
    assert_ne!(logits_f64(&model, &a, None), logits_f64(&model, &b, None),);
}

/// Late fusion joins the streams only at the head, so the text states
/// must be bit-identical across different images; the co-attentive model
/// must instead propagate an image change into the text stream.
#[test]
fn only_coattention_lets_the_image_reshape_the_text_stream() {
    let cfg = mini_config();
    let a = full_sample(40, &cfg);
    let mut b = a.clone();
    b.regions = Some(corpus::patch_features(&patchwork_image(41), cfg.grid, cfg.grid).unwrap());

    let fusion = FusionModel::<f64>::new(&cfg, VOCAB, 5, FusionKind::ConcatMlp).unwrap();
    let mut g = Graph::new();
    let bound = Model::store(&fusion).bind(&mut g);
    let ta = fusion.text_states(&mut g, &bound, &a, None).unwrap();
    let tb = fusion.text_states(&mut g, &bound, &b, None).unwrap();
    assert_eq!(g.value(ta).data(), g.value(tb).data());
    assert_ne!(
        logits_f64(&fusion, &a, None),
        logits_f64(&fusion, &b, None),
        "the image stream must still reach the fused logits"
    );

    let coattn = CoattnModel::<f64>::new(&cfg, VOCAB, 5).unwrap();
    let mut g = Graph::new();
    let bound = Model::store(&coattn).bind(&mut g);
    let (_, ta) = coattn.stream_states(&mut g, &bound, &a, None).unwrap();
    let (_, tb) = coattn.stream_states(&mut g, &bound, &b, None).unwrap();
    assert_ne!(
        g.value(ta).data(),
        g.value(tb).data(),
        "co-attention must carry image evidence into the text states"
    );
}

#[test]
fn cross_attention_weights_are_row_stochastic() {
    let d = 16;
    let (l, r) = (6, 9);
    let heads = 4;
    let mut store = ParamStore::<f64>::new(9);
    let block = CoattnBlockParams::register(&mut store, "co0", d).unwrap();
    let v0 = store
        .from_tensor(
            "v0",
            autodiff::Tensor::from_vec(
                (0..r * d)
                    .map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0)
                    .collect(),
                vec![r, d],
            )
            .unwrap(),
        )
        .unwrap();
    let t0 = store
        .from_tensor(
            "t0",
            autodiff::Tensor::from_vec(
                (0..l * d)
                    .map(|i| ((i * 53 % 13) as f64 - 6.0) / 9.0)
                    .collect(),
                vec![l, d],
            )
            .unwrap(),
        )
        .unwrap();
    let mask: Vec<bool> = (0..l).map(|i| i < 4).collect();

    let mut g = Graph::new();
    let bound = store.bind(&mut g);
    let out = coattention_block(
        &mut g,
        &bound,
        bound.node(v0),
        bound.node(t0),
        &block,
        heads,
        Some(&mask),
        0.0,
        None,
    )
    .unwrap();

    assert_eq!(out.v_weights.len(), heads);
    assert_eq!(out.t_weights.len(), heads);
    for (ids, rows, cols) in [(&out.v_weights, r, l), (&out.t_weights, l, r)] {
        for &w in ids {
            assert_eq!(g.shape(w), &[rows, cols]);
            let data = g.value(w).data();
            for row in 0..rows {
                let sum: f64 = data[row * cols..(row + 1) * cols].iter().sum();
                assert!((sum - 1.0).abs() < 1e-5, "row {row} sums to {sum}");
            }
        }
    }
    for &w in &out.v_weights {
        let data = g.value(w).data();
        for row in 0..r {
            for col in 4..l {
                assert_eq!(data[row * l + col], 0.0, "masked text key attended");
            }
        }
    }
}

#[test]
fn equal_width_requirements_are_enforced() {
    let cfg = ModelConfig {
        stream: StreamConfig {
            d_v: 32,
            d_t: 64,
            ..mini_config().stream
        },
        ..mini_config()
    };
    assert!(matches!(
        CoattnModel::<f32>::new(&cfg, VOCAB, 1),
        Err(ModelError::Config(_))
    ));
    assert!(matches!(
        FusionModel::<f32>::new(&cfg, VOCAB, 1, FusionKind::Average),
        Err(ModelError::Config(_))
    ));
    assert!(matches!(
        FusionModel::<f32>::new(&cfg, VOCAB, 1, FusionKind::ElementwiseProduct),
        Err(ModelError::Config(_))
    ));
    // Concatenation handles unequal widths; nothing to project.
    let model = FusionModel::<f64>::new(&cfg, VOCAB, 1, FusionKind::ConcatMlp).unwrap();
    let sample = full_sample(2, &cfg);
    logits_f64(&model, &sample, None);
}

/// With all-zero error levels and all-zero biases every convolution,
/// activation, and linear layer maps zero to zero.
#[test]
fn elacnn_propagates_exact_zeros() {
    let cfg = mini_config();
    let mut model = build_model::<f64>("elacnn", &cfg, VOCAB, 17).unwrap();
    let ids: Vec<_> = model.store().ids().collect();
    for id in ids {
        let name = model.store().name(id).to_string();
        if name.ends_with(".bias") || name.ends_with(".b") {
            model.store_mut().tensor_mut(id).data_mut().fill(0.0);
        }
    }
    let mut sample = full_sample(1, &cfg);
    sample.ela = Some(vec![0.0; 128 * 128 * 3]);
    assert_eq!(logits_f64(model.as_ref(), &sample, None), vec![0.0, 0.0]);
}

#[test]
fn elacnn_rejects_a_misshapen_error_channel() {
    let cfg = mini_config();
    let model = build_model::<f64>("elacnn", &cfg, VOCAB, 17).unwrap();
    let mut sample = full_sample(1, &cfg);
    sample.ela = Some(vec![0.0; 64 * 64 * 3]);
    let mut g = Graph::new();
    let bound = model.store().bind(&mut g);
    assert!(matches!(
        model.forward(&mut g, &bound, &sample, None),
        Err(ModelError::Data(_))
    ));
}
