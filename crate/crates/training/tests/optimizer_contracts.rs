use autodiff::{ParamStore, Tensor};
use training::{adam_step, AdamState, TrainConfig, TrainError};

fn store_with(name: &str, values: Vec<f64>) -> ParamStore<f64> {
    let mut store = ParamStore::new(0);
    let shape = vec![values.len()];
    store
        .from_tensor(name, Tensor::from_vec(values, shape).unwrap())
        .unwrap();
    store
}

fn cfg(lr: f64) -> TrainConfig {
    TrainConfig {
        lr,
        ..TrainConfig::toy("text")
    }
}

#[test]
fn first_step_moves_by_the_signed_learning_rate() {
    let mut store = store_with("w", vec![1.0, -2.0, 0.5]);
    let mut state = AdamState::new(&store);
    let grads = vec![Some(vec![0.3, -0.7, 0.0])];
    adam_step(&mut store, &grads, &mut state, &cfg(0.1)).unwrap();

    let id = store.ids().next().unwrap();
    let w = store.tensor(id).data();
    // Bias correction makes the first update lr * g / (|g| + eps'), so
    // any nonzero gradient moves its weight by almost exactly lr.
    assert!((w[0] - 0.9).abs() < 1e-6, "got {}", w[0]);
    assert!((w[1] - -1.9).abs() < 1e-6, "got {}", w[1]);
    assert_eq!(w[2], 0.5, "zero gradient must leave the weight exactly");
    assert_eq!(state.step, 1);
}

#[test]
fn all_zero_gradients_change_nothing() {
    let mut store = store_with("w", vec![0.25, -1.5, 3.0, 0.0]);
    let before: Vec<f64> = {
        let id = store.ids().next().unwrap();
        store.tensor(id).data().to_vec()
    };
    let mut state = AdamState::new(&store);
    let grads = vec![Some(vec![0.0; 4])];
    adam_step(&mut store, &grads, &mut state, &cfg(0.1)).unwrap();

    let id = store.ids().next().unwrap();
    assert_eq!(store.tensor(id).data(), &before[..]);
}

#[test]
fn quadratic_bowl_converges_under_the_default_constants() {
    let mut store = store_with("w", vec![5.0, -3.0]);
    let mut state = AdamState::new(&store);
    let cfg = cfg(0.01);
    let id = store.ids().next().unwrap();
    for _ in 0..2000 {
        // Gradient of the bowl 0.5 * |w|^2 is w itself.
        let g = store.tensor(id).data().to_vec();
        adam_step(&mut store, &[Some(g)], &mut state, &cfg).unwrap();
    }
    let w = store.tensor(id).data();
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    assert!(norm < 1e-3, "|w| = {norm} after 2000 steps");
}

#[test]
fn non_finite_gradients_name_the_parameter() {
    let mut store = store_with("conv0.kernels", vec![1.0, 2.0]);
    let mut state = AdamState::new(&store);
    let grads = vec![Some(vec![0.1, f64::NAN])];
    let err = adam_step(&mut store, &grads, &mut state, &cfg(0.1)).unwrap_err();
    match err {
        TrainError::Numeric(msg) => {
            assert!(msg.contains("conv0.kernels"), "message was: {msg}")
        }
        other => panic!("expected a numeric error, got {other}"),
    }
}

#[test]
fn absent_gradient_slots_freeze_their_tensors() {
    let mut store = ParamStore::new(0);
    let frozen = store
        .from_tensor("enc.w", Tensor::from_vec(vec![1.0, 2.0], vec![2]).unwrap())
        .unwrap();
    let live = store
        .from_tensor("head.w", Tensor::from_vec(vec![3.0, 4.0], vec![2]).unwrap())
        .unwrap();
    let mut state = AdamState::new(&store);
    let grads = vec![None, Some(vec![1.0, -1.0])];
    adam_step(&mut store, &grads, &mut state, &cfg(0.1)).unwrap();

    assert_eq!(store.tensor(frozen).data(), &[1.0, 2.0]);
    let head = store.tensor(live).data();
    assert!(head[0] < 3.0 && head[1] > 4.0, "head must move: {head:?}");
}

#[test]
fn misaligned_gradients_are_a_config_error() {
    let mut store = store_with("w", vec![1.0]);
    let mut state = AdamState::new(&store);
    let err = adam_step(&mut store, &[], &mut state, &cfg(0.1)).unwrap_err();
    assert!(matches!(err, TrainError::Config(_)), "got {err}");

    let short = vec![Some(vec![1.0, 2.0])];
    let err = adam_step(&mut store, &short, &mut state, &cfg(0.1)).unwrap_err();
    assert!(matches!(err, TrainError::Config(_)), "got {err}");
}

#[test]
fn presets_carry_the_documented_rates_and_epochs() {
    let paper_cnn = TrainConfig::paper("elacnn");
    assert_eq!((paper_cnn.lr, paper_cnn.epochs), (1e-5, 7));
    let paper_coattn = TrainConfig::paper("coattn");
    assert_eq!((paper_coattn.lr, paper_coattn.epochs), (5e-6, 12));

    let toy_cnn = TrainConfig::toy("elacnn");
    assert_eq!((toy_cnn.lr, toy_cnn.epochs), (1e-4, 7));
    let toy_text = TrainConfig::toy("text");
    assert_eq!((toy_text.lr, toy_text.epochs), (1e-3, 12));

    for cfg in [paper_cnn, paper_coattn, toy_cnn, toy_text] {
        assert_eq!(cfg.batch_size, 32);
        assert_eq!((cfg.beta1, cfg.beta2, cfg.epsilon), (0.9, 0.999, 1e-8));
        cfg.validate().unwrap();
    }
}

#[test]
fn validate_rejects_degenerate_settings() {
    let bad = [
        TrainConfig {
            lr: 0.0,
            ..TrainConfig::toy("text")
        },
        TrainConfig {
            epochs: 0,
            ..TrainConfig::toy("text")
        },
        TrainConfig {
            batch_size: 0,
            ..TrainConfig::toy("text")
        },
        TrainConfig {
            beta1: 1.0,
            ..TrainConfig::toy("text")
        },
        TrainConfig {
            epsilon: 0.0,
            ..TrainConfig::toy("text")
        },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(TrainError::Config(_))));
    }
}
