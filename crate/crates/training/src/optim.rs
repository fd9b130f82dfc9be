use autodiff::{Element, ParamStore};

use crate::config::TrainConfig;
use crate::error::{Result, TrainError};

/// First and second moment estimates, one slot per parameter tensor in
/// store registration order.
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    pub step: usize,
}

impl<T: Element> AdamState<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        let zeros: Vec<Vec<T>> = store
            .iter()
            .map(|(_, _, tensor)| vec![T::zero(); tensor.data().len()])
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update over the whole store. `grads` is
/// aligned with store registration order; a `None` slot (frozen or
/// unused parameter) leaves both the tensor and its moments untouched.
pub fn adam_step<T: Element>(
    store: &mut ParamStore<T>,
    grads: &[Option<Vec<T>>],
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    let ids: Vec<_> = store.ids().collect();
    if grads.len() != ids.len() || state.m.len() != ids.len() {
        return Err(TrainError::Config(format!(
            "optimizer state covers {} tensors, store has {}",
            state.m.len().min(grads.len()),
            ids.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let corr1 = T::of_f64(1.0 - cfg.beta1.powi(t));
    let corr2 = T::of_f64(1.0 - cfg.beta2.powi(t));
    let (b1, b2) = (T::of_f64(cfg.beta1), T::of_f64(cfg.beta2));
    let (one_m_b1, one_m_b2) = (T::of_f64(1.0 - cfg.beta1), T::of_f64(1.0 - cfg.beta2));
    let (lr, eps) = (T::of_f64(cfg.lr), T::of_f64(cfg.epsilon));

    for (slot, id) in ids.into_iter().enumerate() {
        let Some(grad) = &grads[slot] else { continue };
        let tensor = store.tensor(id);
        if grad.len() != tensor.data().len() {
            return Err(TrainError::Config(format!(
                "gradient for {} holds {} values, tensor has {}",
                store.name(id),
                grad.len(),
                tensor.data().len()
            )));
        }
        if let Some(bad) = grad.iter().find(|g| !g.as_f64().is_finite()) {
            return Err(TrainError::Numeric(format!(
                "non-finite gradient {} for parameter {}",
                bad.as_f64(),
                store.name(id)
            )));
        }
        let m = &mut state.m[slot];
        let v = &mut state.v[slot];
        let data = store.tensor_mut(id).data_mut();
        for i in 0..data.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + one_m_b1 * g;
            v[i] = b2 * v[i] + one_m_b2 * g * g;
            let m_hat = m[i] / corr1;
            let v_hat = v[i] / corr2;
            data[i] = data[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
