use autodiff::{Element, Graph};
use models::{Model, Sample};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::error::{Result, TrainError};
use crate::optim::{adam_step, AdamState};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean cross-entropy over the epoch's samples (nats).
    pub loss: f64,
    /// Training accuracy as a percentage, under the shuffled order and
    /// the dropout masks actually used for the updates.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// Fixed-width per-epoch table, one row per epoch.
    pub fn to_table(&self) -> String {
        let mut out = String::from("epoch  loss      train_acc\n");
        for (i, e) in self.epochs.iter().enumerate() {
            out.push_str(&format!(
                "{:<5}  {:<8.4}  {:.2}\n",
                i + 1,
                e.loss,
                e.accuracy
            ));
        }
        out
    }
}

/// splitmix64; the per-sample dropout streams and per-epoch shuffles are
/// all derived from (seed, epoch, index) through it, so a run is fully
/// determined by the config seed.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn stream_seed(seed: u64, epoch: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ epoch) ^ index)
}

pub(crate) fn argmax(row: &[impl Element]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Minibatch training with a fresh seeded shuffle each epoch. Every
/// sample contributes every epoch; the final short batch is kept and its
/// gradient averaged over its actual size.
pub fn train<T: Element>(
    model: &mut dyn Model<T>,
    samples: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(TrainError::Data("training set is empty".into()));
    }
    let ids: Vec<_> = model.store().ids().collect();
    let trainable: Vec<bool> = ids
        .iter()
        .map(|&id| model.trainable(model.store().name(id)))
        .collect();
    let mut state = AdamState::new(model.store());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = TrainHistory { epochs: Vec::new() };

    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, epoch as u64, 0));
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Vec<Option<Vec<T>>> = ids
                .iter()
                .zip(&trainable)
                .map(|(&id, &on)| {
                    on.then(|| vec![T::zero(); model.store().tensor(id).data().len()])
                })
                .collect();

            for &idx in batch {
                let sample = &samples[idx];
                let mut g = Graph::new();
                let bound = model.store().bind(&mut g);
                let mut drop_rng =
                    ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, epoch as u64, 1 + idx as u64));
                let logits = model.forward(&mut g, &bound, sample, Some(&mut drop_rng))?;
                let loss = g.softmax_cross_entropy(logits, &[sample.label])?;
                g.backward(loss)?;
                let loss_value = g.scalar_value(loss).as_f64();
                if !loss_value.is_finite() {
                    return Err(TrainError::Numeric(format!(
                        "loss became {loss_value} on sample {} (epoch {})",
                        sample.id,
                        epoch + 1
                    )));
                }
                epoch_loss += loss_value;
                if argmax(g.value(logits).data()) == sample.label {
                    correct += 1;
                }
                for (slot, &id) in ids.iter().enumerate() {
                    let Some(acc_slot) = &mut acc[slot] else {
                        continue;
                    };
                    if let Some(grad) = model.store().grad_of(&g, &bound, id) {
                        for (a, &gv) in acc_slot.iter_mut().zip(grad) {
                            *a = *a + gv;
                        }
                    }
                }
            }

            let inv = T::of_f64(1.0 / batch.len() as f64);
            for slot in acc.iter_mut().flatten() {
                for a in slot.iter_mut() {
                    *a = *a * inv;
                }
            }
            adam_step(model.store_mut(), &acc, &mut state, cfg)?;
        }

        history.epochs.push(EpochStats {
            loss: epoch_loss / samples.len() as f64,
            accuracy: 100.0 * correct as f64 / samples.len() as f64,
        });
    }
    Ok(history)
}
