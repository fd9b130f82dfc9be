//! Training loop, Adam optimizer, and evaluation metrics for the
//! satire classifiers.
//!
//! The trainer is deterministic: every shuffle and dropout draw derives
//! from the run seed, so one seed and one dataset give bit-identical
//! checkpoints. Evaluation thresholds the satire softmax probability at
//! 0.5 and reports accuracy, precision, recall, f1, and a tie-corrected
//! rank AUC, all as percentages.

mod config;
mod error;
mod metrics;
mod optim;
mod trainer;

pub use config::TrainConfig;
pub use error::{Result, TrainError};
pub use metrics::{
    auc_roc, evaluate, majority_baseline, misclassification_report, report_to_jsonl, Confusion,
    MetricsReport, MisclassifiedRecord, PredictionRecord, SpliceStats,
};
pub use optim::{adam_step, AdamState};
pub use trainer::{train, EpochStats, TrainHistory};
