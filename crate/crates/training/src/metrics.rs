use std::collections::HashMap;
use std::fs;
use std::path::Path;

use autodiff::{Element, Graph};
use corpus::{Article, SpliceEntry};
use jpeg_ela::{ela, ela_region_stats, jpeg_decode, rect_mask};
use models::{Model, Sample};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Percentages throughout; satire is the positive class. Precision,
/// recall, and f1 are absent when undefined, mirroring the em-dash rows
/// of published results tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub auc_roc: f64,
    pub confusion: Confusion,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl MetricsReport {
    pub fn from_parts(confusion: Confusion, auc_roc: f64) -> Result<Self> {
        let total = confusion.total();
        if total == 0 {
            return Err(TrainError::Data("empty confusion matrix".into()));
        }
        let accuracy = 100.0 * (confusion.tp + confusion.tn) as f64 / total as f64;
        let precision = (confusion.tp + confusion.fp > 0)
            .then(|| 100.0 * confusion.tp as f64 / (confusion.tp + confusion.fp) as f64);
        let recall = (confusion.tp + confusion.fn_ > 0)
            .then(|| 100.0 * confusion.tp as f64 / (confusion.tp + confusion.fn_) as f64);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Ok(MetricsReport {
            accuracy,
            precision,
            recall,
            f1,
            auc_roc,
            confusion,
        })
    }

    fn rounded(&self) -> MetricsReport {
        MetricsReport {
            accuracy: round2(self.accuracy),
            precision: self.precision.map(round2),
            recall: self.recall.map(round2),
            f1: self.f1.map(round2),
            auc_roc: round2(self.auc_roc),
            confusion: self.confusion,
        }
    }

    /// Plain-text record: one `name value` line per metric, two-decimal
    /// fixed point, absent values printed as an em dash, then the four
    /// confusion counts.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.2}"),
            None => "\u{2014}".to_string(),
        };
        format!(
            "accuracy {:.2}\nprecision {}\nrecall {}\nf1 {}\nauc_roc {:.2}\ntp {}\nfp {}\ntn {}\nfn {}\n",
            self.accuracy,
            opt(self.precision),
            opt(self.recall),
            opt(self.f1),
            self.auc_roc,
            self.confusion.tp,
            self.confusion.fp,
            self.confusion.tn,
            self.confusion.fn_,
        )
    }

    /// Machine-readable form of the same report, values rounded to the
    /// two decimals the text record shows.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rounded()).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Tie-corrected rank statistic: (concordant pairs + half the tied
/// pairs) / (n_pos * n_neg), as a percentage. Computed from average
/// ranks, which is the same sum without enumerating pairs.
pub fn auc_roc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(TrainError::Config(format!(
            "{} scores against {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(TrainError::Numeric(format!("non-finite score {bad}")));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::Data(format!(
            "auc-roc needs both classes; got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j averaged across the tie group.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(100.0 * u / (n_pos * n_neg) as f64)
}

/// One test sample's outcome, kept for the misclassification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub label: usize,
    pub predicted: usize,
    pub satire_prob: f64,
}

fn confusion_of(records: &[PredictionRecord]) -> Confusion {
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for r in records {
        match (r.label == 1, r.predicted == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

/// Score every test sample with the satire softmax probability,
/// threshold at 0.5 (strictly above predicts satire) for the confusion
/// matrix, and take AUC from the continuous scores.
pub fn evaluate<T: Element>(
    model: &dyn Model<T>,
    samples: &[Sample],
) -> Result<(MetricsReport, Vec<PredictionRecord>)> {
    if samples.is_empty() {
        return Err(TrainError::Data("test set is empty".into()));
    }
    let mut records = Vec::with_capacity(samples.len());
    for sample in samples {
        let mut g = Graph::new();
        let bound = model.store().bind(&mut g);
        let logits = model.forward(&mut g, &bound, sample, None)?;
        let row = g.value(logits).data();
        let (l0, l1) = (row[0].as_f64(), row[1].as_f64());
        if !l0.is_finite() || !l1.is_finite() {
            return Err(TrainError::Numeric(format!(
                "non-finite logits on sample {}",
                sample.id
            )));
        }
        let satire_prob = 1.0 / (1.0 + (l0 - l1).exp());
        records.push(PredictionRecord {
            id: sample.id.clone(),
            label: sample.label,
            predicted: usize::from(satire_prob > 0.5),
            satire_prob,
        });
    }
    let scores: Vec<f64> = records.iter().map(|r| r.satire_prob).collect();
    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
    let report = MetricsReport::from_parts(confusion_of(&records), auc_roc(&scores, &labels)?)?;
    Ok((report, records))
}

/// Predict the majority training class for every test sample with score
/// 0.5. A tied training set falls back to the regular class. All scores
/// tie, so the rank statistic lands on 50 exactly.
pub fn majority_baseline(train_labels: &[usize], test_labels: &[usize]) -> Result<MetricsReport> {
    if train_labels.is_empty() || test_labels.is_empty() {
        return Err(TrainError::Data(
            "majority baseline needs non-empty train and test labels".into(),
        ));
    }
    let n_satire = train_labels.iter().filter(|&&l| l == 1).count();
    let majority = usize::from(2 * n_satire > train_labels.len());
    let records: Vec<PredictionRecord> = test_labels
        .iter()
        .enumerate()
        .map(|(i, &label)| PredictionRecord {
            id: format!("test-{i}"),
            label,
            predicted: majority,
            satire_prob: 0.5,
        })
        .collect();
    let scores = vec![0.5; test_labels.len()];
    MetricsReport::from_parts(confusion_of(&records), auc_roc(&scores, test_labels)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpliceStats {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MisclassifiedRecord {
    pub id: String,
    pub headline: String,
    pub true_label: String,
    pub predicted_label: String,
    pub satire_prob: f64,
    /// Mean error level of the article's image at the report quality.
    pub ela_mean: f64,
    /// Ground-truth splice geometry and its error-level contrast, when
    /// the corpus sidecar lists one for this image.
    pub splice: Option<SpliceStats>,
}

fn label_name(index: usize) -> &'static str {
    if index == 1 {
        "satire"
    } else {
        "regular"
    }
}

/// Seeded uniform sample (without replacement) of ceil(fraction * n) of
/// the misclassified test samples, each annotated with the error-level
/// evidence for its image. Zero misclassifications give an empty report.
#[allow(clippy::too_many_arguments)]
pub fn misclassification_report(
    predictions: &[PredictionRecord],
    articles: &[Article],
    manifest_path: &Path,
    splices: &[SpliceEntry],
    fraction: f64,
    seed: u64,
    quality: u8,
) -> Result<Vec<MisclassifiedRecord>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(TrainError::Config(format!(
            "sample fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let by_id: HashMap<&str, &Article> = articles.iter().map(|a| (a.id.as_str(), a)).collect();
    let splice_by_id: HashMap<&str, &SpliceEntry> =
        splices.iter().map(|s| (s.id.as_str(), s)).collect();

    let missed: Vec<&PredictionRecord> = predictions
        .iter()
        .filter(|r| r.predicted != r.label)
        .collect();
    let k = (fraction * missed.len() as f64).ceil() as usize;
    let mut picks: Vec<usize> = (0..missed.len()).collect();
    picks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    picks.truncate(k);
    picks.sort_unstable();

    let mut out = Vec::with_capacity(k);
    for i in picks {
        let record = missed[i];
        let article = by_id.get(record.id.as_str()).ok_or_else(|| {
            TrainError::Data(format!(
                "prediction {} has no article in the manifest",
                record.id
            ))
        })?;
        let path = article.resolve_image(manifest_path);
        let bytes = fs::read(&path).map_err(io_at(&path))?;
        let img = jpeg_decode(&bytes)?;
        let map = ela(&img, quality, 1.0)?;
        let splice = match splice_by_id.get(record.id.as_str()) {
            Some(entry) => {
                let mask = rect_mask(map.width(), map.height(), entry.rect());
                let stats = ela_region_stats(&map, &mask)?;
                Some(SpliceStats {
                    x: entry.x,
                    y: entry.y,
                    w: entry.w,
                    h: entry.h,
                    mean_in: stats.mean_in,
                    mean_out: stats.mean_out,
                    ratio: stats.ratio,
                })
            }
            None => None,
        };
        out.push(MisclassifiedRecord {
            id: record.id.clone(),
            headline: article.headline.clone(),
            true_label: label_name(record.label).to_string(),
            predicted_label: label_name(record.predicted).to_string(),
            satire_prob: record.satire_prob,
            ela_mean: map.mean(),
            splice,
        });
    }
    Ok(out)
}

/// Line-delimited JSON, one misclassified record per line.
pub fn report_to_jsonl(records: &[MisclassifiedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
