use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::article::{Article, Label};
use crate::error::{CorpusError, Result};

/// Stratified train/test split: each class is shuffled on its own seeded
/// stream and cut at the ratio, so class proportions carry over exactly
/// (up to rounding one element per class). Outputs keep manifest order.
pub fn split(articles: &[Article], ratio: f64, seed: u64) -> Result<(Vec<Article>, Vec<Article>)> {
    if articles.len() < 5 {
        return Err(CorpusError::Data(format!(
            "cannot split {} articles; need at least 5",
            articles.len()
        )));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(CorpusError::Data(format!(
            "split ratio {ratio} outside [0, 1]"
        )));
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, label) in [Label::Satire, Label::Regular].into_iter().enumerate() {
        let mut members: Vec<usize> = (0..articles.len())
            .filter(|&i| articles[i].label == label)
            .collect();
        if members.is_empty() {
            return Err(CorpusError::Data(format!(
                "class {} has no members",
                label.as_str()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (class as u64 + 1));
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * ratio).round() as usize;
        train_idx.extend_from_slice(&members[..cut]);
        test_idx.extend_from_slice(&members[cut..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| idx.iter().map(|&i| articles[i].clone()).collect();
    Ok((pick(&train_idx), pick(&test_idx)))
}
