use std::collections::HashSet;

use corpus::{split, Article, CorpusError, Label};

fn synthetic_articles(n_satire: usize, n_regular: usize) -> Vec<Article> {
    (0..n_satire + n_regular)
        .map(|i| Article {
            id: format!("a{i:05}"),
            headline: format!("headline {i}"),
            image_path: format!("images/a{i:05}.jpg"),
            label: if i < n_satire {
                Label::Satire
            } else {
                Label::Regular
            },
            source: "unit-test".into(),
        })
        .collect()
}

fn count(articles: &[Article], label: Label) -> usize {
    articles.iter().filter(|a| a.label == label).count()
}

#[test]
fn eighty_twenty_split_is_stratified_exactly() {
    let articles = synthetic_articles(400, 600);
    let (train, test) = split(&articles, 0.8, 3).unwrap();
    assert_eq!(train.len(), 800);
    assert_eq!(test.len(), 200);
    assert_eq!(count(&train, Label::Satire), 320);
    assert_eq!(count(&train, Label::Regular), 480);
    assert_eq!(count(&test, Label::Satire), 80);
    assert_eq!(count(&test, Label::Regular), 120);
}

#[test]
fn split_is_disjoint_and_exhaustive() {
    let articles = synthetic_articles(40, 60);
    let (train, test) = split(&articles, 0.8, 9).unwrap();
    let train_ids: HashSet<&str> = train.iter().map(|a| a.id.as_str()).collect();
    let test_ids: HashSet<&str> = test.iter().map(|a| a.id.as_str()).collect();
    assert!(train_ids.is_disjoint(&test_ids));
    assert_eq!(train_ids.len() + test_ids.len(), articles.len());
    let all: HashSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    let unioned: HashSet<&str> = train_ids.union(&test_ids).copied().collect();
    assert_eq!(unioned, all);
}

#[test]
fn same_seed_reproduces_the_split() {
    let articles = synthetic_articles(40, 60);
    let (tr1, te1) = split(&articles, 0.8, 17).unwrap();
    let (tr2, te2) = split(&articles, 0.8, 17).unwrap();
    assert_eq!(tr1, tr2);
    assert_eq!(te1, te2);
    let (tr3, _) = split(&articles, 0.8, 18).unwrap();
    assert_ne!(tr1, tr3);
}

#[test]
fn outputs_keep_manifest_order() {
    let articles = synthetic_articles(40, 60);
    let (train, test) = split(&articles, 0.8, 5).unwrap();
    for part in [&train, &test] {
        let ids: Vec<&str> = part.iter().map(|a| a.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }
}

#[test]
fn per_class_rounding_never_drifts_by_more_than_one() {
    let articles = synthetic_articles(7, 8);
    let (train, test) = split(&articles, 0.8, 1).unwrap();
    // round(5.6) = 6 satire, round(6.4) = 6 regular in train.
    assert_eq!(count(&train, Label::Satire), 6);
    assert_eq!(count(&train, Label::Regular), 6);
    assert_eq!(count(&test, Label::Satire), 1);
    assert_eq!(count(&test, Label::Regular), 2);
}

#[test]
fn tiny_and_single_class_inputs_are_rejected() {
    let articles = synthetic_articles(2, 2);
    match split(&articles, 0.8, 0) {
        Err(CorpusError::Data(msg)) => assert!(msg.contains("at least 5"), "{msg}"),
        other => panic!("expected data error, got {other:?}"),
    }
    let one_class = synthetic_articles(0, 10);
    match split(&one_class, 0.8, 0) {
        Err(CorpusError::Data(msg)) => assert!(msg.contains("satire"), "{msg}"),
        other => panic!("expected data error, got {other:?}"),
    }
}
