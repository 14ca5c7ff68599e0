use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subtype_core::classify::{adaboost_train, evaluate, nb_train};
use subtype_core::matrix::Matrix;
use subtype_core::{SubscriptionLabel, UserId};

fn dataset(seed: u64, n: usize, dim: usize) -> (Matrix, Vec<SubscriptionLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let l = SubscriptionLabel::from_index(i % 2);
        let shift = if l == SubscriptionLabel::Postpaid { 0.8 } else { 0.0 };
        rows.push((0..dim).map(|d| rng.random_range(-1.0..1.0) + shift * (d + 1) as f64 / dim as f64).collect::<Vec<f64>>());
        labels.push(l);
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

proptest! {
    #[test]
    fn nb_posteriors_sum_to_one(seed in 0u64..500, x in prop::collection::vec(-1e3f64..1e3, 3)) {
        let (m, y) = dataset(seed, 40, 3);
        let model = nb_train(&m, &y).unwrap();
        let p = model.raw_posterior(&x).unwrap();
        prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn nb_is_translation_equivariant(seed in 0u64..500, c in -50.0f64..50.0, x in prop::collection::vec(-3.0f64..3.0, 3)) {
        let (m, y) = dataset(seed, 40, 3);
        let shifted: Vec<Vec<f64>> = m.iter_rows().map(|r| r.iter().map(|v| v + c).collect()).collect();
        let a = nb_train(&m, &y).unwrap().raw_posterior(&x).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        let b = nb_train(&Matrix::from_rows(&shifted).unwrap(), &y).unwrap().raw_posterior(&xs).unwrap();
        prop_assert!((a[1] - b[1]).abs() <= 1e-6);
    }

    #[test]
    fn evaluation_ignores_map_order(pairs in prop::collection::vec((0u64..1000, 0usize..2, 0usize..2), 1..60)) {
        let mut pred = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for &(u, p, t) in &pairs {
            pred.insert(UserId(u), SubscriptionLabel::from_index(p));
            truth.insert(UserId(u), SubscriptionLabel::from_index(t));
        }
        let a = evaluate(&pred, &truth).unwrap();
        let rev_pred: BTreeMap<_, _> = pred.iter().rev().map(|(k, v)| (*k, *v)).collect();
        prop_assert_eq!(a, evaluate(&rev_pred, &truth).unwrap());
        let agree = pred.iter().filter(|(u, l)| truth[*u] == **l).count();
        prop_assert!((a.accuracy() - agree as f64 / pred.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn flipped_labels_flip_stump_polarities() {
    for seed in 0..10 {
        let (m, y) = dataset(seed, 200, 4);
        let flipped: Vec<SubscriptionLabel> = y.iter().map(|l| l.flip()).collect();
        let a = adaboost_train(&m, &y, 20).unwrap();
        let b = adaboost_train(&m, &flipped, 20).unwrap();
        assert_eq!(a.stumps.len(), b.stumps.len());
        for (s, t) in a.stumps.iter().zip(&b.stumps) {
            assert_eq!((s.feature, s.threshold), (t.feature, t.threshold));
            assert_eq!(s.polarity, -t.polarity);
            assert!((s.weight - t.weight).abs() < 1e-9);
        }
    }
}

#[test]
fn exponential_loss_never_increases_across_rounds() {
    for seed in 0..10 {
        let (m, y) = dataset(seed, 300, 3);
        let e = adaboost_train(&m, &y, 30).unwrap();
        let loss = |t: usize| -> f64 {
            (0..m.rows()).map(|i| (-y[i].sign() * e.partial_decision(m.row(i), t)).exp()).sum::<f64>() / m.rows() as f64
        };
        let mut prev = loss(0);
        for t in 1..=e.stumps.len() {
            let cur = loss(t);
            assert!(cur <= prev + 1e-12, "round {t}: {cur} > {prev}");
            prev = cur;
        }
    }
}
