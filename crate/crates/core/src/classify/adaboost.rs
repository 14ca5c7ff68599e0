use alloc::vec;
use alloc::vec::Vec;

use super::Classifier;
use crate::error::{Error, Result};
use crate::label::SubscriptionLabel;
use crate::matrix::Matrix;

const EPS_CLAMP: f64 = 1e-10;

/// Axis-aligned threshold classifier. With polarity `+1` it predicts
/// postpaid above the threshold, with `-1` below or at it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub weight: f64,
}

impl Stump {
    /// `+1.0` for postpaid, `-1.0` for prepaid.
    #[inline]
    pub fn vote(&self, x: &[f64]) -> f64 {
        let side = if x[self.feature] > self.threshold { 1.0 } else { -1.0 };
        side * self.polarity as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StumpEnsemble {
    pub stumps: Vec<Stump>,
    pub rounds: usize,
    pub dim: usize,
    /// Weighted training error of each selected stump.
    pub weighted_errors: Vec<f64>,
}

impl StumpEnsemble {
    /// Weighted vote `sum_t alpha_t h_t(x)`; positive means postpaid.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.stumps.iter().map(|s| s.weight * s.vote(x)).sum())
    }

    /// Decision value using only the first `t` stumps.
    pub fn partial_decision(&self, x: &[f64], t: usize) -> f64 {
        self.stumps[..t].iter().map(|s| s.weight * s.vote(x)).sum()
    }
}

impl Classifier for StumpEnsemble {
    fn predict(&self, x: &[f64]) -> Result<SubscriptionLabel> {
        Ok(if self.decision(x)? > 0.0 { SubscriptionLabel::Postpaid } else { SubscriptionLabel::Prepaid })
    }
}

struct Candidate {
    error: f64,
    feature: usize,
    threshold: f64,
    polarity: i8,
}

/// Discrete AdaBoost over exhaustive decision stumps.
///
/// Stops early once a round's best stump has weighted error at or above one
/// half, or after a stump that classifies the weighted sample perfectly.
pub fn adaboost_train(features: &Matrix, labels: &[SubscriptionLabel], rounds: usize) -> Result<StumpEnsemble> {
    let n = features.rows();
    if n != labels.len() {
        return Err(Error::LengthMismatch { features: n, labels: labels.len() });
    }
    if rounds == 0 {
        return Err(Error::ZeroRounds);
    }
    for label in SubscriptionLabel::ALL {
        if !labels.contains(&label) {
            return Err(Error::MissingClass(label));
        }
    }
    let d = features.cols();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();

    // Per-feature ordering by (value, row index), computed once.
    let order: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| features.get(a, j).total_cmp(&features.get(b, j)).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut w = vec![1.0 / n as f64; n];
    let mut ensemble = StumpEnsemble { stumps: Vec::new(), rounds: 0, dim: d, weighted_errors: Vec::new() };

    for _ in 0..rounds {
        let best = best_stump(features, &y, &w, &order);
        let Some(best) = best else { break };
        if best.error >= 0.5 {
            break;
        }
        let eps = best.error.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * libm::log((1.0 - eps) / eps);
        let stump = Stump { feature: best.feature, threshold: best.threshold, polarity: best.polarity, weight: alpha };

        let mut total = 0.0;
        for i in 0..n {
            w[i] *= libm::exp(-alpha * y[i] * stump.vote(features.row(i)));
            total += w[i];
        }
        for wi in w.iter_mut() {
            *wi /= total;
        }
        ensemble.stumps.push(stump);
        ensemble.weighted_errors.push(best.error);
        ensemble.rounds += 1;
        if best.error == 0.0 {
            break;
        }
    }
    if ensemble.rounds == 0 {
        return Err(Error::NoWeakLearner);
    }
    Ok(ensemble)
}

fn best_stump(features: &Matrix, y: &[f64], w: &[f64], order: &[Vec<usize>]) -> Option<Candidate> {
    let (mut pos_total, mut neg_total) = (0.0, 0.0);
    for (i, &wi) in w.iter().enumerate() {
        if y[i] > 0.0 { pos_total += wi } else { neg_total += wi }
    }
    let mut best: Option<Candidate> = None;
    let mut consider = |error: f64, feature: usize, threshold: f64, polarity: i8| {
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(Candidate { error, feature, threshold, polarity });
        }
    };
    for (j, idx) in order.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let (mut pos_left, mut neg_left) = (0.0, 0.0);
        // k = number of rows at or below the threshold.
        for k in 0..idx.len() {
            let x_k = features.get(idx[k], j);
            let threshold = if k == 0 {
                x_k - 1.0
            } else {
                let x_prev = features.get(idx[k - 1], j);
                if x_prev == x_k {
                    let i = idx[k];
                    if y[i] > 0.0 { pos_left += w[i] } else { neg_left += w[i] }
                    continue;
                }
                x_prev + (x_k - x_prev) / 2.0
            };
            consider(pos_left + (neg_total - neg_left), j, threshold, 1);
            consider(neg_left + (pos_total - pos_left), j, threshold, -1);
            let i = idx[k];
            if y[i] > 0.0 { pos_left += w[i] } else { neg_left += w[i] }
        }
    }
    best
}
