use alloc::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};

/// 2x2 counts indexed `[actual][predicted]` by label index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: SubscriptionLabel, predicted: SubscriptionLabel) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 { 0.0 } else { self.correct() as f64 / t as f64 }
    }

    /// Rows normalized to sum to one; an empty row stays all zero.
    pub fn row_rates(&self) -> [[f64; 2]; 2] {
        let mut r = [[0.0; 2]; 2];
        for (row, c) in r.iter_mut().zip(&self.counts) {
            let n = c[0] + c[1];
            if n > 0 {
                row[0] = c[0] as f64 / n as f64;
                row[1] = 1.0 - row[0];
            }
        }
        r
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for a in 0..2 {
            for p in 0..2 {
                self.counts[a][p] += other.counts[a][p];
            }
        }
    }
}

pub fn evaluate(
    predictions: &BTreeMap<UserId, SubscriptionLabel>,
    truth: &BTreeMap<UserId, SubscriptionLabel>,
) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::default();
    for (u, &p) in predictions {
        let &a = truth.get(u).ok_or(Error::MissingTruth(*u))?;
        m.record(a, p);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use SubscriptionLabel::*;

    fn map(v: &[(u64, SubscriptionLabel)]) -> BTreeMap<UserId, SubscriptionLabel> {
        v.iter().map(|&(u, l)| (UserId(u), l)).collect()
    }

    #[test]
    fn perfect_and_inverted() {
        let truth = map(&[(1, Prepaid), (2, Postpaid), (3, Postpaid)]);
        let m = evaluate(&truth, &truth).unwrap();
        assert_eq!(m.accuracy(), 1.0);
        assert_eq!((m.counts[0][1], m.counts[1][0]), (0, 0));
        let flipped = truth.iter().map(|(&u, l)| (u, l.flip())).collect();
        assert_eq!(evaluate(&flipped, &truth).unwrap().accuracy(), 0.0);
    }

    #[test]
    fn three_of_four() {
        let truth = map(&[(1, Prepaid), (2, Postpaid), (3, Postpaid), (4, Prepaid)]);
        let pred = map(&[(1, Prepaid), (2, Postpaid), (3, Postpaid), (4, Postpaid)]);
        let m = evaluate(&pred, &truth).unwrap();
        assert_eq!(m.accuracy(), 0.75);
        assert_eq!(m.row_rates(), [[0.5, 0.5], [0.0, 1.0]]);
    }

    #[test]
    fn missing_truth_is_an_error() {
        let truth = map(&[(1, Prepaid)]);
        let pred = map(&[(1, Prepaid), (2, Prepaid)]);
        assert_eq!(evaluate(&pred, &truth), Err(Error::MissingTruth(UserId(2))));
    }
}
