use alloc::vec;
use alloc::vec::Vec;

use super::Classifier;
use crate::error::{Error, Result};
use crate::label::SubscriptionLabel;
use crate::matrix::Matrix;

/// Lower bound on every per-class feature variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;
/// Posteriors are clamped to `[POSTERIOR_FLOOR, 1 - POSTERIOR_FLOOR]`.
pub const POSTERIOR_FLOOR: f64 = 1e-10;

/// Gaussian Naive Bayes with one mean/variance per (class, feature).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianNbModel {
    /// Indexed by `SubscriptionLabel::index()`.
    pub class_prior: [f64; 2],
    pub feature_mean: [Vec<f64>; 2],
    pub feature_var: [Vec<f64>; 2],
}

impl GaussianNbModel {
    pub fn dim(&self) -> usize {
        self.feature_mean[0].len()
    }

    /// Unnormalized per-class log joint `ln P(c) + sum_j ln N(x_j; mu, var)`.
    pub fn log_joint(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate() {
            let mut s = libm::log(self.class_prior[c]);
            for (j, &xj) in x.iter().enumerate() {
                let var = self.feature_var[c][j];
                let d = xj - self.feature_mean[c][j];
                s -= 0.5 * (libm::log(2.0 * core::f64::consts::PI * var) + d * d / var);
            }
            *o = s;
        }
        Ok(out)
    }

    /// Normalized posteriors `(P_prepaid, P_postpaid)` before clamping.
    pub fn raw_posterior(&self, x: &[f64]) -> Result<[f64; 2]> {
        let lj = self.log_joint(x)?;
        Ok(normalize_log(lj))
    }
}

/// Softmax of two log-weights, summing to exactly 1.
fn normalize_log(lj: [f64; 2]) -> [f64; 2] {
    // p1 = 1 / (1 + exp(l0 - l1)), computed on the side that cannot overflow.
    let mut diff = lj[0] - lj[1];
    if diff.is_nan() {
        // Both log-weights overflowed to the same infinity.
        diff = 0.0;
    }
    let p1 = if diff > 0.0 {
        let e = libm::exp(-diff);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(diff))
    };
    [1.0 - p1, p1]
}

pub fn nb_train(features: &Matrix, labels: &[SubscriptionLabel]) -> Result<GaussianNbModel> {
    if features.rows() != labels.len() {
        return Err(Error::LengthMismatch { features: features.rows(), labels: labels.len() });
    }
    let d = features.cols();
    let mut count = [0usize; 2];
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for (row, &y) in features.iter_rows().zip(labels) {
        let c = y.index();
        count[c] += 1;
        for j in 0..d {
            mean[c][j] += row[j];
        }
    }
    for label in SubscriptionLabel::ALL {
        let c = label.index();
        if count[c] == 0 {
            return Err(Error::MissingClass(label));
        }
        if count[c] < 2 {
            return Err(Error::TooFewExamples { label, count: count[c], min: 2 });
        }
        for m in mean[c].iter_mut() {
            *m /= count[c] as f64;
        }
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for (row, &y) in features.iter_rows().zip(labels) {
        let c = y.index();
        for j in 0..d {
            let dv = row[j] - mean[c][j];
            var[c][j] += dv * dv;
        }
    }
    for c in 0..2 {
        for v in var[c].iter_mut() {
            *v = (*v / count[c] as f64).max(VARIANCE_FLOOR);
        }
    }
    let n = labels.len() as f64;
    Ok(GaussianNbModel {
        class_prior: [count[0] as f64 / n, count[1] as f64 / n],
        feature_mean: mean,
        feature_var: var,
    })
}

/// Clamped posteriors `(P_prepaid, P_postpaid)`.
pub fn nb_posterior(model: &GaussianNbModel, x: &[f64]) -> Result<(f64, f64)> {
    let [p0, p1] = model.raw_posterior(x)?;
    let clamp = |p: f64| p.clamp(POSTERIOR_FLOOR, 1.0 - POSTERIOR_FLOOR);
    Ok((clamp(p0), clamp(p1)))
}

impl Classifier for GaussianNbModel {
    /// Argmax of the posterior; exact ties go to prepaid.
    fn predict(&self, x: &[f64]) -> Result<SubscriptionLabel> {
        let (p0, p1) = nb_posterior(self, x)?;
        Ok(if p1 > p0 { SubscriptionLabel::Postpaid } else { SubscriptionLabel::Prepaid })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SubscriptionLabel::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn closed_form_moments() {
        let x = m(&[&[0.0], &[2.0], &[10.0], &[12.0]]);
        let model = nb_train(&x, &[Prepaid, Prepaid, Postpaid, Postpaid]).unwrap();
        assert_eq!(model.feature_mean, [vec![1.0], vec![11.0]]);
        assert_eq!(model.feature_var, [vec![1.0], vec![1.0]]);
        assert_eq!(model.class_prior, [0.5, 0.5]);
    }

    #[test]
    fn constant_feature_gets_floored_variance() {
        let x = m(&[&[3.0, 1.0], &[3.0, 2.0], &[5.0, 1.0], &[5.0, 4.0]]);
        let model = nb_train(&x, &[Prepaid, Prepaid, Postpaid, Postpaid]).unwrap();
        assert_eq!(model.feature_var[0][0], VARIANCE_FLOOR);
        assert_eq!(model.feature_var[1][0], VARIANCE_FLOOR);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = m(&[&[0.0], &[1.0]]);
        assert_eq!(nb_train(&x, &[Prepaid, Prepaid]), Err(Error::MissingClass(Postpaid)));
        let x = m(&[&[0.0], &[1.0], &[2.0]]);
        assert!(matches!(nb_train(&x, &[Prepaid, Prepaid, Postpaid]), Err(Error::TooFewExamples { .. })));
    }

    fn symmetric() -> GaussianNbModel {
        GaussianNbModel {
            class_prior: [0.5, 0.5],
            feature_mean: [vec![-1.0, 0.0], vec![1.0, 0.0]],
            feature_var: [vec![1.0, 2.0], vec![1.0, 2.0]],
        }
    }

    #[test]
    fn midpoint_is_even() {
        assert_eq!(nb_posterior(&symmetric(), &[0.0, 3.0]).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn extreme_inputs_are_clamped() {
        let (p0, p1) = nb_posterior(&symmetric(), &[1e3, 0.0]).unwrap();
        assert_eq!((p0, p1), (POSTERIOR_FLOOR, 1.0 - POSTERIOR_FLOOR));
        let (p0, p1) = nb_posterior(&symmetric(), &[-1e3, 0.0]).unwrap();
        assert_eq!((p0, p1), (1.0 - POSTERIOR_FLOOR, POSTERIOR_FLOOR));
    }

    #[test]
    fn dimension_is_checked() {
        assert_eq!(nb_posterior(&symmetric(), &[0.0]), Err(Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn huge_values_stay_finite() {
        let (p0, p1) = nb_posterior(&symmetric(), &[f64::MAX / 4.0, -f64::MAX / 4.0]).unwrap();
        assert!(p0.is_finite() && p1.is_finite());
    }
}
