//! Supervised baselines and evaluation.

mod adaboost;
mod eval;
mod nb;
mod split;

pub use adaboost::{adaboost_train, Stump, StumpEnsemble};
pub use eval::{evaluate, ConfusionMatrix};
pub use nb::{nb_posterior, nb_train, GaussianNbModel, POSTERIOR_FLOOR, VARIANCE_FLOOR};
pub use split::{sample_training_set, TrainTestSplit};

use crate::label::SubscriptionLabel;

/// A trained binary classifier over feature rows.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> crate::Result<SubscriptionLabel>;
}

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::label::UserId;
use crate::matrix::Matrix;

/// Both baselines trained on the split's training users and scored on its
/// test users.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub naive_bayes: ConfusionMatrix,
    pub adaboost: ConfusionMatrix,
    pub nb_model: GaussianNbModel,
    pub ensemble: StumpEnsemble,
}

/// `users[i]` owns row `i` of `features` and `labels[i]`.
pub fn train_and_score(
    users: &[UserId],
    features: &Matrix,
    labels: &[SubscriptionLabel],
    split: &TrainTestSplit,
    rounds: usize,
) -> crate::Result<BaselineReport> {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, u) in users.iter().enumerate() {
        if split.train.contains(u) {
            train.push(i);
        } else if split.test.contains(u) {
            test.push(i);
        }
    }
    let x_train = features.select_rows(&train);
    let y_train: Vec<SubscriptionLabel> = train.iter().map(|&i| labels[i]).collect();
    let nb_model = nb_train(&x_train, &y_train)?;
    let ensemble = adaboost_train(&x_train, &y_train, rounds)?;
    let truth: BTreeMap<UserId, SubscriptionLabel> = test.iter().map(|&i| (users[i], labels[i])).collect();
    let predict_all = |c: &dyn Classifier| -> crate::Result<BTreeMap<UserId, SubscriptionLabel>> {
        test.iter().map(|&i| Ok((users[i], c.predict(features.row(i))?))).collect()
    };
    Ok(BaselineReport {
        naive_bayes: evaluate(&predict_all(&nb_model)?, &truth)?,
        adaboost: evaluate(&predict_all(&ensemble)?, &truth)?,
        nb_model,
        ensemble,
    })
}
