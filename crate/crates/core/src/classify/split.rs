use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};
use crate::rng::{rng_for, stream};

/// Balanced training sample plus every other labeled user as test set.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainTestSplit {
    pub train: BTreeSet<UserId>,
    pub test: BTreeSet<UserId>,
    pub seed: u64,
}

/// Samples `n_per_class` users of each label uniformly without replacement.
pub fn sample_training_set(
    labels: &BTreeMap<UserId, SubscriptionLabel>,
    n_per_class: usize,
    seed: u64,
) -> Result<TrainTestSplit> {
    let mut train = BTreeSet::new();
    for label in SubscriptionLabel::ALL {
        let pool: Vec<UserId> = labels.iter().filter(|(_, &l)| l == label).map(|(&u, _)| u).collect();
        if pool.len() < n_per_class {
            return Err(Error::InsufficientClass { label, available: pool.len(), requested: n_per_class });
        }
        let mut rng = rng_for(seed, stream::SPLIT, label.index() as u64);
        for i in index::sample(&mut rng, pool.len(), n_per_class) {
            train.insert(pool[i]);
        }
    }
    let test = labels.keys().filter(|u| !train.contains(u)).copied().collect();
    Ok(TrainTestSplit { train, test, seed })
}
