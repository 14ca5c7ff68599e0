use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::cdr::CallGraph;
use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};

pub const DEFAULT_TAU1: f64 = 0.85;
pub const DEFAULT_TAU2: f64 = 0.65;

fn check(tau1: f64, tau2: f64) -> Result<()> {
    let ok = |t: f64| t > 0.5 && t <= 1.0;
    if ok(tau1) && ok(tau2) {
        Ok(())
    } else {
        Err(Error::InvalidThreshold { tau1, tau2 })
    }
}

/// Fixes node `i` to label `L` when `P(L | i) > tau1` and the mean of
/// `P(L | j)` over its neighbours `j` exceeds `tau2`. Nodes without
/// neighbours are never fixed.
pub fn prune_fix_labels_indexed<N>(
    posteriors: &[(f64, f64)],
    neighbors: N,
    tau1: f64,
    tau2: f64,
) -> Result<Vec<Option<SubscriptionLabel>>>
where
    N: Fn(usize) -> Vec<usize>,
{
    check(tau1, tau2)?;
    let p = |i: usize, l: SubscriptionLabel| match l {
        SubscriptionLabel::Prepaid => posteriors[i].0,
        SubscriptionLabel::Postpaid => posteriors[i].1,
    };
    let mut fixed = alloc::vec![None; posteriors.len()];
    for (i, slot) in fixed.iter_mut().enumerate() {
        let nb = neighbors(i);
        if nb.is_empty() {
            continue;
        }
        for l in SubscriptionLabel::ALL {
            if p(i, l) > tau1 {
                let mean = nb.iter().map(|&j| p(j, l)).sum::<f64>() / nb.len() as f64;
                if mean > tau2 {
                    *slot = Some(l);
                }
            }
        }
    }
    Ok(fixed)
}

/// Pruning over a call graph, with neighbours being the union of in- and
/// out-neighbours joined by calls. Neighbours without a posterior are
/// ignored.
pub fn prune_fix_labels(
    posteriors: &BTreeMap<UserId, (f64, f64)>,
    graph: &CallGraph,
    tau1: f64,
    tau2: f64,
) -> Result<BTreeMap<UserId, SubscriptionLabel>> {
    let users: Vec<UserId> = posteriors.keys().copied().collect();
    let post: Vec<(f64, f64)> = posteriors.values().copied().collect();
    let local = |g: usize| users.binary_search(&graph.user(g)).ok();
    let fixed = prune_fix_labels_indexed(
        &post,
        |i| match graph.index_of(users[i]) {
            Some(g) => graph.call_neighbors(g).into_iter().filter_map(|j| local(j as usize)).collect(),
            None => Vec::new(),
        },
        tau1,
        tau2,
    )?;
    Ok(users.into_iter().zip(fixed).filter_map(|(u, f)| f.map(|l| (u, l))).collect())
}
