use alloc::vec::Vec;

use super::problem::LabelingProblem;
use super::solve::LabelingSolution;
use crate::error::{Error, Result};
use crate::label::SubscriptionLabel;

pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Exhaustive minimizer over all labelings consistent with the fixed
/// labels. Assignments are enumerated as bitmasks in increasing order (bit
/// `i` set = node `i` postpaid) and only a strictly lower energy replaces the
/// incumbent, so ties resolve toward prepaid.
pub fn brute_force_labeling(problem: &LabelingProblem) -> Result<LabelingSolution> {
    let n = problem.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooManyNodes { got: n, max: BRUTE_FORCE_MAX_NODES });
    }
    problem.validate()?;
    let (mut must_one, mut must_zero) = (0u32, 0u32);
    for (i, f) in problem.fixed.iter().enumerate() {
        match f {
            Some(SubscriptionLabel::Postpaid) => must_one |= 1 << i,
            Some(SubscriptionLabel::Prepaid) => must_zero |= 1 << i,
            None => {}
        }
    }
    let decode = |mask: u32| -> Vec<SubscriptionLabel> {
        (0..n).map(|i| SubscriptionLabel::from_index(((mask >> i) & 1) as usize)).collect()
    };
    let mut best: Option<(f64, u32)> = None;
    let mut labels = Vec::with_capacity(n);
    for mask in 0u32..(1u32 << n) {
        if mask & must_one != must_one || mask & must_zero != 0 {
            continue;
        }
        labels.clear();
        labels.extend((0..n).map(|i| SubscriptionLabel::from_index(((mask >> i) & 1) as usize)));
        let e = problem.energy(&labels);
        if best.is_none_or(|(b, _)| e < b) {
            best = Some((e, mask));
        }
    }
    let (energy, mask) = best.expect("at least one consistent labeling");
    Ok(LabelingSolution { labels: decode(mask), energy, flow_value: 0.0, cut_capacity: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::UserId;
    use alloc::vec;
    use SubscriptionLabel::*;

    #[test]
    fn single_node() {
        let p = LabelingProblem::new(vec![UserId(0)], vec![[1.0, 2.0]], &[], vec![0], 1.0).unwrap();
        let s = brute_force_labeling(&p).unwrap();
        assert_eq!((s.labels, s.energy), (vec![Prepaid], 1.0));
    }

    #[test]
    fn isolated_nodes_are_independent() {
        let p = LabelingProblem::new(vec![UserId(0), UserId(1)], vec![[1.0, 2.0], [3.0, 0.5]], &[], vec![0, 0], 5.0)
            .unwrap();
        assert_eq!(brute_force_labeling(&p).unwrap().labels, vec![Prepaid, Postpaid]);
    }

    #[test]
    fn ties_go_to_prepaid() {
        let p = LabelingProblem::new(vec![UserId(0), UserId(1)], vec![[1.0, 1.0]; 2], &[], vec![0, 0], 0.0).unwrap();
        let a = brute_force_labeling(&p).unwrap();
        assert_eq!(a.labels, vec![Prepaid, Prepaid]);
        assert_eq!(a, brute_force_labeling(&p).unwrap());
    }

    #[test]
    fn too_many_nodes() {
        let n = BRUTE_FORCE_MAX_NODES + 1;
        let p = LabelingProblem::new((0..n as u64).map(UserId).collect(), vec![[0.0, 0.0]; n], &[], vec![0; n], 0.0)
            .unwrap();
        assert_eq!(brute_force_labeling(&p), Err(Error::TooManyNodes { got: n, max: BRUTE_FORCE_MAX_NODES }));
    }
}
