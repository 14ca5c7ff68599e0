use alloc::vec::Vec;

use super::network::build_labeling_network;
use super::problem::LabelingProblem;
use super::push_relabel::{push_relabel_maxflow, CutSide};
use crate::error::Result;
use crate::label::SubscriptionLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingSolution {
    pub labels: Vec<SubscriptionLabel>,
    /// Energy of `labels`.
    pub energy: f64,
    /// Maximum flow; zero for the exhaustive solver.
    pub flow_value: f64,
    /// Capacity of the cut induced by `labels`; zero for the exhaustive solver.
    pub cut_capacity: f64,
}

/// Minimum-energy labeling via max-flow. Sink-side users are prepaid,
/// source-side users postpaid.
pub fn solve_labeling(problem: &LabelingProblem) -> Result<LabelingSolution> {
    problem.validate()?;
    let net = build_labeling_network(problem);
    let flow = push_relabel_maxflow(&net)?;
    let n = problem.node_count();
    let labels: Vec<SubscriptionLabel> = flow.side[..n]
        .iter()
        .map(|s| match s {
            CutSide::Source => SubscriptionLabel::Postpaid,
            CutSide::Sink => SubscriptionLabel::Prepaid,
        })
        .collect();
    debug_assert!(problem.respects_fixed(&labels));
    Ok(LabelingSolution {
        energy: problem.energy(&labels),
        cut_capacity: net.cut_capacity(&flow.source_side()),
        flow_value: flow.flow_value,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::UserId;
    use crate::mincut::brute_force_labeling;
    use alloc::vec;
    use SubscriptionLabel::*;

    fn users(n: u64) -> Vec<UserId> {
        (0..n).map(UserId).collect()
    }

    #[test]
    fn zero_lambda_is_per_node_argmin() {
        let costs = vec![[1.0, 2.0], [2.0, 1.0], [0.3, 0.2]];
        let p = LabelingProblem::new(users(3), costs, &[(0, 1), (1, 2), (2, 0)], vec![1, 1, 1], 0.0).unwrap();
        let s = solve_labeling(&p).unwrap();
        assert_eq!(s.labels, vec![Prepaid, Postpaid, Postpaid]);
        assert!((s.energy - 2.2).abs() < 1e-12);
    }

    #[test]
    fn equal_costs_go_prepaid() {
        let p = LabelingProblem::new(users(1), vec![[0.7, 0.7]], &[], vec![0], 0.0).unwrap();
        assert_eq!(solve_labeling(&p).unwrap().labels, vec![Prepaid]);
    }

    #[test]
    fn infinite_lambda_forces_agreement() {
        let costs = vec![[1.0, 2.0], [5.0, 1.0], [1.0, 1.5]];
        let p = LabelingProblem::new(users(3), costs, &[(0, 1), (1, 2)], vec![1, 1, 0], f64::INFINITY).unwrap();
        let s = solve_labeling(&p).unwrap();
        // all prepaid: 7.0; all postpaid: 4.5
        assert_eq!(s.labels, vec![Postpaid; 3]);
        assert_eq!(s.energy, 4.5);
    }

    #[test]
    fn strong_coupling_pulls_a_weak_node_over() {
        // node 0 mildly prefers prepaid, node 1 strongly postpaid.
        let p = LabelingProblem::new(users(2), vec![[0.6, 0.8], [5.0, 0.1]], &[(0, 1), (1, 0)], vec![1, 1], 1.0)
            .unwrap();
        let s = solve_labeling(&p).unwrap();
        assert_eq!(s.labels, vec![Postpaid, Postpaid]);
        assert_eq!(s.energy, brute_force_labeling(&p).unwrap().energy);
        assert!((s.flow_value - s.cut_capacity).abs() < 1e-9);
    }

    #[test]
    fn fixed_labels_are_kept() {
        let p = LabelingProblem::new(users(2), vec![[0.1, 9.0], [0.1, 9.0]], &[(0, 1)], vec![1, 1], 1.0)
            .unwrap()
            .with_fixed(vec![Some(Postpaid), None])
            .unwrap();
        let s = solve_labeling(&p).unwrap();
        assert_eq!(s.labels[0], Postpaid);
        assert_eq!(s.energy, brute_force_labeling(&p).unwrap().energy);
    }

    #[test]
    fn contradictory_fixed_labels_fail() {
        let p = LabelingProblem::new(users(2), vec![[1.0, 1.0]; 2], &[(0, 1)], vec![1, 1], f64::INFINITY)
            .unwrap()
            .with_fixed(vec![Some(Postpaid), Some(Prepaid)])
            .unwrap();
        assert_eq!(solve_labeling(&p), Err(crate::Error::ContradictoryFixedLabels));
    }
}
