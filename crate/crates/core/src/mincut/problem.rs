use alloc::format;
use alloc::vec::Vec;

use super::costs::data_cost;
use crate::cdr::CallGraph;
use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};

/// Per-edge disagreement weights `w(0,1)` and `w(1,0)` of a directed social
/// edge `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SocialEdge {
    pub from: u32,
    pub to: u32,
    /// Cost when `from` is prepaid and `to` postpaid.
    pub w01: f64,
    /// Cost when `from` is postpaid and `to` prepaid.
    pub w10: f64,
}

/// How disagreement on a social edge is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SmoothnessWeight {
    /// Reciprocal out-degree of the endpoint labeled postpaid.
    #[default]
    InverseOutDegree,
    /// Experimental: the edge's share of the caller's outgoing calls.
    CallShare,
    /// Experimental: the edge's share of the caller's outgoing call seconds.
    DurationShare,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelingProblem {
    pub users: Vec<UserId>,
    /// `[D(prepaid), D(postpaid)]` in nats.
    pub data_cost: Vec<[f64; 2]>,
    pub social_edges: Vec<SocialEdge>,
    pub k_out: Vec<u32>,
    /// Smoothness trade-off; `f64::INFINITY` forbids any disagreement.
    pub lambda: f64,
    pub fixed: Vec<Option<SubscriptionLabel>>,
}

impl LabelingProblem {
    /// Problem with the default out-degree smoothness. `edges` are directed
    /// node-index pairs.
    pub fn new(
        users: Vec<UserId>,
        data_cost: Vec<[f64; 2]>,
        edges: &[(u32, u32)],
        k_out: Vec<u32>,
        lambda: f64,
    ) -> Result<Self> {
        let social_edges = edges
            .iter()
            .map(|&(u, v)| {
                let inv = |k: u32| if k == 0 { 0.0 } else { 1.0 / k as f64 };
                SocialEdge {
                    from: u,
                    to: v,
                    w01: inv(*k_out.get(v as usize).unwrap_or(&0)),
                    w10: inv(*k_out.get(u as usize).unwrap_or(&0)),
                }
            })
            .collect();
        let n = users.len();
        let p = LabelingProblem { users, data_cost, social_edges, k_out, lambda, fixed: alloc::vec![None; n] };
        p.validate()?;
        Ok(p)
    }

    /// Builds the problem over the classified nodes of `graph`, with social
    /// edges from call edges between classified nodes. `posteriors[i]` is the
    /// clamped `(P_prepaid, P_postpaid)` of the i-th classified node.
    pub fn from_call_graph(
        graph: &CallGraph,
        posteriors: &[(f64, f64)],
        lambda: f64,
        weight: SmoothnessWeight,
    ) -> Result<Self> {
        let nodes: Vec<usize> = graph.classified_nodes().collect();
        if nodes.len() != posteriors.len() {
            return Err(Error::InvalidProblem(format!(
                "{} posteriors for {} classified nodes",
                posteriors.len(),
                nodes.len()
            )));
        }
        let mut local = alloc::vec![u32::MAX; graph.node_count()];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k as u32;
        }
        let users = nodes.iter().map(|&i| graph.user(i)).collect();
        let data_cost = posteriors.iter().map(|&p| data_cost(p)).collect::<Result<Vec<_>>>()?;
        let k_out: Vec<u32> = nodes.iter().map(|&i| graph.out_degree(i) as u32).collect();

        let mut social_edges = Vec::new();
        for &i in &nodes {
            let (mut calls, mut secs) = (0u64, 0u64);
            for e in graph.out_edges(i) {
                calls += e.stats.call_count;
                secs += e.stats.call_seconds;
            }
            for e in graph.out_edges(i) {
                let j = local[e.target as usize];
                if j == u32::MAX || !e.stats.has_calls() {
                    continue;
                }
                let u = local[i];
                let (w01, w10) = match weight {
                    SmoothnessWeight::InverseOutDegree => {
                        (1.0 / k_out[j as usize] as f64, 1.0 / k_out[u as usize] as f64)
                    }
                    SmoothnessWeight::CallShare => {
                        let s = e.stats.call_count as f64 / calls as f64;
                        (s, s)
                    }
                    SmoothnessWeight::DurationShare => {
                        let s = if secs == 0 { 0.0 } else { e.stats.call_seconds as f64 / secs as f64 };
                        (s, s)
                    }
                };
                social_edges.push(SocialEdge { from: u, to: j, w01, w10 });
            }
        }
        let n = nodes.len();
        let p = LabelingProblem { users, data_cost, social_edges, k_out, lambda, fixed: alloc::vec![None; n] };
        p.validate()?;
        Ok(p)
    }

    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    pub fn with_fixed(mut self, fixed: Vec<Option<SubscriptionLabel>>) -> Result<Self> {
        self.fixed = fixed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.users.len();
        let bad = |m: alloc::string::String| Err(Error::InvalidProblem(m));
        if self.data_cost.len() != n || self.k_out.len() != n || self.fixed.len() != n {
            return bad(format!(
                "table lengths differ: users {n}, costs {}, k_out {}, fixed {}",
                self.data_cost.len(),
                self.k_out.len(),
                self.fixed.len()
            ));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        for (i, d) in self.data_cost.iter().enumerate() {
            if !d.iter().all(|c| c.is_finite() && *c >= 0.0) {
                return bad(format!("node {i} has data cost {d:?}"));
            }
        }
        for e in &self.social_edges {
            if e.from as usize >= n || e.to as usize >= n || e.from == e.to {
                return bad(format!("social edge {} -> {} is not between two distinct nodes", e.from, e.to));
            }
            if self.k_out[e.from as usize] == 0 {
                return bad(format!("node {} has outgoing social edges but k_out = 0", e.from));
            }
            if !(e.w01.is_finite() && e.w10.is_finite() && e.w01 >= 0.0 && e.w10 >= 0.0) {
                return bad(format!("social edge {} -> {} has weights ({}, {})", e.from, e.to, e.w01, e.w10));
            }
        }
        Ok(())
    }

    /// Energy of a complete labeling: data terms plus `lambda` times the
    /// disagreement weights.
    pub fn energy(&self, labels: &[SubscriptionLabel]) -> f64 {
        let data: f64 = self.data_cost.iter().zip(labels).map(|(d, l)| d[l.index()]).sum();
        let mut social = 0.0;
        for e in &self.social_edges {
            let (a, b) = (labels[e.from as usize], labels[e.to as usize]);
            social += match (a, b) {
                (SubscriptionLabel::Prepaid, SubscriptionLabel::Postpaid) => e.w01,
                (SubscriptionLabel::Postpaid, SubscriptionLabel::Prepaid) => e.w10,
                _ => 0.0,
            };
        }
        if social == 0.0 {
            data
        } else {
            data + self.lambda * social
        }
    }

    /// Whether `labels` honors every fixed label.
    pub fn respects_fixed(&self, labels: &[SubscriptionLabel]) -> bool {
        self.fixed.iter().zip(labels).all(|(f, l)| f.is_none_or(|f| f == *l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::SubscriptionLabel::*;
    use alloc::vec;

    #[test]
    fn default_weights_follow_out_degree() {
        let p = LabelingProblem::new(vec![UserId(1), UserId(2)], vec![[0.0, 0.0]; 2], &[(0, 1)], vec![2, 1], 1.0)
            .unwrap();
        assert_eq!(p.social_edges[0].w01, 1.0);
        assert_eq!(p.social_edges[0].w10, 0.5);
    }

    #[test]
    fn energy_sums_data_and_disagreement() {
        let p = LabelingProblem::new(
            vec![UserId(1), UserId(2)],
            vec![[1.0, 2.0], [3.0, 0.5]],
            &[(0, 1), (1, 0)],
            vec![2, 4],
            10.0,
        )
        .unwrap();
        assert_eq!(p.energy(&[Prepaid, Prepaid]), 4.0);
        // (0,1) pays w01 = 1/4, (1,0) pays w10 = 1/4.
        assert_eq!(p.energy(&[Prepaid, Postpaid]), 1.5 + 10.0 * 0.5);
        assert_eq!(p.energy(&[Postpaid, Prepaid]), 5.0 + 10.0 * 1.0);
    }

    #[test]
    fn infinite_lambda_without_disagreement_is_finite() {
        let p = LabelingProblem::new(vec![UserId(1), UserId(2)], vec![[1.0, 2.0]; 2], &[(0, 1)], vec![1, 1], f64::INFINITY)
            .unwrap();
        assert_eq!(p.energy(&[Prepaid, Prepaid]), 2.0);
        assert_eq!(p.energy(&[Prepaid, Postpaid]), f64::INFINITY);
    }

    #[test]
    fn validation_catches_bad_tables() {
        assert!(LabelingProblem::new(vec![UserId(1)], vec![[-1.0, 0.0]], &[], vec![0], 1.0).is_err());
        assert!(LabelingProblem::new(vec![UserId(1), UserId(2)], vec![[0.0, 0.0]; 2], &[(0, 1)], vec![0, 1], 1.0).is_err());
        assert!(LabelingProblem::new(vec![UserId(1)], vec![[0.0, 0.0]], &[], vec![0], -1.0).is_err());
        assert!(LabelingProblem::new(vec![UserId(1)], vec![[0.0, 0.0]], &[(0, 0)], vec![1], 1.0).is_err());
    }
}
