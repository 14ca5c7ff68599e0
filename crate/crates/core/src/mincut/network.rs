use alloc::vec::Vec;

use super::problem::LabelingProblem;
use crate::label::SubscriptionLabel;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    /// Finite capacity; ignored when `infinite` is set.
    pub capacity: f64,
    pub infinite: bool,
}

/// Directed network with distinguished source and sink.
///
/// Unbounded arcs carry the sentinel capacity: the sum of all finite
/// capacities plus one, which no finite cut can reach.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Self {
        assert!(source < node_count && sink < node_count && source != sink);
        FlowNetwork { node_count, source, sink, arcs: Vec::new() }
    }

    /// Adds `from -> to`; zero-capacity arcs are dropped.
    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) {
        assert!(from < self.node_count && to < self.node_count);
        assert!(capacity >= 0.0 && capacity.is_finite(), "capacity {capacity}");
        if capacity > 0.0 && from != to {
            self.arcs.push(Arc { from, to, capacity, infinite: false });
        }
    }

    pub fn add_infinite_arc(&mut self, from: usize, to: usize) {
        assert!(from < self.node_count && to < self.node_count);
        if from != to {
            self.arcs.push(Arc { from, to, capacity: 0.0, infinite: true });
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn sentinel(&self) -> f64 {
        self.arcs.iter().filter(|a| !a.infinite).map(|a| a.capacity).sum::<f64>() + 1.0
    }

    /// Effective capacity of an arc, with the sentinel substituted.
    pub fn capacity(&self, arc: &Arc) -> f64 {
        if arc.infinite { self.sentinel() } else { arc.capacity }
    }

    /// Capacities of all arcs, in arc order.
    pub fn capacities(&self) -> Vec<f64> {
        let s = self.sentinel();
        self.arcs.iter().map(|a| if a.infinite { s } else { a.capacity }).collect()
    }

    /// Total capacity of arcs leaving the source side. `source_side[v]` marks
    /// membership of node `v`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let s = self.sentinel();
        self.arcs
            .iter()
            .filter(|a| source_side[a.from] && !source_side[a.to])
            .map(|a| if a.infinite { s } else { a.capacity })
            .sum()
    }
}

/// Flow network of a labeling problem. Users keep their indices; the source
/// is node `n` and the sink node `n + 1`.
pub fn build_labeling_network(problem: &LabelingProblem) -> FlowNetwork {
    let n = problem.node_count();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, t);
    for (u, d) in problem.data_cost.iter().enumerate() {
        match problem.fixed[u] {
            // Postpaid sits on the source side: its source arc must never be cut.
            Some(SubscriptionLabel::Postpaid) => {
                net.add_infinite_arc(s, u);
                net.add_arc(u, t, d[1]);
            }
            Some(SubscriptionLabel::Prepaid) => {
                net.add_arc(s, u, d[0]);
                net.add_infinite_arc(u, t);
            }
            None => {
                net.add_arc(s, u, d[0]);
                net.add_arc(u, t, d[1]);
            }
        }
    }
    let unbounded = problem.lambda.is_infinite();
    for e in &problem.social_edges {
        let (u, v) = (e.from as usize, e.to as usize);
        // u postpaid (source side), v prepaid: arc u -> v is cut.
        // u prepaid, v postpaid: arc v -> u is cut.
        for (a, b, w) in [(u, v, e.w10), (v, u, e.w01)] {
            if w <= 0.0 {
                continue;
            }
            if unbounded {
                net.add_infinite_arc(a, b);
            } else {
                net.add_arc(a, b, problem.lambda * w);
            }
        }
    }
    net
}
