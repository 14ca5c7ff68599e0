//! Binary subscription labeling as an s-t minimum cut.
//!
//! Node `u` pays `D_u(f)` for label `f` and every social edge pays
//! `lambda * w(f_u, f_v)` when its endpoints disagree. The flow network has a
//! source arc `s -> u` of capacity `D_u(prepaid)`, a sink arc `u -> t` of
//! capacity `D_u(postpaid)` and two opposite arcs per social edge. Nodes on
//! the sink side of the cut are prepaid, nodes on the source side postpaid,
//! so the capacity of every cut equals the energy of the labeling it induces.

mod brute;
mod costs;
mod network;
mod problem;
mod prune;
mod push_relabel;
mod solve;

pub use brute::{brute_force_labeling, BRUTE_FORCE_MAX_NODES};
pub use costs::{data_cost, smoothness_cost};
pub use network::{build_labeling_network, Arc, FlowNetwork};
pub use problem::{LabelingProblem, SmoothnessWeight, SocialEdge};
pub use prune::{prune_fix_labels, prune_fix_labels_indexed, DEFAULT_TAU1, DEFAULT_TAU2};
pub use push_relabel::{push_relabel_maxflow, CutSide, MaxFlow};
pub use solve::{solve_labeling, LabelingSolution};

/// Default smoothness trade-off.
pub const DEFAULT_LAMBDA: f64 = 100.0;
