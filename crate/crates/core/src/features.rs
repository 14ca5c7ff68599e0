//! Per-user call statistics and postpaid-portion attributes.

use alloc::collections::BTreeMap;

use crate::cdr::CallGraph;
use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};

pub const FEATURE_NAMES: [&str; 5] = ["n_calls_out", "total_dur_out", "mean_dur_out", "std_dur_out", "k_out"];
pub const PORTION_NAMES: [&str; 3] = ["portion_callees", "portion_calls", "portion_seconds"];

/// Outgoing call statistics of one user.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserAttributes {
    pub n_calls_out: u64,
    pub total_dur_out: u64,
    pub mean_dur_out: f64,
    /// Population standard deviation of individual call durations.
    pub std_dur_out: f64,
    pub k_out: u64,
}

impl UserAttributes {
    /// Builds the attributes from raw sums. `n_calls` must be positive.
    pub fn from_sums(n_calls: u64, total: u64, total_sq: u128, k_out: u64) -> Self {
        debug_assert!(n_calls > 0);
        let n = n_calls as u128;
        let t = total as u128;
        // n^2 * var = n * sum(x^2) - (sum x)^2, exact in integers.
        let scaled_var = n * total_sq - t * t;
        let var = scaled_var as f64 / (n * n) as f64;
        UserAttributes {
            n_calls_out: n_calls,
            total_dur_out: total,
            mean_dur_out: total as f64 / n_calls as f64,
            std_dur_out: libm::sqrt(var),
            k_out,
        }
    }
}

/// Fractions of callees, calls and call seconds directed at postpaid users.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PortionAttributes {
    pub callees: f64,
    pub calls: f64,
    pub seconds: f64,
    /// Set when the user's outgoing calls total zero seconds; `seconds` is
    /// then reported as 0.
    pub seconds_undefined: bool,
}

impl PortionAttributes {
    pub fn as_array(&self) -> [f64; 3] {
        [self.callees, self.calls, self.seconds]
    }
}

pub fn extract_attributes(graph: &CallGraph, user: UserId) -> Result<UserAttributes> {
    let i = graph.index_of(user).ok_or(Error::UnknownUser(user))?;
    attributes_at(graph, i)
}

/// Attributes of node `i`, computed from its outgoing call edges only.
pub fn attributes_at(graph: &CallGraph, i: usize) -> Result<UserAttributes> {
    let (mut n, mut total, mut sq, mut k) = (0u64, 0u64, 0u128, 0u64);
    for e in graph.out_edges(i) {
        if e.stats.has_calls() {
            n += e.stats.call_count;
            total += e.stats.call_seconds;
            sq += e.stats.call_seconds_sq;
            k += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoOutgoingCalls(graph.user(i)));
    }
    Ok(UserAttributes::from_sums(n, total, sq, k))
}

pub fn extract_portion_attributes(
    graph: &CallGraph,
    user: UserId,
    labels: &BTreeMap<UserId, SubscriptionLabel>,
) -> Result<PortionAttributes> {
    let i = graph.index_of(user).ok_or(Error::UnknownUser(user))?;
    portion_attributes_at(graph, i, |j| labels.get(&graph.user(j)).copied())
}

/// Portion attributes of node `i`, with callee labels supplied by `label_of`
/// (called with node indices).
pub fn portion_attributes_at<F>(graph: &CallGraph, i: usize, label_of: F) -> Result<PortionAttributes>
where
    F: Fn(usize) -> Option<SubscriptionLabel>,
{
    let (mut k, mut k_po, mut c, mut c_po, mut d, mut d_po) = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64);
    for e in graph.out_edges(i) {
        if !e.stats.has_calls() {
            continue;
        }
        let j = e.target as usize;
        let label = label_of(j).ok_or(Error::MissingCalleeLabel { user: graph.user(i), callee: graph.user(j) })?;
        k += 1;
        c += e.stats.call_count;
        d += e.stats.call_seconds;
        if label == SubscriptionLabel::Postpaid {
            k_po += 1;
            c_po += e.stats.call_count;
            d_po += e.stats.call_seconds;
        }
    }
    if k == 0 {
        return Err(Error::NoOutgoingCalls(graph.user(i)));
    }
    Ok(PortionAttributes {
        callees: k_po as f64 / k as f64,
        calls: c_po as f64 / c as f64,
        seconds: if d == 0 { 0.0 } else { d_po as f64 / d as f64 },
        seconds_undefined: d == 0,
    })
}

/// `ln(1 + x)` of each attribute, in `FEATURE_NAMES` order.
pub fn log_transform(a: &UserAttributes) -> [f64; 5] {
    [
        libm::log1p(a.n_calls_out as f64),
        libm::log1p(a.total_dur_out as f64),
        libm::log1p(a.mean_dur_out),
        libm::log1p(a.std_dur_out),
        libm::log1p(a.k_out as f64),
    ]
}
