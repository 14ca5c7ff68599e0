//! Call detail records, activity filtering and the directed call graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EventType {
    Call,
    Sms,
}

impl EventType {
    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Call => "call",
            EventType::Sms => "sms",
        }
    }
}

/// One communication event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CdrRecord {
    pub timestamp: u64,
    pub event_type: EventType,
    /// Seconds; always 0 for SMS.
    pub duration: u64,
    pub caller: UserId,
    pub callee: UserId,
}

impl CdrRecord {
    pub fn call(timestamp: u64, duration: u64, caller: u64, callee: u64) -> Self {
        CdrRecord {
            timestamp,
            event_type: EventType::Call,
            duration,
            caller: UserId(caller),
            callee: UserId(callee),
        }
    }

    pub fn sms(timestamp: u64, caller: u64, callee: u64) -> Self {
        CdrRecord {
            timestamp,
            event_type: EventType::Sms,
            duration: 0,
            caller: UserId(caller),
            callee: UserId(callee),
        }
    }

    #[inline]
    pub fn is_call(&self) -> bool {
        self.event_type == EventType::Call
    }

    pub fn validate(&self, window: Option<ObservationWindow>) -> core::result::Result<(), RecordError> {
        if self.caller == self.callee {
            return Err(RecordError::SelfLoop);
        }
        if self.event_type == EventType::Sms && self.duration != 0 {
            return Err(RecordError::SmsWithDuration);
        }
        if let Some(w) = window {
            if !w.contains(self.timestamp) {
                return Err(RecordError::OutsideWindow);
            }
        }
        Ok(())
    }
}

/// Half-open `[start, end)` range of accepted timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationWindow {
    pub start: u64,
    pub end: u64,
}

impl ObservationWindow {
    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t < self.end
    }
}

/// Why a single CDR line was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    FieldCount(usize),
    BadTimestamp,
    BadEventType,
    BadDuration,
    NegativeDuration,
    BadUserId,
    SelfLoop,
    SmsWithDuration,
    OutsideWindow,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordError::FieldCount(n) => write!(f, "expected 5 fields, found {n}"),
            RecordError::BadTimestamp => f.write_str("timestamp is not a non-negative integer"),
            RecordError::BadEventType => f.write_str("event type must be `call` or `sms`"),
            RecordError::BadDuration => f.write_str("duration is not an integer"),
            RecordError::NegativeDuration => f.write_str("negative duration"),
            RecordError::BadUserId => f.write_str("user id is not a non-negative 64-bit integer"),
            RecordError::SelfLoop => f.write_str("caller equals callee"),
            RecordError::SmsWithDuration => f.write_str("sms event with non-zero duration"),
            RecordError::OutsideWindow => f.write_str("timestamp outside the observation window"),
        }
    }
}

/// Parses one `csv-v1` line: `timestamp,event_type,duration,caller,callee`.
pub fn parse_line(line: &str, window: Option<ObservationWindow>) -> core::result::Result<CdrRecord, RecordError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut fields = [""; 5];
    let mut n = 0;
    for field in line.split(',') {
        if n < 5 {
            fields[n] = field.trim();
        }
        n += 1;
    }
    if n != 5 {
        return Err(RecordError::FieldCount(n));
    }
    let timestamp = fields[0].parse::<u64>().map_err(|_| RecordError::BadTimestamp)?;
    let event_type = if fields[1].eq_ignore_ascii_case("call") {
        EventType::Call
    } else if fields[1].eq_ignore_ascii_case("sms") {
        EventType::Sms
    } else {
        return Err(RecordError::BadEventType);
    };
    let duration = fields[2].parse::<i64>().map_err(|_| RecordError::BadDuration)?;
    if duration < 0 {
        return Err(RecordError::NegativeDuration);
    }
    let caller = fields[3].parse::<u64>().map_err(|_| RecordError::BadUserId)?;
    let callee = fields[4].parse::<u64>().map_err(|_| RecordError::BadUserId)?;
    let rec = CdrRecord {
        timestamp,
        event_type,
        duration: duration as u64,
        caller: UserId(caller),
        callee: UserId(callee),
    };
    rec.validate(window)?;
    Ok(rec)
}

impl fmt::Display for CdrRecord {
    /// Formats as a `csv-v1` line without the trailing newline.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.timestamp,
            self.event_type.as_str(),
            self.duration,
            self.caller,
            self.callee
        )
    }
}

/// Inclusive bounds on a user's total outgoing call seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FilterPolicy {
    min_total_call_seconds: u64,
    max_total_call_seconds: u64,
}

impl FilterPolicy {
    pub fn new(min_total_call_seconds: u64, max_total_call_seconds: u64) -> Result<Self> {
        if min_total_call_seconds >= max_total_call_seconds {
            return Err(Error::InvalidFilterPolicy {
                min: min_total_call_seconds,
                max: max_total_call_seconds,
            });
        }
        Ok(FilterPolicy { min_total_call_seconds, max_total_call_seconds })
    }

    pub fn min_total_call_seconds(&self) -> u64 {
        self.min_total_call_seconds
    }

    pub fn max_total_call_seconds(&self) -> u64 {
        self.max_total_call_seconds
    }

    pub fn admits(&self, total_seconds: u64) -> bool {
        self.min_total_call_seconds <= total_seconds && total_seconds <= self.max_total_call_seconds
    }
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy { min_total_call_seconds: 10, max_total_call_seconds: 100_000 }
    }
}

/// Users with at least one outgoing call whose total outgoing call duration
/// lies within the policy bounds.
pub fn filter_users<'a, I>(records: I, policy: &FilterPolicy) -> BTreeSet<UserId>
where
    I: IntoIterator<Item = &'a CdrRecord>,
{
    let mut totals: BTreeMap<UserId, u64> = BTreeMap::new();
    for r in records {
        if r.is_call() {
            *totals.entry(r.caller).or_insert(0) += r.duration;
        }
    }
    totals
        .into_iter()
        .filter(|&(_, d)| policy.admits(d))
        .map(|(u, _)| u)
        .collect()
}

/// Aggregated events along one directed pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeStats {
    pub call_count: u64,
    pub call_seconds: u64,
    /// Sum of squared call durations, for per-user duration spread.
    pub call_seconds_sq: u128,
    pub sms_count: u64,
}

impl EdgeStats {
    pub fn add(&mut self, r: &CdrRecord) {
        match r.event_type {
            EventType::Call => {
                self.call_count += 1;
                self.call_seconds += r.duration;
                self.call_seconds_sq += (r.duration as u128) * (r.duration as u128);
            }
            EventType::Sms => self.sms_count += 1,
        }
    }

    pub fn merge(&mut self, other: &EdgeStats) {
        self.call_count += other.call_count;
        self.call_seconds += other.call_seconds;
        self.call_seconds_sq += other.call_seconds_sq;
        self.sms_count += other.sms_count;
    }

    pub fn has_calls(&self) -> bool {
        self.call_count > 0
    }
}

/// Which edges survive graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeScope {
    /// Both endpoints kept: the intra-company graph.
    #[default]
    BothKept,
    /// At least one endpoint kept; the other endpoint becomes an
    /// unclassified node.
    AnyKept,
}

/// Partial edge map. Accumulators built over disjoint slices of a record
/// stream can be merged in any order.
#[derive(Debug, Clone, Default)]
pub struct EdgeAccumulator {
    edges: BTreeMap<(UserId, UserId), EdgeStats>,
}

impl EdgeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, r: &CdrRecord) {
        if r.caller == r.callee {
            return;
        }
        self.edges.entry((r.caller, r.callee)).or_default().add(r);
    }

    pub fn merge(&mut self, other: EdgeAccumulator) {
        for (k, s) in other.edges {
            self.edges.entry(k).or_default().merge(&s);
        }
    }

    pub fn finish(self, kept: &BTreeSet<UserId>, scope: EdgeScope) -> CallGraph {
        let retained: Vec<((UserId, UserId), EdgeStats)> = self
            .edges
            .into_iter()
            .filter(|((u, v), _)| match scope {
                EdgeScope::BothKept => kept.contains(u) && kept.contains(v),
                EdgeScope::AnyKept => kept.contains(u) || kept.contains(v),
            })
            .collect();

        let mut nodes: Vec<UserId> = kept.iter().copied().collect();
        if scope == EdgeScope::AnyKept {
            for ((u, v), _) in &retained {
                nodes.push(*u);
                nodes.push(*v);
            }
            nodes.sort_unstable();
            nodes.dedup();
        }
        let classified = nodes.iter().map(|u| kept.contains(u)).collect();
        CallGraph::from_sorted_parts(nodes, classified, retained)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub target: u32,
    pub stats: EdgeStats,
}

/// Directed weighted communication graph over dense node indices.
///
/// Nodes are sorted by `UserId`. Out-edges and in-neighbour lists are stored
/// in CSR form, each sorted by neighbour index.
#[derive(Debug, Clone, PartialEq)]
pub struct CallGraph {
    nodes: Vec<UserId>,
    classified: Vec<bool>,
    labels: Vec<Option<SubscriptionLabel>>,
    out_offsets: Vec<usize>,
    out_edges: Vec<Edge>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl CallGraph {
    fn from_sorted_parts(
        nodes: Vec<UserId>,
        classified: Vec<bool>,
        edges: Vec<((UserId, UserId), EdgeStats)>,
    ) -> Self {
        let n = nodes.len();
        let idx = |u: &UserId| nodes.binary_search(u).expect("edge endpoint is a node") as u32;
        let mut out_offsets = alloc::vec![0usize; n + 1];
        let mut in_offsets = alloc::vec![0usize; n + 1];
        let mut out_edges = Vec::with_capacity(edges.len());
        let mut in_pairs: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        // `edges` comes out of a BTreeMap keyed by (caller, callee), which
        // matches node order, so out-edges are already grouped and sorted.
        for ((u, v), stats) in &edges {
            let (ui, vi) = (idx(u), idx(v));
            out_offsets[ui as usize + 1] += 1;
            in_offsets[vi as usize + 1] += 1;
            out_edges.push(Edge { target: vi, stats: *stats });
            in_pairs.push((vi, ui));
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        in_pairs.sort_unstable();
        let in_sources = in_pairs.into_iter().map(|(_, u)| u).collect();
        CallGraph {
            labels: alloc::vec![None; n],
            nodes,
            classified,
            out_offsets,
            out_edges,
            in_offsets,
            in_sources,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.len()
    }

    pub fn nodes(&self) -> &[UserId] {
        &self.nodes
    }

    #[inline]
    pub fn user(&self, i: usize) -> UserId {
        self.nodes[i]
    }

    pub fn index_of(&self, u: UserId) -> Option<usize> {
        self.nodes.binary_search(&u).ok()
    }

    pub fn is_classified(&self, i: usize) -> bool {
        self.classified[i]
    }

    /// Indices of classified nodes, in id order.
    pub fn classified_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| self.classified[i])
    }

    #[inline]
    pub fn out_edges(&self, i: usize) -> &[Edge] {
        &self.out_edges[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Every directed edge as `(source index, edge)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        (0..self.nodes.len()).flat_map(move |i| self.out_edges(i).iter().map(move |e| (i, e)))
    }

    #[inline]
    pub fn in_neighbors(&self, i: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    /// Number of distinct callees: out-neighbours reached by at least one call.
    /// SMS-only contacts do not count.
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_edges(i).iter().filter(|e| e.stats.has_calls()).count()
    }

    /// Sorted, deduplicated union of in- and out-neighbours joined by calls.
    pub fn call_neighbors(&self, i: usize) -> Vec<u32> {
        let mut nb: Vec<u32> = self
            .out_edges(i)
            .iter()
            .filter(|e| e.stats.has_calls())
            .map(|e| e.target)
            .collect();
        for &u in self.in_neighbors(i) {
            if self.edge(u as usize, i).is_some_and(|s| s.has_calls()) {
                nb.push(u);
            }
        }
        nb.sort_unstable();
        nb.dedup();
        nb
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&EdgeStats> {
        let out = self.out_edges(from);
        out.binary_search_by_key(&(to as u32), |e| e.target).ok().map(|k| &out[k].stats)
    }

    pub fn label(&self, i: usize) -> Option<SubscriptionLabel> {
        self.labels[i]
    }

    pub fn set_label(&mut self, i: usize, label: Option<SubscriptionLabel>) {
        self.labels[i] = label;
    }

    /// Attaches ground-truth labels; users absent from the map keep `None`.
    pub fn attach_labels(&mut self, truth: &BTreeMap<UserId, SubscriptionLabel>) {
        for (i, u) in self.nodes.iter().enumerate() {
            self.labels[i] = truth.get(u).copied();
        }
    }

    /// Sum of `call_count` over all edges.
    pub fn total_calls(&self) -> u64 {
        self.out_edges.iter().map(|e| e.stats.call_count).sum()
    }
}

/// Aggregates the record stream into a graph over `kept_users`, retaining
/// only edges whose endpoints are both kept.
pub fn build_call_graph<'a, I>(records: I, kept_users: &BTreeSet<UserId>) -> CallGraph
where
    I: IntoIterator<Item = &'a CdrRecord>,
{
    build_call_graph_scoped(records, kept_users, EdgeScope::BothKept)
}

pub fn build_call_graph_scoped<'a, I>(records: I, kept_users: &BTreeSet<UserId>, scope: EdgeScope) -> CallGraph
where
    I: IntoIterator<Item = &'a CdrRecord>,
{
    let mut acc = EdgeAccumulator::new();
    for r in records {
        acc.add(r);
    }
    acc.finish(kept_users, scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn all_users(records: &[CdrRecord]) -> BTreeSet<UserId> {
        records.iter().flat_map(|r| [r.caller, r.callee]).collect()
    }

    #[test]
    fn parses_call_and_sms_lines() {
        assert_eq!(parse_line("1000,call,32,7,9", None), Ok(CdrRecord::call(1000, 32, 7, 9)));
        assert_eq!(parse_line("1000,sms,0,7,9", None), Ok(CdrRecord::sms(1000, 7, 9)));
        assert_eq!(parse_line("1000,CALL,32,7,9\r\n", None), Ok(CdrRecord::call(1000, 32, 7, 9)));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(parse_line("1000,call,-5,7,9", None), Err(RecordError::NegativeDuration));
        assert_eq!(parse_line("1000,call,5,7,7", None), Err(RecordError::SelfLoop));
        assert_eq!(parse_line("1000,sms,3,7,9", None), Err(RecordError::SmsWithDuration));
        assert_eq!(parse_line("1000,fax,3,7,9", None), Err(RecordError::BadEventType));
        assert_eq!(parse_line("1000,call,3,7", None), Err(RecordError::FieldCount(4)));
        assert_eq!(parse_line("x,call,3,7,9", None), Err(RecordError::BadTimestamp));
        let w = ObservationWindow { start: 0, end: 1000 };
        assert_eq!(parse_line("1000,call,3,7,9", Some(w)), Err(RecordError::OutsideWindow));
    }

    #[test]
    fn display_round_trips() {
        let r = CdrRecord::call(5, 60, 1, 2);
        assert_eq!(parse_line(&alloc::format!("{r}"), None), Ok(r));
    }

    #[test]
    fn filter_bounds_are_inclusive() {
        let p = FilterPolicy::default();
        let recs = vec![
            CdrRecord::call(0, 9, 1, 100),
            CdrRecord::call(0, 10, 2, 100),
            CdrRecord::call(0, 100_000, 3, 100),
            CdrRecord::call(0, 100_001, 4, 100),
            CdrRecord::call(0, 50_000, 5, 100),
            CdrRecord::call(0, 50_001, 5, 101),
        ];
        let kept = filter_users(&recs, &p);
        assert_eq!(kept.into_iter().collect::<Vec<_>>(), vec![UserId(2), UserId(3)]);
    }

    #[test]
    fn callee_only_users_are_not_classified() {
        let p = FilterPolicy::new(0, 10).unwrap();
        let recs = vec![CdrRecord::call(0, 5, 1, 2), CdrRecord::sms(0, 3, 1)];
        let kept = filter_users(&recs, &p);
        assert_eq!(kept.into_iter().collect::<Vec<_>>(), vec![UserId(1)]);
    }

    #[test]
    fn policy_requires_min_below_max() {
        assert!(FilterPolicy::new(10, 10).is_err());
        assert!(FilterPolicy::new(0, 1).is_ok());
    }

    #[test]
    fn aggregates_repeated_calls() {
        let recs = vec![CdrRecord::call(0, 10, 7, 9), CdrRecord::call(1, 10, 7, 9), CdrRecord::call(2, 10, 7, 9)];
        let g = build_call_graph(&recs, &all_users(&recs));
        let s = g.edge(g.index_of(UserId(7)).unwrap(), g.index_of(UserId(9)).unwrap()).unwrap();
        assert_eq!((s.call_count, s.call_seconds, s.call_seconds_sq), (3, 30, 300));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edges_are_directed() {
        let recs = vec![CdrRecord::call(0, 10, 7, 9), CdrRecord::call(0, 10, 9, 7)];
        let g = build_call_graph(&recs, &all_users(&recs));
        assert_eq!(g.edge_count(), 2);
        let (a, b) = (g.index_of(UserId(7)).unwrap(), g.index_of(UserId(9)).unwrap());
        assert!(g.edge(a, b).is_some() && g.edge(b, a).is_some());
        assert_eq!(g.in_neighbors(a), &[b as u32]);
    }

    #[test]
    fn out_degree_counts_distinct_callees() {
        let mut recs: Vec<CdrRecord> = (0..5).map(|k| CdrRecord::call(0, 10, 1, 10 + k)).collect();
        recs.push(CdrRecord::call(0, 10, 1, 10));
        recs.push(CdrRecord::sms(0, 1, 99));
        let g = build_call_graph(&recs, &all_users(&recs));
        let u = g.index_of(UserId(1)).unwrap();
        assert_eq!(g.out_degree(u), 5);
        assert_eq!(g.out_edges(u).len(), 6);
    }

    #[test]
    fn both_kept_scope_drops_edges_to_filtered_users() {
        let recs = vec![CdrRecord::call(0, 10, 1, 2), CdrRecord::call(0, 10, 1, 3)];
        let kept: BTreeSet<UserId> = [UserId(1), UserId(2)].into_iter().collect();
        let g = build_call_graph(&recs, &kept);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);

        let g = build_call_graph_scoped(&recs, &kept, EdgeScope::AnyKept);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(!g.is_classified(g.index_of(UserId(3)).unwrap()));
    }

    #[test]
    fn accumulators_merge_commutatively() {
        let recs: Vec<CdrRecord> = (0..40).map(|k| CdrRecord::call(k, k % 7, k % 5, 5 + k % 3)).collect();
        let kept = all_users(&recs);
        let mut a = EdgeAccumulator::new();
        let mut b = EdgeAccumulator::new();
        for (i, r) in recs.iter().enumerate() {
            if i % 2 == 0 { a.add(r) } else { b.add(r) }
        }
        let mut ab = a.clone();
        ab.merge(b.clone());
        b.merge(a);
        let (g1, g2) = (ab.finish(&kept, EdgeScope::BothKept), b.finish(&kept, EdgeScope::BothKept));
        let e1: Vec<_> = g1.edges().map(|(u, e)| (u, *e)).collect();
        let e2: Vec<_> = g2.edges().map(|(u, e)| (u, *e)).collect();
        assert_eq!(e1, e2);
    }
}
