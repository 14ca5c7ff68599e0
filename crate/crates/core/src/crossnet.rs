//! Subscription inference for users of another operator.
//!
//! Side A holds the observing operator's users (labels known), side B the
//! external users. Only A<->B events are visible.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng as _, SeedableRng};

use crate::cdr::CdrRecord;
use crate::classify::{train_and_score, BaselineReport, ConfusionMatrix, TrainTestSplit};
use crate::error::{Error, Result};
use crate::features::UserAttributes;
use crate::label::{SubscriptionLabel, UserId};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for, stream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    A,
    B,
}

/// Directed bipartite graph between the two operators. Edge lists are
/// sorted and free of duplicates; `ab` holds `(a, b)` index pairs for calls
/// from A to B, `ba` holds `(b, a)` pairs for calls from B to A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    a_users: Vec<UserId>,
    a_labels: Vec<SubscriptionLabel>,
    b_users: Vec<UserId>,
    ab: Vec<(u32, u32)>,
    ba: Vec<(u32, u32)>,
}

impl BipartiteGraph {
    /// `edges` are directed `(from, to)` user pairs; each must join the two
    /// sides. Duplicates collapse.
    pub fn new(
        side_a: &BTreeMap<UserId, SubscriptionLabel>,
        side_b: &BTreeSet<UserId>,
        edges: impl IntoIterator<Item = (UserId, UserId)>,
    ) -> Result<Self> {
        if let Some(u) = side_b.iter().find(|u| side_a.contains_key(u)) {
            return Err(Error::InvalidBipartite(format!("user {u} is on both sides")));
        }
        let a_users: Vec<UserId> = side_a.keys().copied().collect();
        let a_labels = side_a.values().copied().collect();
        let b_users: Vec<UserId> = side_b.iter().copied().collect();
        let (mut ab, mut ba) = (Vec::new(), Vec::new());
        for (from, to) in edges {
            let a_from = a_users.binary_search(&from).ok();
            let b_from = b_users.binary_search(&from).ok();
            let a_to = a_users.binary_search(&to).ok();
            let b_to = b_users.binary_search(&to).ok();
            match (a_from, b_from, a_to, b_to) {
                (Some(a), _, _, Some(b)) => ab.push((a as u32, b as u32)),
                (_, Some(b), Some(a), _) => ba.push((b as u32, a as u32)),
                _ => {
                    return Err(Error::InvalidBipartite(format!(
                        "edge {from} -> {to} does not join side A and side B"
                    )))
                }
            }
        }
        Ok(Self::from_indexed(a_users, a_labels, b_users, ab, ba))
    }

    fn from_indexed(
        a_users: Vec<UserId>,
        a_labels: Vec<SubscriptionLabel>,
        b_users: Vec<UserId>,
        mut ab: Vec<(u32, u32)>,
        mut ba: Vec<(u32, u32)>,
    ) -> Self {
        ab.sort_unstable();
        ab.dedup();
        ba.sort_unstable();
        ba.dedup();
        BipartiteGraph { a_users, a_labels, b_users, ab, ba }
    }

    pub fn a_users(&self) -> &[UserId] {
        &self.a_users
    }

    pub fn a_labels(&self) -> &[SubscriptionLabel] {
        &self.a_labels
    }

    pub fn b_users(&self) -> &[UserId] {
        &self.b_users
    }

    pub fn side_a(&self) -> BTreeMap<UserId, SubscriptionLabel> {
        self.a_users.iter().copied().zip(self.a_labels.iter().copied()).collect()
    }

    pub fn a_to_b(&self) -> &[(u32, u32)] {
        &self.ab
    }

    pub fn b_to_a(&self) -> &[(u32, u32)] {
        &self.ba
    }

    pub fn edge_count(&self) -> usize {
        self.ab.len() + self.ba.len()
    }

    /// All edges as directed user pairs, A->B first.
    pub fn edges(&self) -> impl Iterator<Item = (UserId, UserId)> + '_ {
        let ab = self.ab.iter().map(|&(a, b)| (self.a_users[a as usize], self.b_users[b as usize]));
        let ba = self.ba.iter().map(|&(b, a)| (self.b_users[b as usize], self.a_users[a as usize]));
        ab.chain(ba)
    }

    pub fn side_of(&self, u: UserId) -> Option<Side> {
        if self.a_users.binary_search(&u).is_ok() {
            Some(Side::A)
        } else if self.b_users.binary_search(&u).is_ok() {
            Some(Side::B)
        } else {
            None
        }
    }

    /// Fraction of side-A users labeled postpaid.
    pub fn postpaid_balance(&self) -> f64 {
        if self.a_labels.is_empty() {
            return 0.5;
        }
        let post = self.a_labels.iter().filter(|&&l| l == SubscriptionLabel::Postpaid).count();
        post as f64 / self.a_labels.len() as f64
    }

    /// In- and out-degree of every node: `(a_in, a_out, b_in, b_out)`.
    pub fn degrees(&self) -> (Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>) {
        let (na, nb) = (self.a_users.len(), self.b_users.len());
        let (mut a_in, mut a_out, mut b_in, mut b_out) =
            (alloc::vec![0; na], alloc::vec![0; na], alloc::vec![0; nb], alloc::vec![0; nb]);
        for &(a, b) in &self.ab {
            a_out[a as usize] += 1;
            b_in[b as usize] += 1;
        }
        for &(b, a) in &self.ba {
            b_out[b as usize] += 1;
            a_in[a as usize] += 1;
        }
        (a_in, a_out, b_in, b_out)
    }

    pub fn diagnostics(&self) -> BipartiteDiagnostics {
        let ab: BTreeSet<(u32, u32)> = self.ab.iter().copied().collect();
        let reciprocated = self.ba.iter().filter(|&&(b, a)| ab.contains(&(a, b))).count();
        let links = self.edge_count();
        let nb = self.b_users.len().max(1) as f64;
        let mut b_neighbors: BTreeSet<(u32, u32)> = self.ab.iter().map(|&(a, b)| (b, a)).collect();
        b_neighbors.extend(self.ba.iter().copied());
        BipartiteDiagnostics {
            links,
            bidirectional_fraction: if links == 0 { 0.0 } else { (2 * reciprocated) as f64 / links as f64 },
            mean_b_in_degree: self.ab.len() as f64 / nb,
            mean_b_out_degree: self.ba.len() as f64 / nb,
            mean_b_degree: b_neighbors.len() as f64 / nb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BipartiteDiagnostics {
    pub links: usize,
    /// Fraction of directed links whose reverse link also exists.
    pub bidirectional_fraction: f64,
    pub mean_b_in_degree: f64,
    pub mean_b_out_degree: f64,
    /// Mean number of distinct A-neighbours of a B user.
    pub mean_b_degree: f64,
}

/// Per-A-user statistics of outgoing calls to B users only. A users without
/// such calls are left out.
pub fn inter_company_attributes<'a, I>(
    cdrs: I,
    side_a: &BTreeSet<UserId>,
    side_b: &BTreeSet<UserId>,
) -> Result<BTreeMap<UserId, UserAttributes>>
where
    I: IntoIterator<Item = &'a CdrRecord>,
{
    if let Some(u) = side_a.intersection(side_b).next() {
        return Err(Error::InvalidBipartite(format!("user {u} is on both sides")));
    }
    let mut pairs: BTreeMap<(UserId, UserId), (u64, u64, u128)> = BTreeMap::new();
    for r in cdrs {
        if r.is_call() && side_a.contains(&r.caller) && side_b.contains(&r.callee) {
            let e = pairs.entry((r.caller, r.callee)).or_default();
            e.0 += 1;
            e.1 += r.duration;
            e.2 += (r.duration as u128) * (r.duration as u128);
        }
    }
    let mut out = BTreeMap::new();
    let mut iter = pairs.into_iter().peekable();
    while let Some(((a, _), (n, t, sq))) = iter.next() {
        let (mut n, mut t, mut sq, mut k) = (n, t, sq, 1u64);
        while let Some(((a2, _), (n2, t2, sq2))) = iter.peek() {
            if *a2 != a {
                break;
            }
            n += n2;
            t += t2;
            sq += sq2;
            k += 1;
            iter.next();
        }
        out.insert(a, UserAttributes::from_sums(n, t, sq, k));
    }
    Ok(out)
}

/// NB and AdaBoost on inter-company attributes of A users, scored on the
/// split's held-out users.
pub fn classify_cross(
    users: &[UserId],
    features: &Matrix,
    labels: &[SubscriptionLabel],
    split: &TrainTestSplit,
    rounds: usize,
) -> Result<BaselineReport> {
    train_and_score(users, features, labels, split, rounds)
}

/// Majority label of each target node's incoming ties from the source side.
/// Ties and nodes without incoming ties draw postpaid with probability
/// `balance`.
///
/// `ties` are `(source index, target index)` pairs.
pub fn majority_vote(
    ties: &[(u32, u32)],
    target_count: usize,
    source_labels: &[SubscriptionLabel],
    balance: f64,
    rng: &mut Rng,
) -> Vec<SubscriptionLabel> {
    let mut votes = alloc::vec![[0u32; 2]; target_count];
    for &(s, t) in ties {
        votes[t as usize][source_labels[s as usize].index()] += 1;
    }
    votes
        .into_iter()
        .map(|[pre, post]| {
            if post > pre {
                SubscriptionLabel::Postpaid
            } else if pre > post {
                SubscriptionLabel::Prepaid
            } else if rng.random_bool(balance.clamp(0.0, 1.0)) {
                SubscriptionLabel::Postpaid
            } else {
                SubscriptionLabel::Prepaid
            }
        })
        .collect()
}

/// Labels of the `target` side from known labels of the other side.
pub fn majority_infer(
    graph: &BipartiteGraph,
    target: Side,
    source_labels: &[SubscriptionLabel],
    balance: f64,
    rng_seed: u64,
) -> Vec<SubscriptionLabel> {
    let mut rng = rng_for(rng_seed, stream::PROPAGATION, target as u64);
    match target {
        Side::B => majority_vote(&graph.ab, graph.b_users.len(), source_labels, balance, &mut rng),
        Side::A => majority_vote(&graph.ba, graph.a_users.len(), source_labels, balance, &mut rng),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutcome {
    pub b_labels: Vec<SubscriptionLabel>,
    pub a_recovered: Vec<SubscriptionLabel>,
    pub confusion: ConfusionMatrix,
}

impl RealizationOutcome {
    pub fn accuracy(&self) -> f64 {
        self.confusion.accuracy()
    }
}

/// A users that take part in the bipartite graph; only these are scored.
pub fn scored_a_users(graph: &BipartiteGraph) -> Vec<bool> {
    let mut linked = alloc::vec![false; graph.a_users.len()];
    for &(a, _) in &graph.ab {
        linked[a as usize] = true;
    }
    for &(_, a) in &graph.ba {
        linked[a as usize] = true;
    }
    linked
}

/// One two-way pass: B from true A labels over A->B ties, then A from the
/// inferred B labels over B->A ties.
pub fn propagation_realization(graph: &BipartiteGraph, balance: f64, seed: u64) -> RealizationOutcome {
    let mut rng = Rng::seed_from_u64(seed);
    let b_labels = majority_vote(&graph.ab, graph.b_users.len(), &graph.a_labels, balance, &mut rng);
    let a_recovered = majority_vote(&graph.ba, graph.a_users.len(), &b_labels, balance, &mut rng);
    let mut confusion = ConfusionMatrix::default();
    for (i, linked) in scored_a_users(graph).into_iter().enumerate() {
        if linked {
            confusion.record(graph.a_labels[i], a_recovered[i]);
        }
    }
    RealizationOutcome { b_labels, a_recovered, confusion }
}

/// Seed of realization `r` of a propagation run.
pub fn realization_seed(rng_seed: u64, r: usize) -> u64 {
    derive_seed(rng_seed, stream::PROPAGATION, r as u64)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropagationResult {
    /// Inferred B labels of the first realization.
    pub b_labels: BTreeMap<UserId, SubscriptionLabel>,
    /// Recovered A labels of the first realization.
    pub a_recovered: BTreeMap<UserId, SubscriptionLabel>,
    pub a_accuracy: f64,
    pub accuracy_std: f64,
    pub realizations: usize,
    pub per_realization: Vec<f64>,
    /// Summed over realizations.
    pub confusion: ConfusionMatrix,
}

/// Folds per-realization outcomes (in realization order) into a result.
pub fn summarize_realizations(graph: &BipartiteGraph, outcomes: Vec<RealizationOutcome>) -> PropagationResult {
    let per: Vec<f64> = outcomes.iter().map(|o| o.accuracy()).collect();
    let (mean, std) = mean_std(&per);
    let mut confusion = ConfusionMatrix::default();
    for o in &outcomes {
        confusion.merge(&o.confusion);
    }
    let first = outcomes.into_iter().next();
    let (b_labels, a_recovered) = match first {
        Some(o) => (
            graph.b_users.iter().copied().zip(o.b_labels).collect(),
            graph.a_users.iter().copied().zip(o.a_recovered).collect(),
        ),
        None => (BTreeMap::new(), BTreeMap::new()),
    };
    PropagationResult {
        b_labels,
        a_recovered,
        a_accuracy: mean,
        accuracy_std: std,
        realizations: per.len(),
        per_realization: per,
        confusion,
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

pub fn two_way_propagation(graph: &BipartiteGraph, realizations: usize, rng_seed: u64) -> Result<PropagationResult> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let balance = graph.postpaid_balance();
    let outcomes = (0..realizations)
        .map(|r| propagation_realization(graph, balance, realization_seed(rng_seed, r)))
        .collect();
    Ok(summarize_realizations(graph, outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapStats {
    pub accepted: usize,
    pub attempted: usize,
}

/// Attempts allowed per requested swap before giving up on graphs where
/// few swaps are feasible.
pub const MAX_ATTEMPTS_PER_SWAP: usize = 100;

/// Configuration-model null: double-edge swaps between random pairs of
/// same-direction edges, `(a1, b1), (a2, b2) -> (a1, b2), (a2, b1)`, rejecting
/// swaps that would duplicate an edge. Runs until `n_swaps` swaps were
/// accepted or `MAX_ATTEMPTS_PER_SWAP * n_swaps` attempts were made. Every
/// node keeps its in- and out-degree.
pub fn degree_preserving_randomize(graph: &BipartiteGraph, n_swaps: usize, rng_seed: u64) -> (BipartiteGraph, SwapStats) {
    let mut rng = rng_for(rng_seed, stream::RANDOMIZE, 0);
    let mut ab = graph.ab.clone();
    let mut ba = graph.ba.clone();
    let (na, nb) = (graph.a_users.len(), graph.b_users.len());
    let mut ab_adj = adjacency(&ab, na);
    let mut ba_adj = adjacency(&ba, nb);
    let mut stats = SwapStats { accepted: 0, attempted: 0 };
    let swappable = |v: &Vec<(u32, u32)>| v.len() >= 2;
    if !swappable(&ab) && !swappable(&ba) {
        return (graph.clone(), stats);
    }
    let max_attempts = n_swaps.saturating_mul(MAX_ATTEMPTS_PER_SWAP);
    let total = (ab.len() + ba.len()) as u64;
    while stats.accepted < n_swaps && stats.attempted < max_attempts {
        stats.attempted += 1;
        let pick_ab = if !swappable(&ba) {
            true
        } else if !swappable(&ab) {
            false
        } else {
            rng.random_range(0..total) < ab.len() as u64
        };
        // Both lists store pairs with the swapped endpoint second.
        let (edges, adj) = if pick_ab { (&mut ab, &mut ab_adj) } else { (&mut ba, &mut ba_adj) };
        let i = rng.random_range(0..edges.len());
        let j = rng.random_range(0..edges.len());
        let ((x1, y1), (x2, y2)) = (edges[i], edges[j]);
        if x1 == x2 || y1 == y2 || adj[x1 as usize].contains(&y2) || adj[x2 as usize].contains(&y1) {
            continue;
        }
        replace(&mut adj[x1 as usize], y1, y2);
        replace(&mut adj[x2 as usize], y2, y1);
        edges[i] = (x1, y2);
        edges[j] = (x2, y1);
        stats.accepted += 1;
    }
    // ba stores (b, a): the swap exchanged A endpoints between B callers,
    // which preserves B out-degree and A in-degree just the same.
    let out = BipartiteGraph::from_indexed(
        graph.a_users.clone(),
        graph.a_labels.clone(),
        graph.b_users.clone(),
        ab,
        ba,
    );
    (out, stats)
}

fn adjacency(edges: &[(u32, u32)], n: usize) -> Vec<Vec<u32>> {
    let mut adj = alloc::vec![Vec::new(); n];
    for &(x, y) in edges {
        adj[x as usize].push(y);
    }
    adj
}

fn replace(list: &mut [u32], old: u32, new: u32) {
    if let Some(slot) = list.iter_mut().find(|y| **y == old) {
        *slot = new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::SubscriptionLabel::*;
    use alloc::vec;

    fn graph(a: &[(u64, SubscriptionLabel)], b: &[u64], edges: &[(u64, u64)]) -> BipartiteGraph {
        BipartiteGraph::new(
            &a.iter().map(|&(u, l)| (UserId(u), l)).collect(),
            &b.iter().map(|&u| UserId(u)).collect(),
            edges.iter().map(|&(x, y)| (UserId(x), UserId(y))),
        )
        .unwrap()
    }

    #[test]
    fn rejects_edges_within_a_side() {
        let a = [(UserId(1), Prepaid), (UserId(2), Prepaid)].into_iter().collect();
        let b = [UserId(10)].into_iter().collect();
        assert!(BipartiteGraph::new(&a, &b, [(UserId(1), UserId(2))]).is_err());
        assert!(BipartiteGraph::new(&a, &b, [(UserId(1), UserId(99))]).is_err());
        let both = [UserId(1)].into_iter().collect();
        assert!(BipartiteGraph::new(&a, &both, []).is_err());
    }

    #[test]
    fn majority_and_ties() {
        let mut rng = rng_for(1, 0, 0);
        let src = [Postpaid, Postpaid, Prepaid];
        let out = majority_vote(&[(0, 0), (1, 0), (2, 0)], 1, &src, 0.5, &mut rng);
        assert_eq!(out, vec![Postpaid]);
        // tie with balance 1.0 / 0.0 is deterministic
        let out = majority_vote(&[(0, 0), (2, 0)], 2, &src, 1.0, &mut rng);
        assert_eq!(out, vec![Postpaid, Postpaid]);
        let out = majority_vote(&[(0, 0), (2, 0)], 2, &src, 0.0, &mut rng);
        assert_eq!(out, vec![Prepaid, Prepaid]);
    }

    #[test]
    fn tie_rule_follows_balance() {
        let mut rng = rng_for(3, 0, 0);
        let src = [Postpaid, Prepaid];
        let ties: Vec<(u32, u32)> = (0..4000u32).flat_map(|t| [(0, t), (1, t)]).collect();
        let out = majority_vote(&ties, 4000, &src, 0.5, &mut rng);
        let post = out.iter().filter(|&&l| l == Postpaid).count() as f64 / 4000.0;
        // 3 sigma of Binomial(4000, 0.5) is about 0.024
        assert!((post - 0.5).abs() < 0.024, "{post}");
    }

    #[test]
    fn noiseless_homophily_is_recovered() {
        // two clusters, every tie bidirectional and within one label.
        let a = [(1, Prepaid), (2, Prepaid), (3, Postpaid), (4, Postpaid)];
        let edges = [(1, 10), (10, 1), (2, 10), (10, 2), (3, 20), (20, 3), (4, 20), (20, 4), (4, 21), (21, 4)];
        let g = graph(&a, &[10, 20, 21], &edges);
        let r = two_way_propagation(&g, 5, 9).unwrap();
        assert_eq!(r.a_accuracy, 1.0);
        assert_eq!(r.accuracy_std, 0.0);
        assert_eq!(r.realizations, 5);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = graph(&[(1, Prepaid)], &[10], &[]);
        assert_eq!(two_way_propagation(&g, 1, 0), Err(Error::EmptyEdgeSet));
    }

    #[test]
    fn diagnostics_of_small_graph() {
        let g = graph(&[(1, Prepaid), (2, Postpaid)], &[10, 11], &[(1, 10), (10, 1), (2, 11), (1, 11)]);
        let d = g.diagnostics();
        assert_eq!(d.links, 4);
        assert_eq!(d.bidirectional_fraction, 0.5);
        assert_eq!(d.mean_b_in_degree, 1.5);
        assert_eq!(d.mean_b_degree, 1.5);
    }

    #[test]
    fn zero_swaps_is_identity() {
        let g = graph(&[(1, Prepaid), (2, Postpaid)], &[10, 11], &[(1, 10), (2, 11), (10, 1), (11, 2)]);
        let (h, s) = degree_preserving_randomize(&g, 0, 5);
        assert_eq!(h, g);
        assert_eq!(s, SwapStats { accepted: 0, attempted: 0 });
    }

    #[test]
    fn swap_preserves_degrees() {
        let g = graph(&[(1, Prepaid), (2, Postpaid)], &[10, 11], &[(1, 10), (2, 11), (10, 1), (11, 2)]);
        let (h, s) = degree_preserving_randomize(&g, 4, 5);
        assert_eq!(g.degrees(), h.degrees());
        assert!(s.accepted >= 1);
    }

    #[test]
    fn inter_company_view_restricts_to_b_callees() {
        let mut recs = vec![];
        for k in 0..3 {
            recs.push(CdrRecord::call(k, 10, 1, 100 + k % 2));
        }
        for k in 0..7 {
            recs.push(CdrRecord::call(k, 10, 1, 2));
        }
        recs.push(CdrRecord::call(0, 5, 2, 3));
        recs.push(CdrRecord::call(0, 5, 100, 1));
        let a: BTreeSet<UserId> = [1, 2, 3].map(UserId).into_iter().collect();
        let b: BTreeSet<UserId> = [100, 101].map(UserId).into_iter().collect();
        let attrs = inter_company_attributes(&recs, &a, &b).unwrap();
        assert_eq!(attrs.len(), 1);
        let x = attrs[&UserId(1)];
        assert_eq!((x.n_calls_out, x.total_dur_out, x.k_out), (3, 30, 2));
    }
}
