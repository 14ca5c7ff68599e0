//! Reference implementations used as test oracles. Written independently of
//! the library's solvers.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;
use subtype_core::mincut::{FlowNetwork, LabelingProblem, SocialEdge};
use subtype_core::{SubscriptionLabel, UserId};

/// Edmonds–Karp: shortest augmenting paths over paired residual arcs.
pub fn edmonds_karp(n: usize, s: usize, t: usize, arcs: &[(usize, usize, f64)]) -> f64 {
    let mut head = Vec::new();
    let mut cap = Vec::new();
    let mut out = vec![Vec::new(); n];
    for &(a, b, c) in arcs {
        if a == b {
            continue;
        }
        out[a].push(head.len());
        head.push(b);
        cap.push(c);
        out[b].push(head.len());
        head.push(a);
        cap.push(0.0);
    }
    let mut flow = 0.0;
    loop {
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &out[u] {
                let v = head[e];
                if !seen[v] && cap[e] > 1e-12 {
                    seen[v] = true;
                    via[v] = e;
                    q.push_back(v);
                }
            }
        }
        if !seen[t] {
            return flow;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            let e = via[v];
            bottleneck = bottleneck.min(cap[e]);
            v = head[e ^ 1];
        }
        let mut v = t;
        while v != s {
            let e = via[v];
            cap[e] -= bottleneck;
            cap[e ^ 1] += bottleneck;
            v = head[e ^ 1];
        }
        flow += bottleneck;
    }
}

/// The network's arcs with the sentinel substituted for infinite ones.
pub fn arc_list(net: &FlowNetwork) -> Vec<(usize, usize, f64)> {
    net.arcs().iter().map(|a| (a.from, a.to, net.capacity(a))).collect()
}

/// Random network with `2..=max_nodes` nodes and capacities on a quarter
/// grid in `[0, 10]`.
pub fn random_network<R: Rng>(rng: &mut R, max_nodes: usize) -> FlowNetwork {
    let n = rng.random_range(2..=max_nodes);
    let (s, t) = (0, n - 1);
    let mut net = FlowNetwork::new(n, s, t);
    let density = rng.random_range(1.0..6.0);
    let m = (n as f64 * density) as usize;
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        net.add_arc(a, b, rng.random_range(0..=40) as f64 / 4.0);
    }
    net
}

/// Minimum energy over all labelings consistent with the fixed labels,
/// with the energy computed here from the problem's tables.
pub fn min_energy(p: &LabelingProblem) -> f64 {
    let n = p.users.len();
    let mut best = f64::INFINITY;
    'mask: for mask in 0u32..(1 << n) {
        let label = |i: usize| (mask >> i) & 1;
        for (i, f) in p.fixed.iter().enumerate() {
            if let Some(f) = f {
                if label(i) as usize != f.index() {
                    continue 'mask;
                }
            }
        }
        let mut e: f64 = (0..n).map(|i| p.data_cost[i][label(i) as usize]).sum();
        let mut social = 0.0;
        for s in &p.social_edges {
            social += match (label(s.from as usize), label(s.to as usize)) {
                (0, 1) => s.w01,
                (1, 0) => s.w10,
                _ => 0.0,
            };
        }
        if social > 0.0 {
            e += p.lambda * social;
        }
        best = best.min(e);
    }
    best
}

/// Random labeling problem with `1..=max_nodes` nodes, inverse out-degree
/// weights and costs drawn from a clamped-posterior range.
pub fn random_problem<R: Rng>(rng: &mut R, max_nodes: usize, with_fixed: bool) -> LabelingProblem {
    let n = rng.random_range(1..=max_nodes);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in 0..n as u32 {
            if u != v && rng.random_bool(0.25) {
                edges.push((u, v));
            }
        }
    }
    let mut k_out = vec![0u32; n];
    for &(u, _) in &edges {
        k_out[u as usize] += 1;
    }
    let data_cost = (0..n)
        .map(|_| {
            let p: f64 = rng.random_range(1e-6..1.0 - 1e-6);
            [-p.ln(), -(1.0 - p).ln()]
        })
        .collect();
    let lambda = [0.0, 0.3, 1.0, 2.5, 10.0][rng.random_range(0..5)];
    let users = (0..n as u64).map(UserId).collect();
    let mut p = LabelingProblem::new(users, data_cost, &edges, k_out, lambda).unwrap();
    if with_fixed {
        let fixed = (0..n)
            .map(|_| match rng.random_range(0..6) {
                0 => Some(SubscriptionLabel::Prepaid),
                1 => Some(SubscriptionLabel::Postpaid),
                _ => None,
            })
            .collect();
        p = p.with_fixed(fixed).unwrap();
    }
    p
}

/// Whether any social edge joins two differently labeled nodes.
pub fn disagreements(edges: &[SocialEdge], labels: &[SubscriptionLabel]) -> usize {
    edges.iter().filter(|e| labels[e.from as usize] != labels[e.to as usize]).count()
}
