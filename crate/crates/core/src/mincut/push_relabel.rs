//! Highest-label push-relabel with gap relabeling and periodic global
//! relabeling.
//!
//! Capacities are quantized to integers with a power-of-two scale picked so
//! that the total capacity fits comfortably in an `i64`; all flow arithmetic
//! is then exact. The solver runs both phases (excess that cannot reach the
//! sink is returned to the source), so at termination it holds a maximum
//! flow and the source side of the cut is the set of nodes reachable from the
//! source in the residual graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::network::FlowNetwork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Source,
    Sink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxFlow {
    pub flow_value: f64,
    pub side: Vec<CutSide>,
    /// Units per capacity unit used by the integer solver.
    pub scale: f64,
}

impl MaxFlow {
    pub fn source_side(&self) -> Vec<bool> {
        self.side.iter().map(|&s| s == CutSide::Source).collect()
    }
}

const MAX_SCALE: f64 = (1u64 << 40) as f64;
const MAX_TOTAL: f64 = (1u64 << 61) as f64;
const NIL: u32 = u32::MAX;

pub fn push_relabel_maxflow(net: &FlowNetwork) -> Result<MaxFlow> {
    if infinite_path_exists(net) {
        return Err(Error::ContradictoryFixedLabels);
    }
    let caps = net.capacities();
    let total: f64 = caps.iter().sum();
    let mut scale = MAX_SCALE;
    while total * scale > MAX_TOTAL {
        scale /= 2.0;
    }
    let quantized: Vec<i64> = caps.iter().map(|&c| libm::round(c * scale) as i64).collect();

    let mut solver = Solver::new(net, &quantized);
    solver.run();
    let reach = solver.residual_reachable();
    let side = reach.into_iter().map(|r| if r { CutSide::Source } else { CutSide::Sink }).collect();
    Ok(MaxFlow { flow_value: solver.excess[net.sink()] as f64 / scale, side, scale })
}

/// Whether the sink is reachable from the source along unbounded arcs only.
fn infinite_path_exists(net: &FlowNetwork) -> bool {
    let n = net.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in net.arcs().iter().filter(|a| a.infinite) {
        adj[a.from].push(a.to);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![net.source()];
    seen[net.source()] = true;
    while let Some(v) = stack.pop() {
        if v == net.sink() {
            return true;
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

struct Solver {
    n: usize,
    s: usize,
    t: usize,
    first: Vec<usize>,
    to: Vec<u32>,
    rev: Vec<u32>,
    res: Vec<i64>,
    excess: Vec<i64>,
    height: Vec<usize>,
    cur: Vec<usize>,
    active: Buckets,
    // Doubly linked node lists per height below `n`, for gap detection.
    level_next: Vec<u32>,
    level_prev: Vec<u32>,
    level_head: Vec<u32>,
    level_count: Vec<usize>,
    max_level: usize,
    work: usize,
    relabel_period: usize,
}

impl Solver {
    fn new(net: &FlowNetwork, caps: &[i64]) -> Self {
        let n = net.node_count();
        let mut deg = vec![0usize; n + 1];
        for a in net.arcs() {
            deg[a.from + 1] += 1;
            deg[a.to + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let first = deg.clone();
        let m2 = first[n];
        let mut fill = deg;
        let mut to = vec![0u32; m2];
        let mut rev = vec![0u32; m2];
        let mut res = vec![0i64; m2];
        for (a, &c) in net.arcs().iter().zip(caps) {
            let (i, j) = (fill[a.from], fill[a.to]);
            fill[a.from] += 1;
            fill[a.to] += 1;
            to[i] = a.to as u32;
            rev[i] = j as u32;
            res[i] = c;
            to[j] = a.from as u32;
            rev[j] = i as u32;
        }
        Solver {
            n,
            s: net.source(),
            t: net.sink(),
            cur: first[..n].to_vec(),
            first,
            to,
            rev,
            res,
            excess: vec![0; n],
            height: vec![0; n],
            active: Buckets::new(2 * n + 1),
            level_next: vec![NIL; n],
            level_prev: vec![NIL; n],
            level_head: vec![NIL; n],
            level_count: vec![0; n],
            max_level: 0,
            work: 0,
            relabel_period: 4 * n + m2 / 2,
        }
    }

    #[inline]
    fn dead(&self) -> usize {
        2 * self.n
    }

    fn run(&mut self) {
        let s = self.s;
        for a in self.first[s]..self.first[s + 1] {
            let f = self.res[a];
            if f > 0 {
                let v = self.to[a] as usize;
                self.res[a] = 0;
                self.res[self.rev[a] as usize] += f;
                self.excess[v] += f;
                self.excess[s] -= f;
            }
        }
        self.global_relabel();

        loop {
            if self.work > self.relabel_period {
                self.global_relabel();
            }
            let Some(u) = self.pop_highest() else { break };
            self.discharge(u);
        }
    }

    fn pop_highest(&mut self) -> Option<usize> {
        loop {
            let (h, v) = self.active.pop_max()?;
            let v = v as usize;
            if self.height[v] == h && self.excess[v] > 0 && v != self.s && v != self.t {
                return Some(v);
            }
        }
    }

    fn push_active(&mut self, v: usize) {
        let h = self.height[v];
        if h < self.dead() && v != self.s && v != self.t {
            self.active.push(h, v as u32);
        }
    }

    fn level_insert(&mut self, v: usize, h: usize) {
        let head = self.level_head[h];
        self.level_next[v] = head;
        self.level_prev[v] = NIL;
        if head != NIL {
            self.level_prev[head as usize] = v as u32;
        }
        self.level_head[h] = v as u32;
        self.level_count[h] += 1;
        self.max_level = self.max_level.max(h);
    }

    fn level_remove(&mut self, v: usize, h: usize) {
        let (p, nx) = (self.level_prev[v], self.level_next[v]);
        if p != NIL {
            self.level_next[p as usize] = nx;
        } else {
            self.level_head[h] = nx;
        }
        if nx != NIL {
            self.level_prev[nx as usize] = p;
        }
        self.level_count[h] -= 1;
    }

    fn set_height(&mut self, v: usize, h: usize) {
        let old = self.height[v];
        if old < self.n {
            self.level_remove(v, old);
        }
        self.height[v] = h;
        if h < self.n {
            self.level_insert(v, h);
        }
        if self.excess[v] > 0 {
            self.push_active(v);
        }
    }

    fn discharge(&mut self, u: usize) {
        let end = self.first[u + 1];
        while self.excess[u] > 0 {
            if self.cur[u] == end {
                self.relabel(u);
                if self.height[u] >= self.dead() {
                    break;
                }
                continue;
            }
            let a = self.cur[u];
            let v = self.to[a] as usize;
            if self.res[a] > 0 && self.height[u] == self.height[v] + 1 {
                let f = self.excess[u].min(self.res[a]);
                self.res[a] -= f;
                self.res[self.rev[a] as usize] += f;
                self.excess[u] -= f;
                let was_idle = self.excess[v] == 0;
                self.excess[v] += f;
                if was_idle {
                    self.push_active(v);
                }
            } else {
                self.cur[u] += 1;
            }
        }
    }

    fn relabel(&mut self, u: usize) {
        let old = self.height[u];
        self.work += self.first[u + 1] - self.first[u] + 12;
        self.cur[u] = self.first[u];
        if old < self.n && self.level_count[old] == 1 {
            self.gap(old);
            return;
        }
        let mut h = self.dead();
        for a in self.first[u]..self.first[u + 1] {
            if self.res[a] > 0 {
                h = h.min(self.height[self.to[a] as usize] + 1);
            }
        }
        self.set_height(u, h.min(self.dead()));
    }

    /// Level `from` is about to empty: nothing at or above it (below `n`)
    /// can reach the sink any more.
    fn gap(&mut self, from: usize) {
        let lifted = self.n + 1;
        for h in from..=self.max_level {
            while self.level_head[h] != NIL {
                let v = self.level_head[h] as usize;
                self.level_remove(v, h);
                self.height[v] = lifted;
                self.cur[v] = self.first[v];
                if self.excess[v] > 0 {
                    self.push_active(v);
                }
            }
        }
        self.max_level = from.saturating_sub(1);
    }

    fn global_relabel(&mut self) {
        self.work = 0;
        let dead = self.dead();
        self.height.fill(dead);
        self.level_head.fill(NIL);
        self.level_count.fill(0);
        self.max_level = 0;
        self.active.clear();

        let mut queue = VecDeque::new();
        self.height[self.t] = 0;
        queue.push_back(self.t);
        self.bfs(&mut queue, self.s);
        self.height[self.s] = self.n;
        queue.push_back(self.s);
        self.bfs(&mut queue, self.t);

        for v in 0..self.n {
            let h = self.height[v];
            if h < self.n {
                self.level_insert(v, h);
            }
            self.cur[v] = self.first[v];
            if self.excess[v] > 0 {
                self.push_active(v);
            }
        }
    }

    /// Reverse-residual BFS assigning distances to unvisited nodes.
    fn bfs(&mut self, queue: &mut VecDeque<usize>, skip: usize) {
        let dead = self.dead();
        while let Some(v) = queue.pop_front() {
            for a in self.first[v]..self.first[v + 1] {
                let w = self.to[a] as usize;
                if w != skip && self.height[w] == dead && self.res[self.rev[a] as usize] > 0 {
                    self.height[w] = self.height[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    fn residual_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![self.s];
        seen[self.s] = true;
        while let Some(v) = stack.pop() {
            for a in self.first[v]..self.first[v + 1] {
                let w = self.to[a] as usize;
                if !seen[w] && self.res[a] > 0 {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Active nodes bucketed by height, with a two-level bitmap of non-empty
/// buckets so the highest one is found without scanning empty heights.
struct Buckets {
    items: Vec<Vec<u32>>,
    words: Vec<u64>,
    summary: Vec<u64>,
}

impl Buckets {
    fn new(levels: usize) -> Self {
        let words = levels.div_ceil(64);
        Buckets { items: vec![Vec::new(); levels], words: vec![0; words], summary: vec![0; words.div_ceil(64)] }
    }

    fn push(&mut self, h: usize, v: u32) {
        self.items[h].push(v);
        self.words[h / 64] |= 1 << (h % 64);
        self.summary[h / 4096] |= 1 << ((h / 64) % 64);
    }

    fn pop_max(&mut self) -> Option<(usize, u32)> {
        let si = self.summary.iter().rposition(|&w| w != 0)?;
        let wi = si * 64 + 63 - self.summary[si].leading_zeros() as usize;
        let h = wi * 64 + 63 - self.words[wi].leading_zeros() as usize;
        let v = self.items[h].pop().expect("marked bucket is non-empty");
        if self.items[h].is_empty() {
            self.words[wi] &= !(1 << (h % 64));
            if self.words[wi] == 0 {
                self.summary[si] &= !(1 << (wi % 64));
            }
        }
        Some((h, v))
    }

    fn clear(&mut self) {
        for (wi, w) in self.words.iter_mut().enumerate() {
            while *w != 0 {
                let b = w.trailing_zeros() as usize;
                self.items[wi * 64 + b].clear();
                *w &= *w - 1;
            }
        }
        self.summary.fill(0);
    }
}
