//! Seeded synthetic CDR corpora with ground-truth labels.
//!
//! Users draw a number of distinct callees and a number of outgoing calls
//! from label-dependent overdispersed count distributions, pick each
//! callee's label from the homophily row of their own label, spread their
//! calls over the callees and draw call durations from a per-label
//! log-normal. An optional second operator (side B) is attached through a
//! bipartite tie generator with controllable reciprocity.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, Geometric, LogNormal, Poisson};

use crate::cdr::CdrRecord;
use crate::crossnet::BipartiteGraph;
use crate::error::{Error, Result};
use crate::label::{SubscriptionLabel, UserId};
use crate::rng::{rng_for, stream, Rng};

/// Shape of the per-user callee and call count distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CountShape {
    /// `1 + Geometric`, variance about the squared mean.
    #[default]
    Geometric,
    /// `1 + Poisson`, variance about the mean.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BipartiteConfig {
    pub n_b_users: usize,
    /// Mean number of A callers per B user.
    pub mean_b_in_degree: f64,
    /// Fraction of directed links whose reverse link also exists.
    pub bidirectional_fraction: f64,
}

impl Default for BipartiteConfig {
    fn default() -> Self {
        BipartiteConfig { n_b_users: 10_000, mean_b_in_degree: 2.593, bidirectional_fraction: 0.89 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthConfig {
    pub n_users: usize,
    pub postpaid_fraction: f64,
    /// Row = caller label, column = callee label; rows sum to one.
    pub homophily: [[f64; 2]; 2],
    /// Postpaid mean outgoing calls over prepaid mean outgoing calls.
    pub call_rate_ratio: f64,
    /// Postpaid mean callees over prepaid mean callees.
    pub degree_ratio: f64,
    pub prepaid_mean_calls: f64,
    pub prepaid_mean_degree: f64,
    pub count_shape: CountShape,
    /// `(mu, sigma)` of log call seconds, per label index.
    pub duration_lognormal: [(f64, f64); 2],
    /// Expected SMS per call, per user.
    pub sms_per_call: f64,
    pub window_start: u64,
    pub window_seconds: u64,
    pub bipartite: Option<BipartiteConfig>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 10_000,
            postpaid_fraction: 0.48,
            homophily: [[0.791, 0.209], [0.173, 0.827]],
            call_rate_ratio: 2.9,
            degree_ratio: 2.5,
            prepaid_mean_calls: 12.0,
            prepaid_mean_degree: 4.0,
            count_shape: CountShape::Geometric,
            duration_lognormal: [(3.9, 1.1), (4.1, 1.0)],
            sms_per_call: 0.2,
            window_start: 1_400_000_000,
            window_seconds: 30 * 24 * 3600,
            bipartite: None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn mean_calls(&self, l: SubscriptionLabel) -> f64 {
        match l {
            SubscriptionLabel::Prepaid => self.prepaid_mean_calls,
            SubscriptionLabel::Postpaid => self.prepaid_mean_calls * self.call_rate_ratio,
        }
    }

    fn mean_degree(&self, l: SubscriptionLabel) -> f64 {
        match l {
            SubscriptionLabel::Prepaid => self.prepaid_mean_degree,
            SubscriptionLabel::Postpaid => self.prepaid_mean_degree * self.degree_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidConfig(m));
        if self.n_users < 2 {
            return bad(format!("n_users must be at least 2, got {}", self.n_users));
        }
        if !(0.0..=1.0).contains(&self.postpaid_fraction) {
            return bad(format!("postpaid_fraction {} outside [0, 1]", self.postpaid_fraction));
        }
        for row in &self.homophily {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-9 {
                return bad(format!("homophily row {row:?} is not a probability distribution"));
            }
        }
        let positive = [
            ("call_rate_ratio", self.call_rate_ratio),
            ("degree_ratio", self.degree_ratio),
            ("prepaid_mean_calls", self.prepaid_mean_calls),
            ("prepaid_mean_degree", self.prepaid_mean_degree),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for l in SubscriptionLabel::ALL {
            if self.mean_degree(l) < 1.0 {
                return bad(format!("mean callees of {l} users must be at least 1"));
            }
            if self.mean_calls(l) < self.mean_degree(l) {
                return bad(format!("mean calls of {l} users is below their mean callees"));
            }
            // A callee set cannot outgrow the population it is drawn from.
            if self.mean_degree(l) >= (self.n_users - 1) as f64 {
                return bad(format!("mean callees of {l} users must be below the population size"));
            }
            let (mu, sigma) = self.duration_lognormal[l.index()];
            if !(mu.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
                return bad(format!("invalid log-normal ({mu}, {sigma}) for {l}"));
            }
        }
        if !(self.sms_per_call >= 0.0 && self.sms_per_call.is_finite()) {
            return bad(format!("sms_per_call must be non-negative, got {}", self.sms_per_call));
        }
        if self.window_seconds == 0 {
            return bad("window_seconds must be positive".into());
        }
        if let Some(b) = &self.bipartite {
            if b.n_b_users == 0 {
                return bad("bipartite.n_b_users must be positive".into());
            }
            if !(b.mean_b_in_degree > 0.0 && b.mean_b_in_degree.is_finite()) {
                return bad(format!("bipartite.mean_b_in_degree must be positive, got {}", b.mean_b_in_degree));
            }
            if !(0.0..=1.0).contains(&b.bidirectional_fraction) {
                return bad(format!("bipartite.bidirectional_fraction {} outside [0, 1]", b.bidirectional_fraction));
            }
        }
        Ok(())
    }
}

/// Inter-operator part of a corpus.
#[derive(Debug, Clone)]
pub struct BipartiteCorpus {
    pub graph: BipartiteGraph,
    /// Hidden labels of B users, for oracle scoring only.
    pub hidden_b_labels: BTreeMap<UserId, SubscriptionLabel>,
    /// Calls and SMS along the bipartite links.
    pub records: Vec<CdrRecord>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    /// Intra-operator events, sorted by timestamp.
    pub records: Vec<CdrRecord>,
    pub truth: BTreeMap<UserId, SubscriptionLabel>,
    pub bipartite: Option<BipartiteCorpus>,
}

fn draw_count(shape: CountShape, mean: f64, rng: &mut Rng) -> u64 {
    // Both shapes put their mass on {1, 2, ...} with the given mean.
    let extra = mean - 1.0;
    if extra <= 0.0 {
        return 1;
    }
    1 + match shape {
        CountShape::Geometric => Geometric::new(1.0 / (1.0 + extra)).expect("p in (0, 1]").sample(rng),
        CountShape::Poisson => Poisson::new(extra).expect("positive rate").sample(rng) as u64,
    }
}

fn draw_zero_based(shape: CountShape, mean: f64, rng: &mut Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match shape {
        CountShape::Geometric => Geometric::new(1.0 / (1.0 + mean)).expect("p in (0, 1]").sample(rng),
        CountShape::Poisson => Poisson::new(mean).expect("positive rate").sample(rng) as u64,
    }
}

fn draw_duration(cfg: &SynthConfig, l: SubscriptionLabel, rng: &mut Rng) -> u64 {
    let (mu, sigma) = cfg.duration_lognormal[l.index()];
    let d: f64 = LogNormal::new(mu, sigma).expect("valid log-normal").sample(rng);
    (libm::round(d) as u64).max(1)
}

fn pick_label(row: [f64; 2], rng: &mut Rng) -> SubscriptionLabel {
    if rng.random_bool(row[1].clamp(0.0, 1.0)) {
        SubscriptionLabel::Postpaid
    } else {
        SubscriptionLabel::Prepaid
    }
}

/// Uniform member of `pool` not in `taken` and not `me`; `None` when the
/// pool has nothing left to offer.
fn pick_from(pool: &[u64], me: u64, taken: &BTreeSet<u64>, rng: &mut Rng) -> Option<u64> {
    let available = pool.len() - taken.iter().filter(|t| pool.binary_search(t).is_ok()).count()
        - usize::from(pool.binary_search(&me).is_ok() && !taken.contains(&me));
    if available == 0 {
        return None;
    }
    loop {
        let c = pool[rng.random_range(0..pool.len())];
        if c != me && !taken.contains(&c) {
            return Some(c);
        }
    }
}

pub fn generate_cdrs(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let seed = config.seed;
    let n = config.n_users as u64;
    let labels: Vec<SubscriptionLabel> = (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, stream::LABELS, i);
            if rng.random_bool(config.postpaid_fraction) {
                SubscriptionLabel::Postpaid
            } else {
                SubscriptionLabel::Prepaid
            }
        })
        .collect();
    let pools: [Vec<u64>; 2] = SubscriptionLabel::ALL.map(|l| (0..n).filter(|&i| labels[i as usize] == l).collect());

    let mut records = Vec::new();
    let mut taken = BTreeSet::new();
    let mut callees = Vec::new();
    for u in 0..n {
        let mut rng = rng_for(seed, stream::USER, u);
        let l = labels[u as usize];
        let k = draw_count(config.count_shape, config.mean_degree(l), &mut rng).min(n - 1);
        let extra_mean = (config.mean_calls(l) - config.mean_degree(l)).max(0.0);
        let calls = k + draw_zero_based(config.count_shape, extra_mean, &mut rng);

        taken.clear();
        callees.clear();
        for _ in 0..k {
            let want = pick_label(config.homophily[l.index()], &mut rng);
            let c = pick_from(&pools[want.index()], u, &taken, &mut rng)
                .or_else(|| pick_from(&pools[want.flip().index()], u, &taken, &mut rng))
                .expect("k < n leaves a free callee");
            taken.insert(c);
            callees.push(c);
        }
        for j in 0..calls {
            // Every callee gets one call; the rest land uniformly.
            let callee = if (j as usize) < callees.len() {
                callees[j as usize]
            } else {
                callees[rng.random_range(0..callees.len())]
            };
            let t = config.window_start + rng.random_range(0..config.window_seconds);
            records.push(CdrRecord::call(t, draw_duration(config, l, &mut rng), u, callee));
        }
        let sms = draw_zero_based(config.count_shape, config.sms_per_call * calls as f64, &mut rng);
        for _ in 0..sms {
            let callee = callees[rng.random_range(0..callees.len())];
            let t = config.window_start + rng.random_range(0..config.window_seconds);
            records.push(CdrRecord::sms(t, u, callee));
        }
    }
    records.sort_by_key(|r| (r.timestamp, r.caller, r.callee));
    let truth: BTreeMap<UserId, SubscriptionLabel> = (0..n).map(|i| (UserId(i), labels[i as usize])).collect();

    let bipartite = match config.bipartite {
        Some(_) => Some(generate_bipartite(config, &truth)?),
        None => None,
    };
    Ok(SynthCorpus { records, truth, bipartite })
}

/// Attaches an external operator to the labeled users in `truth_a`.
///
/// B users get ids `max(A id) + 1 ..`, hidden labels at the A class balance,
/// and ties drawn per A user: a label-dependent number of ties (postpaid
/// users `degree_ratio` times more), each to a B user whose hidden label
/// follows the A user's homophily row. A tie is reciprocal with probability
/// `r = f / (2 - f)` (so a fraction `f` of directed links is bidirectional)
/// and otherwise one-way in a random direction.
pub fn generate_bipartite(config: &SynthConfig, truth_a: &BTreeMap<UserId, SubscriptionLabel>) -> Result<BipartiteCorpus> {
    config.validate()?;
    let bc = config
        .bipartite
        .ok_or_else(|| Error::InvalidConfig("bipartite sub-config missing".into()))?;
    if truth_a.is_empty() {
        return Err(Error::InvalidConfig("side A is empty".into()));
    }
    let seed = config.seed;
    let n_a = truth_a.len();
    let n_post = truth_a.values().filter(|&&l| l == SubscriptionLabel::Postpaid).count();
    let balance = n_post as f64 / n_a as f64;
    let b_base = truth_a.keys().next_back().map_or(0, |u| u.0 + 1);

    let b_labels: Vec<SubscriptionLabel> = (0..bc.n_b_users as u64)
        .map(|j| {
            let mut rng = rng_for(seed, stream::B_LABELS, j);
            if rng.random_bool(balance) { SubscriptionLabel::Postpaid } else { SubscriptionLabel::Prepaid }
        })
        .collect();
    let b_pools: [Vec<u64>; 2] =
        SubscriptionLabel::ALL.map(|l| (0..bc.n_b_users as u64).filter(|&j| b_labels[j as usize] == l).collect());

    let f = bc.bidirectional_fraction;
    let reciprocal = f / (2.0 - f);
    let ab_per_tie = reciprocal + (1.0 - reciprocal) / 2.0;
    let ties = bc.mean_b_in_degree * bc.n_b_users as f64 / ab_per_tie;
    let weight_total = (n_a - n_post) as f64 + n_post as f64 * config.degree_ratio;
    let prepaid_mean_ties = ties / weight_total;
    let max_ties = bc.n_b_users as u64;
    if prepaid_mean_ties * config.degree_ratio >= max_ties as f64 {
        return Err(Error::InvalidConfig(format!(
            "{} B users cannot absorb a mean of {:.1} ties per postpaid A user",
            bc.n_b_users,
            prepaid_mean_ties * config.degree_ratio
        )));
    }

    let mut edges: Vec<(UserId, UserId)> = Vec::new();
    let mut records = Vec::new();
    let mut taken = BTreeSet::new();
    for (k, (&a, &la)) in truth_a.iter().enumerate() {
        let mut rng = rng_for(seed, stream::BIPARTITE, k as u64);
        let mean = match la {
            SubscriptionLabel::Prepaid => prepaid_mean_ties,
            SubscriptionLabel::Postpaid => prepaid_mean_ties * config.degree_ratio,
        };
        let m = draw_zero_based(config.count_shape, mean, &mut rng).min(max_ties);
        taken.clear();
        for _ in 0..m {
            let want = pick_label(config.homophily[la.index()], &mut rng);
            let Some(j) = pick_from(&b_pools[want.index()], u64::MAX, &taken, &mut rng)
                .or_else(|| pick_from(&b_pools[want.flip().index()], u64::MAX, &taken, &mut rng))
            else {
                break;
            };
            taken.insert(j);
            let b = UserId(b_base + j);
            let lb = b_labels[j as usize];
            let (fwd, back) = if rng.random_bool(reciprocal) {
                (true, true)
            } else if rng.random_bool(0.5) {
                (true, false)
            } else {
                (false, true)
            };
            if fwd {
                edges.push((a, b));
                link_records(config, a, la, b, &mut rng, &mut records);
            }
            if back {
                edges.push((b, a));
                link_records(config, b, lb, a, &mut rng, &mut records);
            }
        }
    }
    records.sort_by_key(|r| (r.timestamp, r.caller, r.callee));
    let side_b: BTreeSet<UserId> = (0..bc.n_b_users as u64).map(|j| UserId(b_base + j)).collect();
    let graph = BipartiteGraph::new(truth_a, &side_b, edges)?;
    let hidden_b_labels = side_b.iter().copied().zip(b_labels).collect();
    Ok(BipartiteCorpus { graph, hidden_b_labels, records })
}

/// Calls along one directed link, at the caller's per-callee call rate.
fn link_records(
    config: &SynthConfig,
    caller: UserId,
    label: SubscriptionLabel,
    callee: UserId,
    rng: &mut Rng,
    out: &mut Vec<CdrRecord>,
) {
    let per_link = config.mean_calls(label) / config.mean_degree(label);
    let calls = draw_count(config.count_shape, per_link, rng);
    for _ in 0..calls {
        let t = config.window_start + rng.random_range(0..config.window_seconds);
        out.push(CdrRecord::call(t, draw_duration(config, label, rng), caller.0, callee.0));
    }
    if rng.next_u32() as f64 / u32::MAX as f64 <= config.sms_per_call {
        let t = config.window_start + rng.random_range(0..config.window_seconds);
        out.push(CdrRecord::sms(t, caller.0, callee.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { n_users: 500, seed: 11, ..Default::default() }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_cdrs(&small()).unwrap();
        let b = generate_cdrs(&small()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth, b.truth);
        let c = generate_cdrs(&SynthConfig { seed: 12, ..small() }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn records_are_valid() {
        let c = generate_cdrs(&small()).unwrap();
        let w = crate::cdr::ObservationWindow { start: 1_400_000_000, end: 1_400_000_000 + 30 * 24 * 3600 };
        for r in &c.records {
            assert_eq!(r.validate(Some(w)), Ok(()));
            assert!(c.truth.contains_key(&r.caller) && c.truth.contains_key(&r.callee));
        }
    }

    #[test]
    fn all_postpaid_config() {
        let c = generate_cdrs(&SynthConfig { postpaid_fraction: 1.0, ..small() }).unwrap();
        assert!(c.truth.values().all(|&l| l == SubscriptionLabel::Postpaid));
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let too_dense = SynthConfig { n_users: 5, prepaid_mean_degree: 4.0, ..small() };
        assert!(matches!(generate_cdrs(&too_dense), Err(Error::InvalidConfig(_))));
        let bad_row = SynthConfig { homophily: [[0.5, 0.6], [0.5, 0.5]], ..small() };
        assert!(generate_cdrs(&bad_row).is_err());
        let fewer_calls = SynthConfig { prepaid_mean_calls: 2.0, ..small() };
        assert!(generate_cdrs(&fewer_calls).is_err());
    }

    #[test]
    fn identity_homophily_gives_pure_ties() {
        let cfg = SynthConfig {
            homophily: [[1.0, 0.0], [0.0, 1.0]],
            bipartite: Some(BipartiteConfig { n_b_users: 300, ..Default::default() }),
            ..small()
        };
        let c = generate_cdrs(&cfg).unwrap();
        for r in &c.records {
            assert_eq!(c.truth[&r.caller], c.truth[&r.callee]);
        }
        let b = c.bipartite.unwrap();
        let side_a = b.graph.side_a();
        for (x, y) in b.graph.edges() {
            let lx = side_a.get(&x).or_else(|| b.hidden_b_labels.get(&x)).unwrap();
            let ly = side_a.get(&y).or_else(|| b.hidden_b_labels.get(&y)).unwrap();
            assert_eq!(lx, ly);
        }
    }
}
