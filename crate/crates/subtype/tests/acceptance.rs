//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subtype::pipeline::{self, Dataset, LabelOptions, Lambda};
use subtype_core::cdr::FilterPolicy;
use subtype_core::crossnet::{degree_preserving_randomize, BipartiteGraph};
use subtype_core::mincut::{
    brute_force_labeling, push_relabel_maxflow, solve_labeling, FlowNetwork, SmoothnessWeight, DEFAULT_TAU1,
    DEFAULT_TAU2,
};
use subtype_core::synth::{generate_cdrs, BipartiteConfig, SynthConfig};
use subtype_core::{SubscriptionLabel, UserId};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(n: u32, title: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = body();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = o.pass && in_time;
    let limit = match limit {
        Some(l) => format!(" (limit {:.0} s)", l.as_secs_f64()),
        None => String::new(),
    };
    println!(
        "{} criterion {n}: {title}: {}; {:.1} s{limit}",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let net = oracle::random_network(&mut rng, 200);
        let want = oracle::edmonds_karp(net.node_count(), net.source(), net.sink(), &oracle::arc_list(&net));
        let got = push_relabel_maxflow(&net).map(|f| f.flow_value).unwrap_or(f64::NAN);
        worst = worst.max((got - want).abs());
        if got.is_nan() {
            worst = f64::INFINITY;
        }
    }
    let mut net = FlowNetwork::new(4, 0, 3);
    for (a, b, c) in [(0, 1, 3.0), (0, 2, 2.0), (1, 2, 1.0), (1, 3, 2.0), (2, 3, 3.0)] {
        net.add_arc(a, b, c);
    }
    let small = push_relabel_maxflow(&net).unwrap().flow_value;
    Outcome {
        pass: worst <= 1e-9 && small == 5.0,
        detail: format!("2000 networks, max |push-relabel - augmenting path| = {worst:.1e}; small example flow {small}"),
    }
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut single) = (0.0f64, true);
    for trial in 0..500 {
        let p = oracle::random_problem(&mut rng, 15, trial % 2 == 1);
        let s = solve_labeling(&p).unwrap();
        let brute = brute_force_labeling(&p).unwrap().energy;
        worst = worst.max((s.energy - brute).abs()).max((s.energy - oracle::min_energy(&p)).abs());
        single &= s.labels.len() == p.node_count();
    }
    Outcome {
        pass: worst <= 1e-9 && single,
        detail: format!("500 problems (<=15 nodes), max |min-cut - exhaustive| = {worst:.1e}, one label per node: {single}"),
    }
}

fn prepared(n_users: usize, seed: u64, bipartite: bool) -> (subtype_core::synth::SynthCorpus, Dataset) {
    let cfg = SynthConfig {
        n_users,
        seed,
        bipartite: bipartite.then(BipartiteConfig::default),
        ..SynthConfig::default()
    };
    let corpus = generate_cdrs(&cfg).unwrap();
    let policy = FilterPolicy::new(10, 100_000).unwrap();
    let ds = pipeline::prepare(&corpus.records, &corpus.truth, &policy).unwrap();
    (corpus, ds)
}

fn plain(lambda: Lambda) -> LabelOptions {
    LabelOptions { lambda, prune: None, weight: SmoothnessWeight::InverseOutDegree }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn c3() -> Outcome {
    let (_, ds) = prepared(10_000, 3, false);
    let split = ds.split(ds.default_train_per_class(), 3).unwrap();
    let zero = pipeline::label(&ds, &split, &plain(Lambda::Value(0.0))).unwrap();
    let zero_ok = zero.solution.labels == zero.nb_labels;
    let inf = pipeline::label(&ds, &split, &plain(Lambda::Value(f64::INFINITY))).unwrap();
    let n = inf.problem.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in &inf.problem.social_edges {
        let (a, b) = (find(&mut parent, e.from as usize), find(&mut parent, e.to as usize));
        parent[a] = b;
    }
    let mut comp_label: BTreeMap<usize, BTreeSet<SubscriptionLabel>> = BTreeMap::new();
    for u in 0..n {
        let r = find(&mut parent, u);
        comp_label.entry(r).or_default().insert(inf.solution.labels[u]);
    }
    let mixed = comp_label.values().filter(|s| s.len() > 1).count();
    Outcome {
        pass: zero_ok && mixed == 0,
        detail: format!(
            "{} users; lambda 0 equals NB argmax node for node: {zero_ok}; infinite lambda: {} components, {mixed} with mixed labels",
            ds.users.len(),
            comp_label.len()
        ),
    }
}

struct Corpus {
    corpus: subtype_core::synth::SynthCorpus,
    ds: Dataset,
    seed: u64,
}

fn c4(corpora: &[Corpus], prep: Duration) -> (Outcome, Vec<pipeline::LabelRun>) {
    let (mut nb, mut lab, mut pr) = (Vec::new(), Vec::new(), Vec::new());
    let mut pruned = Vec::new();
    let mut lambdas = Vec::new();
    for c in corpora {
        let split = c.ds.split(c.ds.default_train_per_class(), c.seed).unwrap();
        let p = pipeline::label(&c.ds, &split, &plain(Lambda::Auto)).unwrap();
        let q = pipeline::label(&c.ds, &split, &LabelOptions { prune: Some((DEFAULT_TAU1, DEFAULT_TAU2)), ..plain(Lambda::Auto) })
            .unwrap();
        nb.push(p.nb.accuracy());
        lab.push(p.labeling.accuracy());
        pr.push(q.labeling.accuracy());
        lambdas.push((p.lambda, q.lambda));
        pruned.push(q);
    }
    let (m_nb, m_lab, m_pr) = (mean(&nb), mean(&lab), mean(&pr));
    let per_seed: Vec<String> =
        (0..nb.len()).map(|i| format!("{:.3}/{:.3}/{:.3}", nb[i], lab[i], pr[i])).collect();
    let o = Outcome {
        pass: m_pr >= m_lab && m_lab >= m_nb && m_lab - m_nb >= 0.03,
        detail: format!(
            "{} seeds x {} users, tuned lambda; mean NB {m_nb:.4}, labeling {m_lab:.4}, labeling+pruning {m_pr:.4} \
             (need pruning >= labeling >= NB, labeling - NB >= 0.03); per seed NB/labeling/pruning {}; lambdas {:?}; \
             corpus preparation {:.1} s included",
            corpora.len(),
            corpora[0].corpus.truth.len(),
            per_seed.join(" "),
            lambdas,
            prep.as_secs_f64()
        ),
    };
    (o, pruned)
}

fn c5(corpora: &[Corpus]) -> Outcome {
    let mut gaps = Vec::new();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for c in corpora {
        let split = c.ds.split(c.ds.default_train_per_class(), c.seed).unwrap();
        let x = pipeline::classify(&c.ds, &c.ds.features, &split, 1).unwrap().naive_bayes.accuracy();
        let y = pipeline::classify(&c.ds, &c.ds.with_portion().unwrap(), &split, 1).unwrap().naive_bayes.accuracy();
        a.push(x);
        b.push(y);
        gaps.push(y - x);
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome {
        pass: min_gap >= 0.03,
        detail: format!(
            "NB mean {:.4} -> with portion attributes {:.4}; smallest per-corpus gain {min_gap:.4} (need >= 0.03)",
            mean(&a),
            mean(&b)
        ),
    }
}

fn c6(corpora: &[Corpus]) -> Outcome {
    let mut accs = Vec::new();
    let mut ada = Vec::new();
    for c in corpora {
        let b = c.corpus.bipartite.as_ref().unwrap();
        let side_b: BTreeMap<UserId, Option<SubscriptionLabel>> = b.graph.b_users().iter().map(|&u| (u, None)).collect();
        let cd = pipeline::cross_dataset(&b.records, &c.corpus.truth, &side_b.keys().copied().collect()).unwrap();
        let split = cd.split(cd.default_train_per_class(), c.seed).unwrap();
        let rep = cd.classify(&split, 50).unwrap();
        accs.push(rep.naive_bayes.accuracy());
        ada.push(rep.adaboost.accuracy());
    }
    let above = accs.iter().filter(|&&a| a > 0.55).count();
    Outcome {
        pass: above == accs.len(),
        detail: format!(
            "NB on inter-operator attributes above 0.55 on {above}/{} seeds (min {:.4}, mean {:.4}; AdaBoost mean {:.4})",
            accs.len(),
            accs.iter().copied().fold(f64::INFINITY, f64::min),
            mean(&accs),
            mean(&ada)
        ),
    }
}

fn c7(corpora: &[Corpus]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in corpora {
        let g = &c.corpus.bipartite.as_ref().unwrap().graph;
        let d = g.diagnostics();
        let real = pipeline::propagate(g, 100, c.seed, None, None).unwrap().result;
        let null = pipeline::propagate(g, 100, c.seed, Some(10 * g.edge_count()), None).unwrap().result;
        let gap = real.a_accuracy - null.a_accuracy;
        pass &= gap >= 0.20 && (null.a_accuracy - 0.5).abs() <= 0.10;
        parts.push(format!(
            "seed {}: in-degree {:.3}, bidirectional {:.3}, two-way {:.4}±{:.4} vs randomized {:.4}±{:.4}",
            c.seed, d.mean_b_in_degree, d.bidirectional_fraction, real.a_accuracy, real.accuracy_std, null.a_accuracy,
            null.accuracy_std
        ));
    }
    Outcome { pass, detail: format!("100 realizations each (need gap >= 0.20, randomized in 0.5±0.10); {}", parts.join("; ")) }
}

fn c8() -> Outcome {
    let mut ok = 0;
    let mut edges_total = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (na, nb) = (rng.random_range(50..400u64), rng.random_range(50..300u64));
        let side_a: BTreeMap<UserId, SubscriptionLabel> =
            (0..na).map(|u| (UserId(u), SubscriptionLabel::from_index(rng.random_range(0..2)))).collect();
        let side_b: BTreeSet<UserId> = (10_000..10_000 + nb).map(UserId).collect();
        let m = rng.random_range(na..4 * na);
        let edges: Vec<(UserId, UserId)> = (0..m)
            .map(|_| {
                let a = UserId(rng.random_range(0..na));
                let b = UserId(10_000 + rng.random_range(0..nb));
                if rng.random_bool(0.5) { (a, b) } else { (b, a) }
            })
            .collect();
        let g = BipartiteGraph::new(&side_a, &side_b, edges).unwrap();
        edges_total += g.edge_count();
        let (r, stats) = degree_preserving_randomize(&g, 10 * g.edge_count(), seed);
        let list: Vec<(UserId, UserId)> = r.edges().collect();
        let simple = list.iter().collect::<BTreeSet<_>>().len() == list.len();
        let bip = list.iter().all(|(x, y)| side_a.contains_key(x) != side_a.contains_key(y));
        let sorted = |mut v: Vec<u32>| {
            v.sort_unstable();
            v
        };
        let (d0, d1) = (g.degrees(), r.degrees());
        let multisets = sorted(d0.0.clone()) == sorted(d1.0.clone())
            && sorted(d0.1.clone()) == sorted(d1.1.clone())
            && sorted(d0.2.clone()) == sorted(d1.2.clone())
            && sorted(d0.3.clone()) == sorted(d1.3.clone());
        if d0 == d1 && multisets && simple && bip && stats.attempted >= 10 * g.edge_count() {
            ok += 1;
        }
    }
    Outcome {
        pass: ok == 100,
        detail: format!("{ok}/100 graphs ({edges_total} edges in total) keep every node's in/out degree, stay simple and bipartite after >= 10x|E| attempts"),
    }
}

fn cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_subtype"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn c9() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let d = dir.path();
    let runs: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("gen", vec!["--seed", "9", "gen", "--users", "3000", "--b-users", "1500"], vec!["cdr.csv", "truth.csv", "inter_cdr.csv", "bipartite_edges.csv", "sides.csv", "b_truth.csv", "metrics.json"]),
        ("classify", vec!["--seed", "9", "classify", "--cdr", "gen0/cdr.csv", "--truth", "gen0/truth.csv", "--portion"], vec!["metrics.json", "model_nb.json", "model_adaboost.json"]),
        ("label", vec!["--seed", "9", "label", "--cdr", "gen0/cdr.csv", "--truth", "gen0/truth.csv", "--lambda", "auto", "--prune", "--lambda-sweep", "0:8:3"], vec!["metrics.json", "solution.csv", "sweep.csv"]),
        ("crossnet-prop", vec!["--seed", "9", "crossnet", "--sides", "gen0/sides.csv", "--edges", "gen0/bipartite_edges.csv", "--realizations", "10"], vec!["metrics.json", "b_labels.csv"]),
        ("crossnet-null", vec!["--seed", "9", "crossnet", "--sides", "gen0/sides.csv", "--edges", "gen0/bipartite_edges.csv", "--realizations", "10", "--randomize"], vec!["metrics.json"]),
        ("crossnet-attr", vec!["--seed", "9", "crossnet", "--mode", "attr", "--sides", "gen0/sides.csv", "--cdr", "gen0/inter_cdr.csv"], vec!["metrics.json"]),
        ("eval", vec!["eval", "--pred", "label0/solution.csv", "--truth", "gen0/truth.csv"], vec!["metrics.json"]),
    ];
    let mut failed = Vec::new();
    for (name, args, files) in &runs {
        let short = name.split('-').next().unwrap();
        let mut outs = Vec::new();
        for rep in 0..2 {
            let out = if *name == "gen" || *name == "label" { format!("{short}{rep}") } else { format!("{name}{rep}") };
            let mut a = args.clone();
            a.extend(["--out", &out]);
            if !cli(d, &a) {
                failed.push(format!("{name} exited with an error"));
            }
            outs.push(files.iter().map(|f| fs::read(d.join(&out).join(f)).ok()).collect::<Vec<_>>());
        }
        if outs[0] != outs[1] || outs[0].iter().any(Option::is_none) {
            failed.push(format!("{name} outputs differ"));
        }
    }
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} subcommand runs repeated with fixed seed, outputs byte-identical", runs.len())
        } else {
            failed.join(", ")
        },
    }
}

fn c10(corpora: &[Corpus], runs: &[pipeline::LabelRun]) -> Outcome {
    let fractions: Vec<f64> = runs.iter().map(|r| r.fixed_fraction()).collect();
    let in_range = fractions.iter().all(|&f| f > 0.0 && f < 0.5);
    let mut monotone = true;
    for (c, r) in corpora.iter().zip(runs) {
        let fixed_at = |t1: f64, t2: f64| -> BTreeSet<usize> {
            let o = LabelOptions { prune: Some((t1, t2)), ..plain(Lambda::Value(1.0)) };
            let p = pipeline::build_problem(&c.ds, &r.posteriors, &o).unwrap();
            p.fixed.iter().enumerate().filter(|(_, f)| f.is_some()).map(|(i, _)| i).collect()
        };
        let base = fixed_at(DEFAULT_TAU1, DEFAULT_TAU2);
        monotone &= base.len() == r.fixed.iter().filter(|f| f.is_some()).count();
        let mut prev1 = base.clone();
        let mut prev2 = base;
        for k in 1..=5 {
            let step = 0.02 * k as f64;
            let a = fixed_at((DEFAULT_TAU1 + step).min(1.0), DEFAULT_TAU2);
            let b = fixed_at(DEFAULT_TAU1, DEFAULT_TAU2 + step);
            monotone &= a.is_subset(&prev1) && b.is_subset(&prev2);
            prev1 = a;
            prev2 = b;
        }
    }
    Outcome {
        pass: in_range && monotone,
        detail: format!(
            "fixed fraction per seed {:?} (need in (0, 0.5)); raising tau1 or tau2 in 0.02 steps never grows the fixed set: {monotone}",
            fractions.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn main() {
    let mut results = Vec::new();
    results.push(check(1, "max-flow correctness", Some(Duration::from_secs(30)), c1));
    results.push(check(2, "reduction exactness", Some(Duration::from_secs(60)), c2));
    results.push(check(3, "degeneration at lambda 0 and infinity", Some(Duration::from_secs(60)), c3));

    let start = Instant::now();
    let corpora: Vec<Corpus> = (1..=10u64)
        .map(|seed| {
            let (corpus, ds) = prepared(50_000, seed, true);
            Corpus { corpus, ds, seed }
        })
        .collect();
    let prep = start.elapsed();

    let mut runs = Vec::new();
    results.push(check(4, "labeling ordering on synthetic corpora", Some(Duration::from_secs(600) - prep), || {
        let (o, r) = c4(&corpora, prep);
        runs = r;
        o
    }));
    results.push(check(5, "portion attributes", Some(Duration::from_secs(300) - prep), || c5(&corpora)));
    results.push(check(6, "inter-operator attribute inference", Some(Duration::from_secs(300) - prep), || c6(&corpora)));
    results.push(check(7, "two-way propagation vs randomized null", Some(Duration::from_secs(600) - prep), || c7(&corpora)));
    results.push(check(8, "randomization invariants", Some(Duration::from_secs(60)), c8));
    results.push(check(9, "CLI determinism", None, c9));
    results.push(check(10, "pruning behaviour", None, || c10(&corpora, &runs)));

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
