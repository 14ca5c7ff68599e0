//! Experiment stages shared by the command line and the test suites.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use subtype_core::cdr::{build_call_graph_scoped, filter_users, CallGraph, CdrRecord, EdgeScope, FilterPolicy};
use subtype_core::classify::{
    evaluate, nb_posterior, nb_train, sample_training_set, train_and_score, BaselineReport, Classifier,
    ConfusionMatrix, GaussianNbModel, TrainTestSplit,
};
use subtype_core::crossnet::{
    degree_preserving_randomize, inter_company_attributes, propagation_realization, realization_seed,
    summarize_realizations, BipartiteGraph, PropagationResult,
};
use subtype_core::features::{attributes_at, log_transform, portion_attributes_at};
use subtype_core::matrix::Matrix;
use subtype_core::mincut::{
    prune_fix_labels_indexed, solve_labeling, LabelingProblem, LabelingSolution, SmoothnessWeight,
};
use subtype_core::rng::{derive_seed, stream};
use subtype_core::{Error, Result, SubscriptionLabel, UserId};

/// Training users per class unless the corpus is too small for it.
pub const DEFAULT_TRAIN_PER_CLASS: usize = 10_000;

/// Candidate trade-offs searched by `Lambda::Auto`: zero and powers of
/// `sqrt(2)` from 1/8 to 128.
pub fn lambda_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((-6..=14).map(|k| 2f64.powf(k as f64 / 2.0))).collect()
}

/// Classified population of a corpus with its attribute matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: CallGraph,
    /// Graph indices of the classified users, in user order.
    pub nodes: Vec<usize>,
    pub users: Vec<UserId>,
    /// Log-transformed attributes, one row per classified user.
    pub features: Matrix,
    pub truth: Vec<Option<SubscriptionLabel>>,
}

/// Filters users, builds the call graph over every edge touching a kept user
/// and extracts attributes of the kept users.
pub fn prepare(
    records: &[CdrRecord],
    truth: &BTreeMap<UserId, SubscriptionLabel>,
    policy: &FilterPolicy,
) -> Result<Dataset> {
    let kept = filter_users(records, policy);
    let mut graph = build_call_graph_scoped(records, &kept, EdgeScope::AnyKept);
    graph.attach_labels(truth);
    let nodes: Vec<usize> = graph.classified_nodes().collect();
    let rows: Vec<[f64; 5]> =
        nodes.par_iter().map(|&i| attributes_at(&graph, i).map(|a| log_transform(&a))).collect::<Result<_>>()?;
    let features = Matrix::from_rows(&rows)?;
    let users = nodes.iter().map(|&i| graph.user(i)).collect();
    let truth = nodes.iter().map(|&i| graph.label(i)).collect();
    Ok(Dataset { graph, nodes, users, features, truth })
}

impl Dataset {
    pub fn labeled(&self) -> BTreeMap<UserId, SubscriptionLabel> {
        self.users.iter().zip(&self.truth).filter_map(|(&u, l)| l.map(|l| (u, l))).collect()
    }

    /// Attributes extended with the postpaid portions of each user's callees,
    /// read from the true labels.
    pub fn with_portion(&self) -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = self
            .nodes
            .par_iter()
            .enumerate()
            .map(|(r, &i)| {
                let p = portion_attributes_at(&self.graph, i, |j| self.graph.label(j))?;
                let mut row = self.features.row(r).to_vec();
                row.extend_from_slice(&p.as_array());
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Matrix::from_rows(&rows)
    }

    /// Training size per class: the default, or half the rarer class.
    pub fn default_train_per_class(&self) -> usize {
        let post = self.truth.iter().filter(|l| **l == Some(SubscriptionLabel::Postpaid)).count();
        let pre = self.truth.iter().filter(|l| **l == Some(SubscriptionLabel::Prepaid)).count();
        DEFAULT_TRAIN_PER_CLASS.min(pre.min(post) / 2)
    }

    pub fn split(&self, n_per_class: usize, seed: u64) -> Result<TrainTestSplit> {
        sample_training_set(&self.labeled(), n_per_class, seed)
    }

    fn rows_in(&self, set: &BTreeSet<UserId>) -> Vec<usize> {
        (0..self.users.len()).filter(|&r| set.contains(&self.users[r])).collect()
    }
}

/// NB and AdaBoost on labeled rows of `features`.
pub fn classify(ds: &Dataset, features: &Matrix, split: &TrainTestSplit, rounds: usize) -> Result<BaselineReport> {
    let rows: Vec<usize> = (0..ds.users.len()).filter(|&r| ds.truth[r].is_some()).collect();
    let users: Vec<UserId> = rows.iter().map(|&r| ds.users[r]).collect();
    let labels: Vec<SubscriptionLabel> = rows.iter().map(|&r| ds.truth[r].expect("labeled row")).collect();
    train_and_score(&users, &features.select_rows(&rows), &labels, split, rounds)
}

fn train_nb(ds: &Dataset, train: &BTreeSet<UserId>) -> Result<GaussianNbModel> {
    let rows = ds.rows_in(train);
    let y: Vec<SubscriptionLabel> = rows.iter().map(|&r| ds.truth[r].ok_or(Error::MissingTruth(ds.users[r]))).collect::<Result<_>>()?;
    nb_train(&ds.features.select_rows(&rows), &y)
}

fn posteriors(ds: &Dataset, model: &GaussianNbModel) -> Result<Vec<(f64, f64)>> {
    (0..ds.users.len()).into_par_iter().map(|r| nb_posterior(model, ds.features.row(r))).collect()
}

fn score(ds: &Dataset, labels: &[SubscriptionLabel], test: &BTreeSet<UserId>) -> Result<ConfusionMatrix> {
    let rows = ds.rows_in(test);
    let pred = rows.iter().map(|&r| (ds.users[r], labels[r])).collect();
    let truth = rows.iter().map(|&r| Ok((ds.users[r], ds.truth[r].ok_or(Error::MissingTruth(ds.users[r]))?))).collect::<Result<_>>()?;
    evaluate(&pred, &truth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Value(f64),
    /// Chosen from `lambda_grid()` on held-out training users.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelOptions {
    pub lambda: Lambda,
    /// `(tau1, tau2)` when pruning is enabled.
    pub prune: Option<(f64, f64)>,
    pub weight: SmoothnessWeight,
}

#[derive(Debug, Clone)]
pub struct LabelRun {
    pub lambda: f64,
    /// `(P_prepaid, P_postpaid)` per classified user.
    pub posteriors: Vec<(f64, f64)>,
    pub nb_labels: Vec<SubscriptionLabel>,
    pub fixed: Vec<Option<SubscriptionLabel>>,
    /// The solved problem, with `lambda` set.
    pub problem: LabelingProblem,
    pub solution: LabelingSolution,
    pub nb: ConfusionMatrix,
    pub labeling: ConfusionMatrix,
    /// Held-out accuracy of every searched lambda when tuned.
    pub tuning: Vec<(f64, f64)>,
}

impl LabelRun {
    pub fn fixed_fraction(&self) -> f64 {
        if self.fixed.is_empty() {
            return 0.0;
        }
        self.fixed.iter().filter(|f| f.is_some()).count() as f64 / self.fixed.len() as f64
    }
}

fn argmax(p: (f64, f64)) -> SubscriptionLabel {
    if p.1 > p.0 {
        SubscriptionLabel::Postpaid
    } else {
        SubscriptionLabel::Prepaid
    }
}

fn fixed_labels(ds: &Dataset, post: &[(f64, f64)], prune: Option<(f64, f64)>) -> Result<Vec<Option<SubscriptionLabel>>> {
    let Some((tau1, tau2)) = prune else {
        return Ok(vec![None; post.len()]);
    };
    let mut local = vec![usize::MAX; ds.graph.node_count()];
    for (r, &i) in ds.nodes.iter().enumerate() {
        local[i] = r;
    }
    prune_fix_labels_indexed(
        post,
        |r| {
            ds.graph
                .call_neighbors(ds.nodes[r])
                .into_iter()
                .map(|j| local[j as usize])
                .filter(|&k| k != usize::MAX)
                .collect()
        },
        tau1,
        tau2,
    )
}

/// Labeling problem over the classified users with `lambda` zero and labels
/// fixed by pruning when enabled.
pub fn build_problem(ds: &Dataset, posteriors: &[(f64, f64)], opts: &LabelOptions) -> Result<LabelingProblem> {
    LabelingProblem::from_call_graph(&ds.graph, posteriors, 0.0, opts.weight)?
        .with_fixed(fixed_labels(ds, posteriors, opts.prune)?)
}

struct Solver<'a> {
    problem: LabelingProblem,
    ds: &'a Dataset,
}

impl Solver<'_> {
    fn new<'a>(ds: &'a Dataset, post: &[(f64, f64)], opts: &LabelOptions) -> Result<Solver<'a>> {
        Ok(Solver { problem: build_problem(ds, post, opts)?, ds })
    }

    fn solve(&mut self, lambda: f64) -> Result<LabelingSolution> {
        self.problem.lambda = lambda;
        solve_labeling(&self.problem)
    }

    fn accuracy(&mut self, lambda: f64, users: &BTreeSet<UserId>) -> Result<f64> {
        let s = self.solve(lambda)?;
        Ok(score(self.ds, &s.labels, users)?.accuracy())
    }
}

/// Picks lambda on a two-way split of the training users: NB fitted on one
/// half, labeling scored on the other. Ties go to the smaller lambda.
pub fn tune_lambda(ds: &Dataset, split: &TrainTestSplit, opts: &LabelOptions) -> Result<(f64, Vec<(f64, f64)>)> {
    let (fit, held) = halve(&split.train, ds, derive_seed(split.seed, stream::SPLIT, 2));
    let model = train_nb(ds, &fit)?;
    let post = posteriors(ds, &model)?;
    let mut solver = Solver::new(ds, &post, opts)?;
    let grid = lambda_grid();
    let mut scores = Vec::with_capacity(grid.len());
    for &l in &grid {
        scores.push((l, solver.accuracy(l, &held)?));
    }
    let best = scores.iter().fold(scores[0], |b, &s| if s.1 > b.1 { s } else { b });
    Ok((best.0, scores))
}

/// Class-balanced halves of `train`.
fn halve(train: &BTreeSet<UserId>, ds: &Dataset, seed: u64) -> (BTreeSet<UserId>, BTreeSet<UserId>) {
    let labeled = ds.labeled();
    let sub: BTreeMap<UserId, SubscriptionLabel> = train.iter().map(|u| (*u, labeled[u])).collect();
    let per = SubscriptionLabel::ALL.map(|l| sub.values().filter(|&&x| x == l).count()).into_iter().min().unwrap_or(0);
    let s = sample_training_set(&sub, per / 2, seed).expect("half of the rarer class is available");
    (s.train, s.test)
}

/// NB posteriors from the split's training users, then min-cut labeling of
/// every classified user; both scored on the split's test users.
pub fn label(ds: &Dataset, split: &TrainTestSplit, opts: &LabelOptions) -> Result<LabelRun> {
    let (lambda, tuning) = match opts.lambda {
        Lambda::Value(l) => (l, Vec::new()),
        Lambda::Auto => tune_lambda(ds, split, opts)?,
    };
    let model = train_nb(ds, &split.train)?;
    let post = posteriors(ds, &model)?;
    let nb_labels: Vec<SubscriptionLabel> = post.iter().map(|&p| argmax(p)).collect();
    let mut solver = Solver::new(ds, &post, opts)?;
    let solution = solver.solve(lambda)?;
    Ok(LabelRun {
        lambda,
        nb: score(ds, &nb_labels, &split.test)?,
        labeling: score(ds, &solution.labels, &split.test)?,
        fixed: solver.problem.fixed.clone(),
        problem: solver.problem,
        posteriors: post,
        nb_labels,
        solution,
        tuning,
    })
}

/// Test accuracy and energy of the labeling at each lambda.
pub fn lambda_sweep(
    ds: &Dataset,
    split: &TrainTestSplit,
    opts: &LabelOptions,
    lambdas: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    let model = train_nb(ds, &split.train)?;
    let post = posteriors(ds, &model)?;
    let mut solver = Solver::new(ds, &post, opts)?;
    lambdas
        .iter()
        .map(|&l| {
            let s = solver.solve(l)?;
            Ok((l, score(ds, &s.labels, &split.test)?.accuracy(), s.energy))
        })
        .collect()
}

/// Inter-operator attribute view of side-A users.
pub struct CrossDataset {
    pub users: Vec<UserId>,
    pub features: Matrix,
    pub labels: Vec<SubscriptionLabel>,
}

/// Attributes of A users from their calls to B users only; A users without
/// such calls or without a label are left out.
pub fn cross_dataset(
    inter: &[CdrRecord],
    side_a: &BTreeMap<UserId, SubscriptionLabel>,
    side_b: &BTreeSet<UserId>,
) -> Result<CrossDataset> {
    let a: BTreeSet<UserId> = side_a.keys().copied().collect();
    let attrs = inter_company_attributes(inter, &a, side_b)?;
    let mut rows = Vec::with_capacity(attrs.len());
    let (mut users, mut labels) = (Vec::new(), Vec::new());
    for (u, at) in &attrs {
        users.push(*u);
        labels.push(side_a[u]);
        rows.push(log_transform(at));
    }
    Ok(CrossDataset { users, features: Matrix::from_rows(&rows)?, labels })
}

impl CrossDataset {
    pub fn default_train_per_class(&self) -> usize {
        let post = self.labels.iter().filter(|&&l| l == SubscriptionLabel::Postpaid).count();
        DEFAULT_TRAIN_PER_CLASS.min(post.min(self.labels.len() - post) / 2)
    }

    pub fn split(&self, n_per_class: usize, seed: u64) -> Result<TrainTestSplit> {
        let labeled = self.users.iter().copied().zip(self.labels.iter().copied()).collect();
        sample_training_set(&labeled, n_per_class, seed)
    }

    pub fn classify(&self, split: &TrainTestSplit, rounds: usize) -> Result<BaselineReport> {
        train_and_score(&self.users, &self.features, &self.labels, split, rounds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRun {
    pub result: PropagationResult,
    /// Per-realization accuracy of inferred B labels against hidden labels.
    pub b_accuracy: Option<Vec<f64>>,
    /// Accepted and attempted swaps summed over realizations.
    pub swaps: Option<(usize, usize)>,
}

/// Two-way propagation, realizations in parallel. With `randomize`, every
/// realization runs on its own degree-preserving rewiring with that many
/// swaps.
pub fn propagate(
    graph: &BipartiteGraph,
    realizations: usize,
    seed: u64,
    randomize: Option<usize>,
    hidden_b: Option<&BTreeMap<UserId, SubscriptionLabel>>,
) -> Result<PropagationRun> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let balance = graph.postpaid_balance();
    let runs: Vec<_> = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let s = realization_seed(seed, r);
            match randomize {
                Some(n) => {
                    let (g, stats) = degree_preserving_randomize(graph, n, s);
                    (propagation_realization(&g, balance, s), Some(stats))
                }
                None => (propagation_realization(graph, balance, s), None),
            }
        })
        .collect();
    let swaps = randomize.map(|_| {
        runs.iter().filter_map(|(_, st)| *st).fold((0, 0), |(a, t), st| (a + st.accepted, t + st.attempted))
    });
    let b_accuracy = hidden_b
        .map(|hidden| {
            runs.iter()
                .map(|(o, _)| {
                    let pred = graph.b_users().iter().copied().zip(o.b_labels.iter().copied()).collect();
                    evaluate(&pred, hidden).map(|c| c.accuracy())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .transpose()?;
    let outcomes = runs.into_iter().map(|(o, _)| o).collect();
    Ok(PropagationRun { result: summarize_realizations(graph, outcomes), b_accuracy, swaps })
}

/// Predicted label of each row under a trained classifier.
pub fn predict_rows(c: &(dyn Classifier + Sync), features: &Matrix) -> Result<Vec<SubscriptionLabel>> {
    (0..features.rows()).into_par_iter().map(|r| c.predict(features.row(r))).collect()
}
