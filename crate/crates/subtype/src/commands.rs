//! The five subcommands, each taking a fully resolved configuration and
//! writing its outputs plus a `metrics.json` and a `manifest.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use subtype_core::cdr::{CdrRecord, FilterPolicy};
use subtype_core::classify::{evaluate, ConfusionMatrix, GaussianNbModel, StumpEnsemble};
use subtype_core::crossnet::{BipartiteDiagnostics, BipartiteGraph};
use subtype_core::features::{FEATURE_NAMES, PORTION_NAMES};
use subtype_core::synth::generate_cdrs;
use subtype_core::{SubscriptionLabel, UserId};

use crate::config::{ClassifyConfig, CrossMode, CrossnetConfig, EvalConfig, GenConfig, InputConfig, LabelConfig};
use crate::error::CliError;
use crate::io::{self, CdrReadOptions, ParseReport, SolutionRow};
use crate::pipeline::{self, Dataset, LabelOptions};

/// Report lines on stdout; a closed pipe is not an error.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! sayln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const METRICS_SCHEMA: &str = "subtype.metrics/1";
pub const MANIFEST_SCHEMA: &str = "subtype.manifest/1";
pub const MODEL_SCHEMA: &str = "subtype.model/1";

/// Settings shared by every command.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub threads: usize,
    pub config_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

fn digest(path: &Path) -> Result<FileDigest, CliError> {
    Ok(FileDigest { path: path.to_path_buf(), sha256: io::sha256_file(path)? })
}

#[derive(Debug, Clone, Serialize)]
struct Versions {
    subtype: &'static str,
    subtype_core: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest {
    schema: &'static str,
    command: &'static str,
    versions: Versions,
    seed: u64,
    threads: usize,
    config: Value,
    config_file: Option<FileDigest>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

/// Tracks the files a command reads and writes for its manifest.
struct Run {
    command: &'static str,
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new(command: &'static str, out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Run { command, out: out.to_path_buf(), inputs: Vec::new(), outputs: Vec::new() })
    }

    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn metrics<T: Serialize>(&mut self, metrics: &T) -> Result<(), CliError> {
        let p = self.path("metrics.json");
        io::write_json(&p, metrics)?;
        Ok(())
    }

    fn finish<C: Serialize>(self, ctx: &RunContext, seed: u64, config: &C) -> Result<(), CliError> {
        let outputs = self.outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            command: self.command,
            versions: Versions { subtype: env!("CARGO_PKG_VERSION"), subtype_core: subtype_core::VERSION },
            seed,
            threads: ctx.threads,
            config: serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))?,
            config_file: ctx.config_file.as_deref().map(digest).transpose()?,
            inputs: self.inputs,
            outputs,
        };
        io::write_json(&self.out.join("manifest.json"), &manifest)?;
        Ok(())
    }
}

/// Accuracy and confusion counts, indexed `[actual][predicted]` with
/// prepaid first.
#[derive(Debug, Clone, Serialize)]
pub struct Scores {
    pub accuracy: f64,
    pub total: u64,
    pub counts: [[u64; 2]; 2],
    pub row_rates: [[f64; 2]; 2],
}

impl From<&ConfusionMatrix> for Scores {
    fn from(c: &ConfusionMatrix) -> Self {
        Scores { accuracy: c.accuracy(), total: c.total(), counts: c.counts, row_rates: c.row_rates() }
    }
}

fn table(title: &str, s: &Scores) -> String {
    let r = s.row_rates;
    format!(
        "{title}: accuracy {:.4} over {} users\n  actual prepaid:  {:.3} prepaid  {:.3} postpaid\n  actual postpaid: {:.3} prepaid  {:.3} postpaid\n",
        s.accuracy, s.total, r[0][0], r[0][1], r[1][0], r[1][1]
    )
}

// ---------------------------------------------------------------- gen

#[derive(Debug, Serialize)]
struct CorpusStats {
    users: usize,
    postpaid_fraction: f64,
    records: usize,
    calls: usize,
    sms: usize,
    /// Share of calls by `[caller label][callee label]`.
    call_mix: [[f64; 2]; 2],
    mean_calls: [f64; 2],
    mean_callees: [f64; 2],
}

fn corpus_stats(records: &[CdrRecord], truth: &BTreeMap<UserId, SubscriptionLabel>) -> CorpusStats {
    let mut mix = [[0u64; 2]; 2];
    let mut calls_by_user: BTreeMap<UserId, u64> = BTreeMap::new();
    let mut pairs: BTreeSet<(UserId, UserId)> = BTreeSet::new();
    let mut calls = 0;
    for r in records.iter().filter(|r| r.is_call()) {
        calls += 1;
        if let (Some(a), Some(b)) = (truth.get(&r.caller), truth.get(&r.callee)) {
            mix[a.index()][b.index()] += 1;
        }
        *calls_by_user.entry(r.caller).or_default() += 1;
        pairs.insert((r.caller, r.callee));
    }
    let mut degree: BTreeMap<UserId, u64> = BTreeMap::new();
    for (a, _) in pairs {
        *degree.entry(a).or_default() += 1;
    }
    let mut sums = [[0.0f64; 3]; 2];
    for (u, l) in truth {
        let s = &mut sums[l.index()];
        s[0] += *calls_by_user.get(u).unwrap_or(&0) as f64;
        s[1] += *degree.get(u).unwrap_or(&0) as f64;
        s[2] += 1.0;
    }
    let rate = |row: [u64; 2]| {
        let t = (row[0] + row[1]).max(1) as f64;
        [row[0] as f64 / t, row[1] as f64 / t]
    };
    let per = |k: usize| [0, 1].map(|l| sums[l][k] / sums[l][2].max(1.0));
    CorpusStats {
        users: truth.len(),
        postpaid_fraction: sums[1][2] / truth.len().max(1) as f64,
        records: records.len(),
        calls,
        sms: records.len() - calls,
        call_mix: [rate(mix[0]), rate(mix[1])],
        mean_calls: per(0),
        mean_callees: per(1),
    }
}

#[derive(Debug, Serialize)]
struct GenMetrics {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    corpus: CorpusStats,
    bipartite: Option<BipartiteDiagnostics>,
}

pub fn cmd_gen(ctx: &RunContext, cfg: &GenConfig) -> Result<(), CliError> {
    let corpus = generate_cdrs(&cfg.synth)?;
    let mut run = Run::new("gen", &cfg.out)?;
    let ext = if cfg.gzip { "csv.gz" } else { "csv" };
    io::write_cdrs(&run.path(&format!("cdr.{ext}")), &corpus.records, cfg.header)?;
    io::write_truth(&run.path("truth.csv"), &corpus.truth)?;
    let mut diagnostics = None;
    if let Some(b) = &corpus.bipartite {
        io::write_cdrs(&run.path(&format!("inter_cdr.{ext}")), &b.records, cfg.header)?;
        io::write_edges(&run.path("bipartite_edges.csv"), b.graph.edges())?;
        io::write_sides(&run.path("sides.csv"), &corpus.truth, b.graph.b_users().iter().map(|&u| (u, None)))?;
        io::write_truth(&run.path("b_truth.csv"), &b.hidden_b_labels)?;
        diagnostics = Some(b.graph.diagnostics());
    }
    let metrics = GenMetrics {
        schema: METRICS_SCHEMA,
        command: "gen",
        seed: cfg.synth.seed,
        corpus: corpus_stats(&corpus.records, &corpus.truth),
        bipartite: diagnostics,
    };
    sayln!(
        "generated {} users, {} records into {}",
        metrics.corpus.users,
        metrics.corpus.records,
        cfg.out.display()
    );
    run.metrics(&metrics)?;
    run.finish(ctx, cfg.synth.seed, cfg)
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Serialize)]
struct Population {
    parsed_lines: usize,
    malformed_lines: usize,
    classified: usize,
    labeled: usize,
    train: usize,
    test: usize,
}

fn load(run: &mut Run, input: &InputConfig) -> Result<(Dataset, ParseReport), CliError> {
    let policy = FilterPolicy::new(input.min_seconds, input.max_seconds)?;
    if !input.truth.exists() {
        return Err(CliError::Usage(format!("truth file {} does not exist", input.truth.display())));
    }
    let (records, report) = io::read_cdrs(&input.cdr, CdrReadOptions { header: input.header, window: None })?;
    run.input(&input.cdr)?;
    let truth = io::read_truth(&input.truth)?;
    run.input(&input.truth)?;
    if report.malformed > 0 {
        eprintln!("skipped {} malformed lines of {}", report.malformed, input.cdr.display());
        for m in report.examples.iter().take(5) {
            eprintln!("  line {}: {}", m.line, m.error);
        }
    }
    Ok((pipeline::prepare(&records, &truth, &policy)?, report))
}

fn population(ds: &Dataset, report: &ParseReport, split: &subtype_core::classify::TrainTestSplit) -> Population {
    Population {
        parsed_lines: report.lines,
        malformed_lines: report.malformed,
        classified: ds.users.len(),
        labeled: ds.truth.iter().filter(|l| l.is_some()).count(),
        train: split.train.len(),
        test: split.test.len(),
    }
}

#[derive(Debug, Serialize)]
struct ClassifyMetrics {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    portion: bool,
    features: Vec<&'static str>,
    population: Population,
    naive_bayes: Scores,
    adaboost: Scores,
}

#[derive(Serialize)]
struct ModelDoc<'a, M> {
    schema: &'static str,
    kind: &'static str,
    features: &'a [&'static str],
    model: &'a M,
}

pub fn cmd_classify(ctx: &RunContext, cfg: &ClassifyConfig) -> Result<(), CliError> {
    let mut run = Run::new("classify", &cfg.out)?;
    let (ds, report) = load(&mut run, &cfg.input)?;
    let n = cfg.train_per_class.unwrap_or_else(|| ds.default_train_per_class());
    let split = ds.split(n, cfg.seed)?;
    let mut names: Vec<&'static str> = FEATURE_NAMES.to_vec();
    let features = if cfg.portion {
        names.extend_from_slice(&PORTION_NAMES);
        ds.with_portion()?
    } else {
        ds.features.clone()
    };
    let rep = pipeline::classify(&ds, &features, &split, cfg.rounds)?;
    let metrics = ClassifyMetrics {
        schema: METRICS_SCHEMA,
        command: "classify",
        seed: cfg.seed,
        portion: cfg.portion,
        features: names.clone(),
        population: population(&ds, &report, &split),
        naive_bayes: (&rep.naive_bayes).into(),
        adaboost: (&rep.adaboost).into(),
    };
    say!("{}{}", table("naive bayes", &metrics.naive_bayes), table("adaboost", &metrics.adaboost));
    run.metrics(&metrics)?;
    let nb: ModelDoc<GaussianNbModel> =
        ModelDoc { schema: MODEL_SCHEMA, kind: "gaussian-naive-bayes", features: &names, model: &rep.nb_model };
    io::write_json(&run.path("model_nb.json"), &nb)?;
    let ada: ModelDoc<StumpEnsemble> =
        ModelDoc { schema: MODEL_SCHEMA, kind: "adaboost-stumps", features: &names, model: &rep.ensemble };
    io::write_json(&run.path("model_adaboost.json"), &ada)?;
    if cfg.features_csv {
        io::write_features(&run.path("features.csv"), &ds.users, &ds.truth, &features, &names)?;
    }
    run.finish(ctx, cfg.seed, cfg)
}

// ---------------------------------------------------------------- label

#[derive(Debug, Serialize)]
struct TuningPoint {
    lambda: f64,
    accuracy: f64,
}

#[derive(Debug, Serialize)]
struct PruneStats {
    tau1: f64,
    tau2: f64,
    fixed: usize,
    fixed_fraction: f64,
}

#[derive(Debug, Serialize)]
struct LabelMetrics {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    /// The trade-off used; `null` when infinite.
    lambda: Option<f64>,
    lambda_tuning: Vec<TuningPoint>,
    population: Population,
    naive_bayes: Scores,
    labeling: Scores,
    prune: Option<PruneStats>,
    energy: f64,
    flow_value: f64,
    cut_capacity: f64,
}

pub fn cmd_label(ctx: &RunContext, cfg: &LabelConfig) -> Result<(), CliError> {
    let mut run = Run::new("label", &cfg.out)?;
    let (ds, report) = load(&mut run, &cfg.input)?;
    let n = cfg.train_per_class.unwrap_or_else(|| ds.default_train_per_class());
    let split = ds.split(n, cfg.seed)?;
    let opts = LabelOptions {
        lambda: cfg.lambda,
        prune: cfg.prune.then_some((cfg.tau1, cfg.tau2)),
        weight: cfg.weight,
    };
    let r = pipeline::label(&ds, &split, &opts)?;
    let fixed = r.fixed.iter().filter(|f| f.is_some()).count();
    let metrics = LabelMetrics {
        schema: METRICS_SCHEMA,
        command: "label",
        seed: cfg.seed,
        lambda: r.lambda.is_finite().then_some(r.lambda),
        lambda_tuning: r.tuning.iter().map(|&(lambda, accuracy)| TuningPoint { lambda, accuracy }).collect(),
        population: population(&ds, &report, &split),
        naive_bayes: (&r.nb).into(),
        labeling: (&r.labeling).into(),
        prune: opts.prune.map(|(tau1, tau2)| PruneStats { tau1, tau2, fixed, fixed_fraction: r.fixed_fraction() }),
        energy: r.solution.energy,
        flow_value: r.solution.flow_value,
        cut_capacity: r.solution.cut_capacity,
    };
    say!("lambda {}\n{}{}", r.lambda, table("naive bayes", &metrics.naive_bayes), table("graph labeling", &metrics.labeling));
    if let Some(p) = &metrics.prune {
        sayln!("pruning fixed {} users ({:.1}%)", p.fixed, 100.0 * p.fixed_fraction);
    }
    run.metrics(&metrics)?;
    let rows: Vec<SolutionRow> = (0..ds.users.len())
        .map(|i| SolutionRow {
            user_id: ds.users[i].0,
            label: r.solution.labels[i],
            posterior_prepaid: r.posteriors[i].0,
            fixed_flag: u8::from(r.fixed[i].is_some()),
        })
        .collect();
    io::write_solution(&run.path("solution.csv"), &rows)?;
    if let Some(sweep) = cfg.lambda_sweep {
        let points = pipeline::lambda_sweep(&ds, &split, &opts, &sweep.values())?;
        let p = run.path("sweep.csv");
        let mut w = csv::Writer::from_writer(io::create_writer(&p)?);
        let werr = |e: csv::Error| CliError::Data(format!("{}: {e}", p.display()));
        w.write_record(["lambda", "accuracy", "energy"]).map_err(werr)?;
        for (l, acc, energy) in points {
            w.write_record([l.to_string(), acc.to_string(), energy.to_string()]).map_err(werr)?;
        }
        w.flush().map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
    }
    if cfg.problem_json {
        io::write_json(&run.path("problem.json"), &r.problem)?;
    }
    run.finish(ctx, cfg.seed, cfg)
}

// ---------------------------------------------------------------- crossnet

#[derive(Debug, Serialize)]
struct AttrMetrics {
    schema: &'static str,
    command: &'static str,
    mode: CrossMode,
    seed: u64,
    users: usize,
    train: usize,
    test: usize,
    naive_bayes: Scores,
    adaboost: Scores,
}

#[derive(Debug, Serialize)]
struct PropMetrics {
    schema: &'static str,
    command: &'static str,
    mode: CrossMode,
    seed: u64,
    randomized: bool,
    realizations: usize,
    mean: f64,
    std: f64,
    per_realization: Vec<f64>,
    confusion: Scores,
    graph: BipartiteDiagnostics,
    swaps_accepted: Option<usize>,
    swaps_attempted: Option<usize>,
    /// Direct accuracy of inferred side-B labels, when hidden labels were given.
    b_accuracy_mean: Option<f64>,
    b_accuracy: Option<Vec<f64>>,
}

fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

pub fn cmd_crossnet(ctx: &RunContext, cfg: &CrossnetConfig) -> Result<(), CliError> {
    require(&cfg.sides, "side manifest")?;
    let mut run = Run::new("crossnet", &cfg.out)?;
    let sides = io::read_sides(&cfg.sides)?;
    run.input(&cfg.sides)?;
    let side_a = sides.labeled_a();
    match cfg.mode {
        CrossMode::Attr => {
            require(&cfg.cdr, "inter-operator CDR file")?;
            let (records, _) = io::read_cdrs(&cfg.cdr, CdrReadOptions { header: cfg.header, window: None })?;
            run.input(&cfg.cdr)?;
            let cd = pipeline::cross_dataset(&records, &side_a, &sides.b)?;
            let n = cfg.train_per_class.unwrap_or_else(|| cd.default_train_per_class());
            let split = cd.split(n, cfg.seed)?;
            let rep = cd.classify(&split, cfg.rounds)?;
            let metrics = AttrMetrics {
                schema: METRICS_SCHEMA,
                command: "crossnet",
                mode: cfg.mode,
                seed: cfg.seed,
                users: cd.users.len(),
                train: split.train.len(),
                test: split.test.len(),
                naive_bayes: (&rep.naive_bayes).into(),
                adaboost: (&rep.adaboost).into(),
            };
            say!("{}{}", table("naive bayes", &metrics.naive_bayes), table("adaboost", &metrics.adaboost));
            run.metrics(&metrics)?;
        }
        CrossMode::Prop => {
            require(&cfg.edges, "bipartite edge list")?;
            let edges = io::read_edges(&cfg.edges)?;
            run.input(&cfg.edges)?;
            let graph = BipartiteGraph::new(&side_a, &sides.b, edges)?;
            let hidden = match &cfg.b_truth {
                Some(p) => {
                    require(p, "side-B truth file")?;
                    run.input(p)?;
                    Some(io::read_truth(p)?)
                }
                None => None,
            };
            let swaps = cfg.randomize.then(|| cfg.swaps.unwrap_or(10 * graph.edge_count()));
            let p = pipeline::propagate(&graph, cfg.realizations, cfg.seed, swaps, hidden.as_ref())?;
            let b_mean = p.b_accuracy.as_ref().map(|v| subtype_core::crossnet::mean_std(v).0);
            let metrics = PropMetrics {
                schema: METRICS_SCHEMA,
                command: "crossnet",
                mode: cfg.mode,
                seed: cfg.seed,
                randomized: cfg.randomize,
                realizations: p.result.realizations,
                mean: p.result.a_accuracy,
                std: p.result.accuracy_std,
                per_realization: p.result.per_realization.clone(),
                confusion: (&p.result.confusion).into(),
                graph: graph.diagnostics(),
                swaps_accepted: p.swaps.map(|s| s.0),
                swaps_attempted: p.swaps.map(|s| s.1),
                b_accuracy_mean: b_mean,
                b_accuracy: p.b_accuracy.clone(),
            };
            sayln!(
                "two-way accuracy {:.4} ± {:.4} over {} realizations{}",
                metrics.mean,
                metrics.std,
                metrics.realizations,
                if cfg.randomize { " (randomized)" } else { "" }
            );
            if let Some(b) = b_mean {
                sayln!("side-B accuracy against hidden labels {b:.4}");
            }
            run.metrics(&metrics)?;
            if !cfg.randomize {
                io::write_truth(&run.path("b_labels.csv"), &p.result.b_labels)?;
            }
        }
    }
    run.finish(ctx, cfg.seed, cfg)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Serialize)]
struct EvalMetrics {
    schema: &'static str,
    command: &'static str,
    predicted: usize,
    with_truth: usize,
    scores: Scores,
}

pub fn cmd_eval(ctx: &RunContext, cfg: &EvalConfig) -> Result<(), CliError> {
    require(&cfg.pred, "prediction file")?;
    require(&cfg.truth, "truth file")?;
    let mut run = Run::new("eval", &cfg.out)?;
    let pred = io::read_predictions(&cfg.pred)?;
    run.input(&cfg.pred)?;
    let truth = io::read_truth(&cfg.truth)?;
    run.input(&cfg.truth)?;
    let scored: BTreeMap<UserId, SubscriptionLabel> =
        pred.iter().filter(|(u, _)| truth.contains_key(u)).map(|(u, l)| (*u, *l)).collect();
    let truth_sub = scored.keys().map(|u| (*u, truth[u])).collect();
    let c = evaluate(&scored, &truth_sub)?;
    let metrics = EvalMetrics {
        schema: METRICS_SCHEMA,
        command: "eval",
        predicted: pred.len(),
        with_truth: scored.len(),
        scores: (&c).into(),
    };
    say!("{}", table("predictions", &metrics.scores));
    run.metrics(&metrics)?;
    run.finish(ctx, 0, cfg)
}
