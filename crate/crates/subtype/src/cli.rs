//! Command-line surface. Flags are folded into a JSON overlay that is
//! merged over the config file section and the defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use subtype_core::mincut::SmoothnessWeight;
use subtype_core::synth::CountShape;

use crate::commands::{self, RunContext};
use crate::config::{self, flags, CrossMode, Sweep};
use crate::error::CliError;
use crate::pipeline::Lambda;

#[derive(Debug, Parser)]
#[command(name = "subtype", version, about = "Prepaid/postpaid inference from call detail records")]
pub struct Cli {
    /// TOML or JSON file with one table per subcommand; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed from which every random stream of the run is derived.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic CDR corpus with ground truth.
    Gen(GenArgs),
    /// Train and score the Naive Bayes and AdaBoost baselines.
    Classify(ClassifyArgs),
    /// Label users by min-cut over the call graph.
    Label(LabelArgs),
    /// Infer labels of another operator's users.
    Crossnet(CrossnetArgs),
    /// Score a prediction file against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub postpaid_fraction: Option<f64>,
    #[arg(long)]
    pub call_rate_ratio: Option<f64>,
    #[arg(long)]
    pub degree_ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub count_shape: Option<CountShapeArg>,
    /// Also generate another operator with this many users.
    #[arg(long)]
    pub b_users: Option<usize>,
    #[arg(long)]
    pub mean_b_in_degree: Option<f64>,
    #[arg(long)]
    pub bidirectional_fraction: Option<f64>,
    #[arg(long)]
    pub gzip: bool,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum CountShapeArg {
    Geometric,
    Poisson,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub cdr: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// The CDR file starts with a header line.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub min_seconds: Option<u64>,
    #[arg(long)]
    pub max_seconds: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Add the neighbour-label portion attributes.
    #[arg(long)]
    pub portion: bool,
    /// Also write the feature table.
    #[arg(long)]
    pub features_csv: bool,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// Smoothness trade-off: a number, `inf`, or `auto` to tune on training users.
    #[arg(long, value_parser = Lambda::parse)]
    pub lambda: Option<Lambda>,
    #[arg(long, value_enum)]
    pub weight: Option<WeightArg>,
    /// Fix confident users before solving.
    #[arg(long)]
    pub prune: bool,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    /// `lo:hi:steps`, or `lo:hi:steps:log` for geometric spacing.
    #[arg(long, value_parser = Sweep::parse)]
    pub lambda_sweep: Option<Sweep>,
    #[arg(long)]
    pub problem_json: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum WeightArg {
    InverseOutDegree,
    CallShare,
    DurationShare,
}

#[derive(Debug, Args)]
pub struct CrossnetArgs {
    #[arg(long, value_enum)]
    pub mode: Option<CrossMode>,
    #[arg(long)]
    pub sides: Option<PathBuf>,
    #[arg(long)]
    pub cdr: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Hidden labels of the other operator, for direct scoring.
    #[arg(long)]
    pub b_truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub train_per_class: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Rewire the graph with degree-preserving swaps before each realization.
    #[arg(long)]
    pub randomize: bool,
    /// Swap attempts per realization (default ten per edge).
    #[arg(long)]
    pub swaps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn v<T: Serialize>(x: Option<T>) -> Option<Value> {
    x.map(|x| serde_json::to_value(x).expect("flag values serialize"))
}

fn on(b: bool) -> Option<Value> {
    b.then_some(Value::Bool(true))
}

fn input_flags(a: &InputArgs) -> Vec<(&'static str, Option<Value>)> {
    vec![
        ("input.cdr", v(a.cdr.as_ref())),
        ("input.truth", v(a.truth.as_ref())),
        ("input.header", on(a.header)),
        ("input.min_seconds", v(a.min_seconds)),
        ("input.max_seconds", v(a.max_seconds)),
    ]
}

impl Cli {
    pub fn run(&self) -> Result<(), CliError> {
        let file = self.config.as_deref().map(config::read_config_file).transpose()?;
        let file = file.as_ref();
        let ctx = RunContext { threads: rayon::current_num_threads(), config_file: self.config.clone() };
        let seed = v(self.seed);
        match &self.command {
            Command::Gen(a) => {
                let shape = a.count_shape.map(|s| match s {
                    CountShapeArg::Geometric => CountShape::Geometric,
                    CountShapeArg::Poisson => CountShape::Poisson,
                });
                let f = vec![
                    ("out", v(a.out.as_ref())),
                    ("gzip", on(a.gzip)),
                    ("header", on(a.header)),
                    ("synth.seed", seed),
                    ("synth.n_users", v(a.users)),
                    ("synth.postpaid_fraction", v(a.postpaid_fraction)),
                    ("synth.call_rate_ratio", v(a.call_rate_ratio)),
                    ("synth.degree_ratio", v(a.degree_ratio)),
                    ("synth.count_shape", v(shape)),
                    ("synth.bipartite.n_b_users", v(a.b_users)),
                    ("synth.bipartite.mean_b_in_degree", v(a.mean_b_in_degree)),
                    ("synth.bipartite.bidirectional_fraction", v(a.bidirectional_fraction)),
                ];
                let overlay = flags(f);
                commands::cmd_gen(&ctx, &config::resolve(file, "gen", overlay)?)
            }
            Command::Classify(a) => {
                let mut f = input_flags(&a.input);
                f.extend([
                    ("out", v(a.out.as_ref())),
                    ("seed", seed),
                    ("train_per_class", v(a.train_per_class)),
                    ("rounds", v(a.rounds)),
                    ("portion", on(a.portion)),
                    ("features_csv", on(a.features_csv)),
                ]);
                commands::cmd_classify(&ctx, &config::resolve(file, "classify", flags(f))?)
            }
            Command::Label(a) => {
                let weight = a.weight.map(|w| match w {
                    WeightArg::InverseOutDegree => SmoothnessWeight::InverseOutDegree,
                    WeightArg::CallShare => SmoothnessWeight::CallShare,
                    WeightArg::DurationShare => SmoothnessWeight::DurationShare,
                });
                let mut f = input_flags(&a.input);
                f.extend([
                    ("out", v(a.out.as_ref())),
                    ("seed", seed),
                    ("train_per_class", v(a.train_per_class)),
                    ("lambda", v(a.lambda)),
                    ("weight", v(weight)),
                    ("prune", on(a.prune)),
                    ("tau1", v(a.tau1)),
                    ("tau2", v(a.tau2)),
                    ("lambda_sweep", v(a.lambda_sweep)),
                    ("problem_json", on(a.problem_json)),
                ]);
                commands::cmd_label(&ctx, &config::resolve(file, "label", flags(f))?)
            }
            Command::Crossnet(a) => {
                let f = vec![
                    ("mode", v(a.mode)),
                    ("sides", v(a.sides.as_ref())),
                    ("cdr", v(a.cdr.as_ref())),
                    ("header", on(a.header)),
                    ("edges", v(a.edges.as_ref())),
                    ("b_truth", v(a.b_truth.as_ref())),
                    ("out", v(a.out.as_ref())),
                    ("seed", seed),
                    ("train_per_class", v(a.train_per_class)),
                    ("rounds", v(a.rounds)),
                    ("realizations", v(a.realizations)),
                    ("randomize", on(a.randomize)),
                    ("swaps", v(a.swaps)),
                ];
                commands::cmd_crossnet(&ctx, &config::resolve(file, "crossnet", flags(f))?)
            }
            Command::Eval(a) => {
                let f = vec![("pred", v(a.pred.as_ref())), ("truth", v(a.truth.as_ref())), ("out", v(a.out.as_ref()))];
                commands::cmd_eval(&ctx, &config::resolve(file, "eval", flags(f))?)
            }
        }
    }
}
