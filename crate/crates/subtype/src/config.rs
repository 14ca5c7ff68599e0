//! Run configurations: defaults, overlaid by a config file section,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use subtype_core::mincut::{SmoothnessWeight, DEFAULT_LAMBDA, DEFAULT_TAU1, DEFAULT_TAU2};
use subtype_core::synth::SynthConfig;

use crate::error::CliError;
use crate::pipeline::Lambda;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub out: PathBuf,
    /// Write gzip-compressed CDR files.
    pub gzip: bool,
    /// Start CDR files with a column header line.
    pub header: bool,
    pub synth: SynthConfig,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { out: "corpus".into(), gzip: false, header: false, synth: SynthConfig::default() }
    }
}

/// Where a CDR corpus comes from and which users are classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub cdr: PathBuf,
    pub truth: PathBuf,
    /// The CDR file starts with a header line.
    pub header: bool,
    pub min_seconds: u64,
    pub max_seconds: u64,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            cdr: "corpus/cdr.csv".into(),
            truth: "corpus/truth.csv".into(),
            header: false,
            min_seconds: 10,
            max_seconds: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub input: InputConfig,
    pub out: PathBuf,
    pub seed: u64,
    /// Training users per class; by default 10,000 or half the rarer class.
    pub train_per_class: Option<usize>,
    pub rounds: usize,
    /// Add the postpaid portions of each user's callees, read from the truth.
    pub portion: bool,
    /// Also write the attribute matrix as CSV.
    pub features_csv: bool,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            input: InputConfig::default(),
            out: "classify".into(),
            seed: 0,
            train_per_class: None,
            rounds: 50,
            portion: false,
            features_csv: false,
        }
    }
}

/// `lo:hi:steps`, evenly spaced, or `lo:hi:steps:log`, geometrically spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub log: bool,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Sweep, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("lambda sweep `{s}` is not lo:hi:steps[:log]");
        if parts.len() != 3 && !(parts.len() == 4 && parts[3] == "log") {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let steps: usize = parts[2].parse().map_err(|_| bad())?;
        let log = parts.len() == 4;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo && steps >= 1) || (log && lo <= 0.0) {
            return Err(format!("lambda sweep `{s}` needs 0 <= lo <= hi, steps >= 1 and lo > 0 for log spacing"));
        }
        Ok(Sweep { lo, hi, steps, log })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    self.lo * (self.hi / self.lo).powf(t)
                } else {
                    self.lo + (self.hi - self.lo) * t
                }
            })
            .collect()
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.steps)?;
        if self.log {
            f.write_str(":log")?;
        }
        Ok(())
    }
}

impl Serialize for Sweep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sweep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Sweep::parse(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Lambda {
    /// A non-negative number, `inf`, or `auto`.
    pub fn parse(s: &str) -> Result<Lambda, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Lambda::Auto),
            "inf" | "infinity" => Ok(Lambda::Value(f64::INFINITY)),
            t => match t.parse::<f64>() {
                Ok(v) if v >= 0.0 && !v.is_nan() => Ok(Lambda::Value(v)),
                _ => Err(format!("lambda `{s}` is not a non-negative number, `inf` or `auto`")),
            },
        }
    }
}

impl Serialize for Lambda {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lambda::Auto => s.serialize_str("auto"),
            Lambda::Value(v) if v.is_infinite() => s.serialize_str("inf"),
            Lambda::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v >= 0.0 => Ok(Lambda::Value(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("lambda {v} is negative"))),
            Raw::Text(t) => Lambda::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub input: InputConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub train_per_class: Option<usize>,
    pub lambda: Lambda,
    pub weight: SmoothnessWeight,
    pub prune: bool,
    pub tau1: f64,
    pub tau2: f64,
    pub lambda_sweep: Option<Sweep>,
    /// Also write the labeling problem as JSON.
    pub problem_json: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            input: InputConfig::default(),
            out: "label".into(),
            seed: 0,
            train_per_class: None,
            lambda: Lambda::Value(DEFAULT_LAMBDA),
            weight: SmoothnessWeight::default(),
            prune: false,
            tau1: DEFAULT_TAU1,
            tau2: DEFAULT_TAU2,
            lambda_sweep: None,
            problem_json: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CrossMode {
    /// Classify company users from their calls into the other operator.
    Attr,
    /// Two-way majority propagation over the bipartite graph.
    Prop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossnetConfig {
    pub mode: CrossMode,
    /// Side manifest `user_id,side,label`.
    pub sides: PathBuf,
    /// Inter-operator CDRs (attr mode).
    pub cdr: PathBuf,
    pub header: bool,
    /// Bipartite edge list `from,to` (prop mode).
    pub edges: PathBuf,
    /// Hidden labels of side-B users, for scoring synthetic runs only.
    pub b_truth: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub train_per_class: Option<usize>,
    pub rounds: usize,
    pub realizations: usize,
    /// Run on degree-preserving rewirings of the graph.
    pub randomize: bool,
    /// Swaps per rewiring; ten per edge by default.
    pub swaps: Option<usize>,
}

impl Default for CrossnetConfig {
    fn default() -> Self {
        CrossnetConfig {
            mode: CrossMode::Prop,
            sides: "corpus/sides.csv".into(),
            cdr: "corpus/inter_cdr.csv".into(),
            header: false,
            edges: "corpus/bipartite_edges.csv".into(),
            b_truth: None,
            out: "crossnet".into(),
            seed: 0,
            train_per_class: None,
            rounds: 50,
            realizations: 100,
            randomize: false,
            swaps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// CSV whose first columns are `user_id,label`.
    pub pred: PathBuf,
    pub truth: PathBuf,
    pub out: PathBuf,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { pred: "label/solution.csv".into(), truth: "corpus/truth.csv".into(), out: "eval".into() }
    }
}

/// Reads a TOML (by `.toml` extension) or JSON config document.
pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str::<Value>(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str::<Value>(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults, then the file's `[section]` table (or the whole document when
/// it has none), then `flags`. Unknown keys are rejected.
pub fn resolve<T>(file: Option<&Value>, section: &str, flags: Value) -> Result<T, CliError>
where
    T: Default + Serialize + DeserializeOwned,
{
    let mut v = serde_json::to_value(T::default()).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(doc) = file {
        let part = match doc.get(section) {
            Some(s @ Value::Object(_)) => s.clone(),
            _ => doc.clone(),
        };
        merge(&mut v, part);
    }
    merge(&mut v, flags);
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("{section} config: {e}")))
}

/// Builds a nested JSON object from `(dotted.key, value)` pairs, skipping
/// absent values.
pub fn flags(pairs: Vec<(&str, Option<Value>)>) -> Value {
    let mut root = Value::Object(Default::default());
    for (key, value) in pairs {
        let Some(value) = value else { continue };
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for p in &parts[..parts.len() - 1] {
            node = node
                .as_object_mut()
                .expect("flag paths nest objects")
                .entry(*p)
                .or_insert_with(|| Value::Object(Default::default()));
        }
        node.as_object_mut().expect("flag paths nest objects").insert(parts[parts.len() - 1].into(), value);
    }
    root
}
