//! Readers and writers for the on-disk formats.
//!
//! Files whose name ends in `.gz` are transparently gzip-compressed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtype_core::cdr::{parse_line, CdrRecord, ObservationWindow};
use subtype_core::crossnet::Side;
use subtype_core::matrix::Matrix;
use subtype_core::{SubscriptionLabel, UserId};

/// Share of malformed CDR lines above which a file is rejected outright.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

/// Malformed-line reports kept in memory; the count is always exact.
const MAX_REPORTED: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{path}: {malformed} of {lines} lines are malformed (first at line {first_line}: {first}); wrong format?")]
    TooManyMalformed { path: PathBuf, malformed: usize, lines: usize, first_line: usize, first: String },
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open { path: path.into(), source })?;
    let inner: Box<dyn Read> = if is_gz(path) { Box::new(MultiGzDecoder::new(file)) } else { Box::new(file) };
    Ok(Box::new(BufReader::with_capacity(1 << 16, inner)))
}

/// Buffered writer; gzip output is finished when the writer is dropped.
pub fn create_writer(path: &Path) -> Result<Box<dyn Write>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.into(), source })?;
    }
    let file = File::create(path).map_err(|source| IoError::Write { path: path.into(), source })?;
    Ok(if is_gz(path) {
        Box::new(BufWriter::new(GzEncoder::new(file, Compression::default())))
    } else {
        Box::new(BufWriter::new(file))
    })
}

/// Hex SHA-256 of a file's bytes as stored on disk.
pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let mut file = File::open(path).map_err(|source| IoError::Open { path: path.into(), source })?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).map_err(|source| IoError::Read { path: path.into(), source })?;
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CdrReadOptions {
    /// Skip the first line.
    pub header: bool,
    pub window: Option<ObservationWindow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedLine {
    pub line: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    /// Data lines seen, blank lines and the header excluded.
    pub lines: usize,
    pub malformed: usize,
    /// The first malformed lines, in file order.
    pub examples: Vec<MalformedLine>,
}

/// Reads a `csv-v1` CDR file. Malformed lines are skipped and reported; more
/// than `MAX_MALFORMED_FRACTION` of them fails the whole file.
pub fn read_cdrs(path: &Path, opts: CdrReadOptions) -> Result<(Vec<CdrRecord>, ParseReport), IoError> {
    let reader = open_reader(path)?;
    let mut records = Vec::new();
    let mut report = ParseReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| IoError::Read { path: path.into(), source })?;
        if (i == 0 && opts.header) || line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match parse_line(&line, opts.window) {
            Ok(r) => records.push(r),
            Err(e) => {
                report.malformed += 1;
                if report.examples.len() < MAX_REPORTED {
                    report.examples.push(MalformedLine { line: i + 1, error: e.to_string() });
                }
            }
        }
    }
    if report.malformed as f64 > MAX_MALFORMED_FRACTION * report.lines as f64 {
        let first = &report.examples[0];
        return Err(IoError::TooManyMalformed {
            path: path.into(),
            malformed: report.malformed,
            lines: report.lines,
            first_line: first.line,
            first: first.error.clone(),
        });
    }
    Ok((records, report))
}

pub fn write_cdrs(path: &Path, records: &[CdrRecord], header: bool) -> Result<(), IoError> {
    let werr = |source| IoError::Write { path: path.into(), source };
    let mut w = create_writer(path)?;
    if header {
        writeln!(w, "timestamp,event_type,duration,caller,callee").map_err(werr)?;
    }
    for r in records {
        writeln!(w, "{r}").map_err(werr)?;
    }
    w.flush().map_err(werr)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<Box<dyn BufRead>>, IoError> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open_reader(path)?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<Box<dyn Write>>, IoError> {
    Ok(csv::Writer::from_writer(create_writer(path)?))
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => IoError::Write { path: path.into(), source },
        kind => IoError::Malformed { path: path.into(), line, message: format!("{kind:?}") },
    }
}

fn parse_label(path: &Path, line: usize, s: &str) -> Result<SubscriptionLabel, IoError> {
    SubscriptionLabel::parse(s).ok_or_else(|| IoError::Malformed {
        path: path.into(),
        line,
        message: format!("unknown label `{s}`"),
    })
}

fn parse_user(path: &Path, line: usize, s: &str) -> Result<UserId, IoError> {
    s.parse().map(UserId).map_err(|_| IoError::Malformed { path: path.into(), line, message: format!("bad user id `{s}`") })
}

/// Iterates data rows as `(line number, fields)`.
fn rows(path: &Path, min_fields: usize) -> Result<Vec<(usize, csv::StringRecord)>, IoError> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() < min_fields {
            return Err(IoError::Malformed {
                path: path.into(),
                line,
                message: format!("expected {min_fields} fields, found {}", rec.len()),
            });
        }
        out.push((line, rec));
    }
    Ok(out)
}

/// `user_id,label` with a header row.
pub fn read_truth(path: &Path) -> Result<BTreeMap<UserId, SubscriptionLabel>, IoError> {
    let mut out = BTreeMap::new();
    for (line, rec) in rows(path, 2)? {
        let u = parse_user(path, line, &rec[0])?;
        if out.insert(u, parse_label(path, line, &rec[1])?).is_some() {
            return Err(IoError::Malformed { path: path.into(), line, message: format!("user {u} listed twice") });
        }
    }
    Ok(out)
}

pub fn write_truth(path: &Path, truth: &BTreeMap<UserId, SubscriptionLabel>) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let e = |e| csv_error(path, e);
    w.write_record(["user_id", "label"]).map_err(e)?;
    for (u, l) in truth {
        w.write_record([u.0.to_string(), l.as_str().to_string()]).map_err(e)?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })
}

/// `user_id,label,<feature columns>`; the label column is empty for users
/// without a known label.
pub fn write_features(
    path: &Path,
    users: &[UserId],
    labels: &[Option<SubscriptionLabel>],
    features: &Matrix,
    names: &[&str],
) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let e = |e| csv_error(path, e);
    let mut head = vec!["user_id", "label"];
    head.extend_from_slice(names);
    w.write_record(&head).map_err(e)?;
    for (r, u) in users.iter().enumerate() {
        let mut row = vec![u.0.to_string(), labels[r].map_or(String::new(), |l| l.as_str().to_string())];
        row.extend(features.row(r).iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(e)?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub user_id: u64,
    pub label: SubscriptionLabel,
    pub posterior_prepaid: f64,
    pub fixed_flag: u8,
}

/// `user_id,label,posterior_prepaid,fixed_flag`.
pub fn write_solution(path: &Path, rows: &[SolutionRow]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })
}

/// Predicted labels from any CSV whose first two columns are `user_id` and
/// `label` (solutions, truth files).
pub fn read_predictions(path: &Path) -> Result<BTreeMap<UserId, SubscriptionLabel>, IoError> {
    read_truth(path)
}

/// `from,to` bipartite edge list.
pub fn read_edges(path: &Path) -> Result<Vec<(UserId, UserId)>, IoError> {
    rows(path, 2)?
        .into_iter()
        .map(|(line, rec)| Ok((parse_user(path, line, &rec[0])?, parse_user(path, line, &rec[1])?)))
        .collect()
}

pub fn write_edges(path: &Path, edges: impl IntoIterator<Item = (UserId, UserId)>) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let e = |e| csv_error(path, e);
    w.write_record(["from", "to"]).map_err(e)?;
    for (a, b) in edges {
        w.write_record([a.0.to_string(), b.0.to_string()]).map_err(e)?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })
}

/// Side manifest: company users with their labels and external users.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sides {
    pub a: BTreeMap<UserId, Option<SubscriptionLabel>>,
    pub b: BTreeSet<UserId>,
}

impl Sides {
    /// Labeled company users; unlabeled ones are dropped.
    pub fn labeled_a(&self) -> BTreeMap<UserId, SubscriptionLabel> {
        self.a.iter().filter_map(|(u, l)| l.map(|l| (*u, l))).collect()
    }
}

/// `user_id,side,label` with side `A` or `B` and an optional label.
pub fn read_sides(path: &Path) -> Result<Sides, IoError> {
    let mut sides = Sides::default();
    for (line, rec) in rows(path, 2)? {
        let u = parse_user(path, line, &rec[0])?;
        let label = match rec.get(2) {
            Some(s) if !s.is_empty() => Some(parse_label(path, line, s)?),
            _ => None,
        };
        let dup = match &rec[1] {
            "A" | "a" => sides.a.insert(u, label).is_some() || sides.b.contains(&u),
            "B" | "b" => !sides.b.insert(u) || sides.a.contains_key(&u),
            other => {
                return Err(IoError::Malformed { path: path.into(), line, message: format!("unknown side `{other}`") })
            }
        };
        if dup {
            return Err(IoError::Malformed { path: path.into(), line, message: format!("user {u} listed twice") });
        }
    }
    Ok(sides)
}

pub fn write_sides(
    path: &Path,
    a: &BTreeMap<UserId, SubscriptionLabel>,
    b: impl IntoIterator<Item = (UserId, Option<SubscriptionLabel>)>,
) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    let e = |e| csv_error(path, e);
    w.write_record(["user_id", "side", "label"]).map_err(e)?;
    let side = |s: Side| match s {
        Side::A => "A",
        Side::B => "B",
    };
    for (u, l) in a {
        w.write_record([u.0.to_string(), side(Side::A).into(), l.as_str().into()]).map_err(e)?;
    }
    for (u, l) in b {
        w.write_record([u.0.to_string(), side(Side::B).into(), l.map_or(String::new(), |l| l.as_str().into())])
            .map_err(e)?;
    }
    w.flush().map_err(|source| IoError::Write { path: path.into(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let werr = |source| IoError::Write { path: path.into(), source };
    let mut w = create_writer(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| werr(e.into()))?;
    writeln!(w).map_err(werr)?;
    w.flush().map_err(werr)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    serde_json::from_reader(open_reader(path)?).map_err(|e| IoError::Malformed {
        path: path.into(),
        line: e.line(),
        message: e.to_string(),
    })
}
