//! Edge-list ingestion, canonical on-disk form, dataset manifests and
//! validation of computed topology against reference statistics.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};
use crate::metrics::{topology_stats, TopologyStats};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Str(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(v) => write!(f, "{v}"),
            Label::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelType {
    #[default]
    Integer,
    String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatOptions {
    pub label_type: LabelType,
    /// Lines whose first non-blank character is one of these are skipped.
    pub comment_chars: Vec<char>,
}

impl Default for FormatOptions {
    fn default() -> Self {
        FormatOptions {
            label_type: LabelType::Integer,
            comment_chars: vec!['#', '%'],
        }
    }
}

impl FormatOptions {
    pub fn with_labels(label_type: LabelType) -> Self {
        FormatOptions {
            label_type,
            ..Default::default()
        }
    }
}

/// Parses whitespace- or comma-separated pairs. Columns past the second are
/// ignored. `origin` only labels error messages.
pub fn parse_edge_list(text: &str, origin: &Path, opts: &FormatOptions) -> Result<Vec<(Label, Label)>> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(|c| opts.comment_chars.contains(&c)) {
            continue;
        }
        let mut fields = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty());
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected two node labels, got `{trimmed}`")));
        };
        let label = |s: &str| -> Result<Label> {
            match opts.label_type {
                LabelType::String => Ok(Label::Str(s.to_string())),
                LabelType::Integer => s
                    .parse()
                    .map(Label::Int)
                    .map_err(|_| parse_err(format!("`{s}` is not an integer node label"))),
            }
        };
        edges.push((label(a)?, label(b)?));
    }
    if edges.is_empty() {
        return Err(Error::EmptyFile {
            path: origin.to_path_buf(),
        });
    }
    Ok(edges)
}

pub fn load_edge_list(path: &Path, opts: &FormatOptions) -> Result<Vec<(Label, Label)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path, opts)
}

/// Loads, symmetrises and deduplicates an edge list; labels are returned in
/// node-id order.
pub fn load_graph(path: &Path, opts: &FormatOptions) -> Result<(Graph, Vec<Label>)> {
    build_graph(load_edge_list(path, opts)?)
}

pub fn write_canonical<W: Write>(g: &Graph, mut out: W) -> io::Result<()> {
    for p in g.edges() {
        writeln!(out, "{} {}", p.x(), p.y())?;
    }
    out.flush()
}

/// The canonical form: one `u v` line per edge, `u < v`, sorted.
pub fn canonical_string(g: &Graph) -> String {
    let mut buf = Vec::with_capacity(g.edge_count() * 8);
    write_canonical(g, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("canonical form is ASCII")
}

pub fn save_canonical(g: &Graph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_canonical(g, io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_canonical(path: &Path) -> Result<Graph> {
    load_graph(path, &FormatOptions::default()).map(|(g, _)| g)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Published topology of a network. Real-valued fields are optional so that
/// unreliable reference values can be left out.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub nodes: usize,
    pub edges: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_degree: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_clustering: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_heterogeneity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub avg_degree: f64,
    /// Wide by default: the reference clustering values do not all follow
    /// the all-nodes averaging used here.
    pub avg_clustering: f64,
    pub density: f64,
    pub degree_heterogeneity: f64,
    pub avg_distance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            avg_degree: 1e-4,
            avg_clustering: 0.05,
            density: 5e-4,
            degree_heterogeneity: 2e-3,
            avg_distance: 2e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub field: String,
    pub expected: f64,
    pub actual: f64,
    /// `actual - expected`.
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<FieldCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FieldCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, field: &str) -> Option<&FieldCheck> {
        self.checks.iter().find(|c| c.field == field)
    }
}

/// Compares computed stats against reference values. Counts must match
/// exactly; real fields must lie within their tolerance.
pub fn validate_stats(actual: &TopologyStats, expected: &ReferenceStats, tol: &Tolerances) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |field: &str, expected: f64, actual: f64, tolerance: f64| {
        let delta = actual - expected;
        checks.push(FieldCheck {
            field: field.to_string(),
            expected,
            actual,
            delta,
            tolerance,
            pass: delta.abs() <= tolerance,
        });
    };
    push("nodes", expected.nodes as f64, actual.node_count as f64, 0.0);
    push("edges", expected.edges as f64, actual.edge_count as f64, 0.0);
    let reals = [
        ("avg_degree", expected.avg_degree, actual.avg_degree, tol.avg_degree),
        ("avg_clustering", expected.avg_clustering, actual.avg_clustering, tol.avg_clustering),
        ("density", expected.density, actual.density, tol.density),
        (
            "degree_heterogeneity",
            expected.degree_heterogeneity,
            actual.degree_heterogeneity,
            tol.degree_heterogeneity,
        ),
        ("avg_distance", expected.avg_distance, actual.avg_distance, tol.avg_distance),
    ];
    for (field, exp, act, t) in reals {
        if let Some(exp) = exp {
            push(field, exp, act, t);
        }
    }
    ValidationReport { checks }
}

/// Report-only: a graph whose stats cannot be computed fails every field.
pub fn validate_against_table3(g: &Graph, expected: &ReferenceStats, tol: &Tolerances) -> ValidationReport {
    let actual = topology_stats(g).unwrap_or(TopologyStats {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        avg_degree: f64::NAN,
        avg_clustering: f64::NAN,
        density: f64::NAN,
        degree_heterogeneity: f64::NAN,
        avg_distance: f64::NAN,
    });
    validate_stats(&actual, expected, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub labels: LabelType,
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub weighted: bool,
    /// SHA-256 of the raw file; verified on load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceStats>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub labels: Vec<Label>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetDescriptor>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            Error::Manifest(m) => Error::Manifest(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        m.base_dir = base_dir.into();
        let mut names: Vec<&str> = m.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Manifest(format!("dataset `{}` is listed twice", w[0])));
        }
        Ok(m)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest fields are TOML-representable")
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn get(&self, name: &str) -> Option<&DatasetDescriptor> {
        self.datasets.iter().find(|d| d.name.eq_ignore_ascii_case(name))
    }

    pub fn resolve(&self, d: &DatasetDescriptor) -> PathBuf {
        if d.path.is_absolute() {
            d.path.clone()
        } else {
            self.base_dir.join(&d.path)
        }
    }

    /// `Ok(None)` when the file has not been downloaded.
    pub fn load_dataset(&self, d: &DatasetDescriptor) -> Result<Option<Dataset>> {
        let path = self.resolve(d);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let actual = sha256_hex(&bytes);
        if let Some(expected) = &d.sha256 {
            if !expected.eq_ignore_ascii_case(&actual) {
                return Err(Error::ChecksumMismatch {
                    name: d.name.clone(),
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            path: path.clone(),
            line: 0,
            message: format!("file is not UTF-8: {e}"),
        })?;
        let edges = parse_edge_list(&text, &path, &FormatOptions::with_labels(d.labels))?;
        let (graph, labels) = build_graph(edges)?;
        Ok(Some(Dataset {
            name: d.name.clone(),
            graph,
            labels,
            sha256: actual,
        }))
    }

    /// Loads every listed dataset in parallel, in manifest order.
    pub fn load_all(&self) -> Vec<(&DatasetDescriptor, Result<Option<Dataset>>)> {
        self.datasets.par_iter().map(|d| (d, self.load_dataset(d))).collect()
    }
}
