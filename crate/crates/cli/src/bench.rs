//! Multi-network reproduction runs with side-by-side reported values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use linkpred_core::datasets::{Dataset, Manifest};
use linkpred_core::evaluation::{run_experiment, AucSampling, ExperimentOptions};
use linkpred_core::similarity::DegreeTerm;
use linkpred_core::tuner::{tune, GridSearch, RandomSearch, SearchBox, SearchStrategy, TuneOptions, WhiteShark};
use linkpred_core::{IndexKind, IndexParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::literature::{network_key, Literature, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcclpMode {
    /// Reported optimum of each network, falling back to the fixed values.
    #[default]
    Literature,
    Fixed,
    Tune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    #[default]
    Wso,
    Grid,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedParams {
    pub theta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcclpConfig {
    pub mode: DcclpMode,
    pub theta: f64,
    pub alpha: f64,
    pub degree_term: DegreeTerm,
    /// Per-network values; these win over `mode` except when tuning.
    pub networks: BTreeMap<String, FixedParams>,
}

impl Default for DcclpConfig {
    fn default() -> Self {
        DcclpConfig {
            mode: DcclpMode::Literature,
            theta: 0.01,
            alpha: 0.5,
            degree_term: DegreeTerm::CommonNeighbor,
            networks: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerConfig {
    pub strategy: StrategyName,
    pub budget: usize,
    pub grid_resolution: usize,
    pub tuning_runs: usize,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            strategy: StrategyName::Wso,
            budget: 600,
            grid_resolution: 21,
            tuning_runs: 10,
        }
    }
}

impl TunerConfig {
    pub fn strategy(&self) -> Box<dyn SearchStrategy> {
        match self.strategy {
            StrategyName::Wso => Box::new(WhiteShark::default()),
            StrategyName::Grid => Box::new(GridSearch::square(self.grid_resolution)),
            StrategyName::Random => Box::new(RandomSearch),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceRule {
    pub network: String,
    pub index: String,
    pub metric: Metric,
    pub tol: f64,
    /// Defaults to the reported value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Relative paths resolve against the config file's directory.
    pub manifest: Option<PathBuf>,
    /// Empty selects every dataset in the manifest.
    pub networks: Vec<String>,
    pub indices: Vec<String>,
    pub q: f64,
    pub runs: usize,
    pub master_seed: u64,
    /// Top-L cutoff; 0 uses the number of test edges of each run.
    pub precision_l: usize,
    pub sampling: AucSampling,
    pub format: Format,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub tpsr3_theta: f64,
    pub dcclp: DcclpConfig,
    pub tuner: TunerConfig,
    #[serde(rename = "tolerance")]
    pub tolerances: Vec<ToleranceRule>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            manifest: None,
            networks: Vec::new(),
            indices: IndexKind::ALL.iter().map(|k| k.token().to_string()).collect(),
            q: 0.1,
            runs: 100,
            master_seed: 0,
            precision_l: 100,
            sampling: AucSampling::Auto,
            format: Format::Markdown,
            workers: 0,
            tpsr3_theta: 0.01,
            dcclp: DcclpConfig::default(),
            tuner: TunerConfig::default(),
            tolerances: Vec::new(),
        }
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: BenchConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(m), Some(dir)) = (&cfg.manifest, path.parent()) {
            if m.is_relative() {
                cfg.manifest = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn index_kinds(&self) -> Result<Vec<IndexKind>> {
        let mut kinds = Vec::new();
        for name in &self.indices {
            let k: IndexKind = name.parse()?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        kinds.sort();
        Ok(kinds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.indices.is_empty() {
            bail!("the index list is empty");
        }
        self.index_kinds()?;
        if !(self.q > 0.0 && self.q < 1.0) {
            bail!("q = {} must lie strictly between 0 and 1", self.q);
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.manifest.is_none() {
            bail!("no manifest given (config `manifest`, --manifest or {})", crate::input::MANIFEST_ENV);
        }
        IndexParams::dcclp(self.dcclp.theta, self.dcclp.alpha).validate()?;
        IndexParams::dcclp(self.tpsr3_theta, 0.0).validate()?;
        for (net, p) in &self.dcclp.networks {
            IndexParams::dcclp(p.theta, p.alpha)
                .validate()
                .with_context(|| format!("dcclp.networks.{net}"))?;
        }
        if self.dcclp.mode == DcclpMode::Tune {
            if self.tuner.budget == 0 || self.tuner.tuning_runs == 0 {
                bail!("tuner budget and tuning_runs must be at least 1");
            }
            if self.tuner.strategy == StrategyName::Grid {
                let points = self.tuner.grid_resolution.pow(2);
                if self.tuner.grid_resolution == 0 || points > self.tuner.budget {
                    bail!("grid of {points} points does not fit the tuner budget {}", self.tuner.budget);
                }
            }
        }
        let lit = Literature::builtin();
        for rule in &self.tolerances {
            let kind: IndexKind = rule.index.parse()?;
            if !(rule.tol.is_finite() && rule.tol >= 0.0) {
                bail!("tolerance for {}/{} must be finite and >= 0", rule.network, rule.index);
            }
            if rule.target.is_none() && lit.lookup(&rule.network, kind.token(), rule.metric).is_none() {
                bail!(
                    "tolerance for {}/{} {} has no target and no reported value to default to",
                    rule.network,
                    rule.index,
                    rule.metric.name()
                );
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration, ignoring the worker count.
    pub fn hash(&self) -> String {
        let normalised = BenchConfig {
            workers: 0,
            ..self.clone()
        };
        let json = serde_json::to_string(&normalised).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reported {
    pub value: f64,
    pub table: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub network: String,
    pub index: IndexKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Where `(theta, alpha)` came from: default, fixed, table N, tuned.
    pub params_from: String,
    pub auc: f64,
    pub precision: f64,
    pub mean_test_edges: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_auc: Option<Reported>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reported_precision: Option<Reported>,
}

impl Row {
    pub fn delta(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Auc => self.reported_auc.as_ref().map(|r| self.auc - r.value),
            Metric::Precision => self.reported_precision.as_ref().map(|r| self.precision - r.value),
        }
    }

    fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Auc => self.auc,
            Metric::Precision => self.precision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceOutcome {
    pub network: String,
    pub index: String,
    pub metric: Metric,
    pub target: f64,
    pub tol: f64,
    /// Absent when the network was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub status: ToleranceStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceStatus {
    Pass,
    Fail,
    NotEvaluated,
}

impl ToleranceStatus {
    pub fn name(self) -> &'static str {
        match self {
            ToleranceStatus::Pass => "pass",
            ToleranceStatus::Fail => "FAIL",
            ToleranceStatus::NotEvaluated => "not evaluated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub network: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub q: f64,
    pub runs: usize,
    pub precision_l: usize,
    pub rows: Vec<Row>,
    pub tolerances: Vec<ToleranceOutcome>,
    pub skipped: Vec<Skipped>,
}

impl BenchReport {
    pub fn violated(&self) -> bool {
        self.tolerances.iter().any(|t| t.status == ToleranceStatus::Fail)
    }
}

pub fn run(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let kinds = cfg.index_kinds()?;
    let manifest_path = cfg.manifest.as_ref().expect("validated");
    let manifest = Manifest::load(manifest_path)?;

    let mut selected = Vec::new();
    if cfg.networks.is_empty() {
        selected.extend(manifest.datasets.iter());
    } else {
        for name in &cfg.networks {
            let d = manifest
                .get(name)
                .ok_or_else(|| anyhow::anyhow!("network `{name}` is not in {}", manifest_path.display()))?;
            if !selected.iter().any(|s: &&_| s.name == d.name) {
                selected.push(d);
            }
        }
    }

    let loaded: Vec<_> = selected.par_iter().map(|d| (d, manifest.load_dataset(d))).collect();
    let mut datasets: Vec<Dataset> = Vec::new();
    let mut skipped = Vec::new();
    for (d, r) in loaded {
        match r {
            Ok(Some(ds)) => datasets.push(ds),
            Ok(None) => {
                let reason = format!("{} not present", manifest.resolve(d).display());
                eprintln!("notice: skipping {}: {reason}", d.name);
                skipped.push(Skipped {
                    network: d.name.clone(),
                    reason,
                });
            }
            Err(e) => {
                eprintln!("notice: skipping {}: {e}", d.name);
                skipped.push(Skipped {
                    network: d.name.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if datasets.is_empty() {
        bail!("none of the selected datasets could be loaded");
    }
    datasets.sort_by(|a, b| network_key(&a.name).cmp(&network_key(&b.name)).then(a.name.cmp(&b.name)));
    skipped.sort_by_key(|s| network_key(&s.network));

    let jobs: Vec<(&Dataset, IndexKind)> = datasets
        .iter()
        .flat_map(|d| kinds.iter().map(move |&k| (d, k)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(ds, kind)| run_row(cfg, ds, kind))
        .collect::<Result<Vec<Row>>>()?;

    let tolerances = cfg
        .tolerances
        .iter()
        .map(|rule| {
            let kind: IndexKind = rule.index.parse().expect("validated");
            let lit = Literature::builtin().lookup(&rule.network, kind.token(), rule.metric);
            let target = rule.target.or(lit.map(|e| e.value)).expect("validated");
            let row = rows
                .iter()
                .find(|r| r.index == kind && network_key(&r.network) == network_key(&rule.network));
            let value = row.map(|r| r.value(rule.metric));
            let status = match value {
                None => ToleranceStatus::NotEvaluated,
                Some(v) if (v - target).abs() <= rule.tol => ToleranceStatus::Pass,
                Some(_) => ToleranceStatus::Fail,
            };
            ToleranceOutcome {
                network: rule.network.clone(),
                index: kind.token().to_string(),
                metric: rule.metric,
                target,
                tol: rule.tol,
                value,
                status,
            }
        })
        .collect();

    Ok(BenchReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.master_seed,
        config_sha256: cfg.hash(),
        q: cfg.q,
        runs: cfg.runs,
        precision_l: cfg.precision_l,
        rows,
        tolerances,
        skipped,
    })
}

fn run_row(cfg: &BenchConfig, ds: &Dataset, kind: IndexKind) -> Result<Row> {
    let lit = Literature::builtin();
    let mut params = IndexParams::default();
    let mut shown = (None, None);
    let mut params_from = "default".to_string();
    match kind {
        IndexKind::Tpsr3 => {
            params.theta = cfg.tpsr3_theta;
            shown = (Some(params.theta), None);
            params_from = "fixed".into();
        }
        IndexKind::Dcclp => {
            params.degree_term = cfg.dcclp.degree_term;
            let override_ = cfg
                .dcclp
                .networks
                .iter()
                .find(|(n, _)| network_key(n) == network_key(&ds.name))
                .map(|(_, p)| *p);
            let (theta, alpha) = match (cfg.dcclp.mode, override_) {
                (DcclpMode::Tune, _) => {
                    let opts = TuneOptions {
                        q: cfg.q,
                        tuning_runs: cfg.tuner.tuning_runs,
                        confirm_runs: 0,
                        sampling: cfg.sampling,
                        degree_term: cfg.dcclp.degree_term,
                    };
                    let strategy = cfg.tuner.strategy();
                    let t = tune(
                        &ds.graph,
                        &SearchBox::default(),
                        strategy.as_ref(),
                        cfg.tuner.budget,
                        cfg.master_seed,
                        &opts,
                    )
                    .with_context(|| format!("tuning DCCLP on {}", ds.name))?;
                    params_from = format!("tuned ({})", t.strategy);
                    (t.theta_star, t.alpha_star)
                }
                (_, Some(p)) => {
                    params_from = "fixed".into();
                    (p.theta, p.alpha)
                }
                (DcclpMode::Literature, None) => match lit.dcclp_optimum(&ds.name) {
                    Some((t, a, table)) => {
                        params_from = format!("table {table}");
                        (t, a)
                    }
                    None => {
                        params_from = "fixed".into();
                        (cfg.dcclp.theta, cfg.dcclp.alpha)
                    }
                },
                (DcclpMode::Fixed, None) => {
                    params_from = "fixed".into();
                    (cfg.dcclp.theta, cfg.dcclp.alpha)
                }
            };
            params.theta = theta;
            params.alpha = alpha;
            shown = (Some(theta), Some(alpha));
        }
        _ => {}
    }

    let opts = ExperimentOptions {
        q: cfg.q,
        runs: cfg.runs,
        master_seed: cfg.master_seed,
        sampling: cfg.sampling,
        precision_l: (cfg.precision_l > 0).then_some(cfg.precision_l),
    };
    let report = run_experiment(&ds.graph, kind, &params, &opts).with_context(|| format!("{} on {}", kind, ds.name))?;
    let mean_test_edges =
        report.per_run.iter().map(|r| r.test_edges as f64).sum::<f64>() / report.per_run.len() as f64;
    let reported = |metric| {
        lit.lookup(&ds.name, kind.token(), metric).map(|e| Reported {
            value: e.value,
            table: e.table,
        })
    };
    Ok(Row {
        network: ds.name.clone(),
        index: kind,
        theta: shown.0,
        alpha: shown.1,
        params_from,
        auc: report.auc,
        precision: report.precision,
        mean_test_edges,
        reported_auc: reported(Metric::Auc),
        reported_precision: reported(Metric::Precision),
    })
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt4(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_default()
}

fn signed4(v: Option<f64>) -> String {
    v.map(|d| format!("{d:+.4}")).unwrap_or_default()
}

pub fn render(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serialises") + "\n",
        Format::Csv => render_csv(report),
        Format::Markdown => render_markdown(report),
    }
}

fn render_csv(report: &BenchReport) -> String {
    let mut out = format!(
        "# linkpred {} master_seed={} config_sha256={} q={} runs={} precision_l={}\n",
        report.version, report.master_seed, report.config_sha256, report.q, report.runs, report.precision_l
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "network",
        "index",
        "theta",
        "alpha",
        "params_from",
        "auc",
        "reported_auc",
        "reported_auc_table",
        "delta_auc",
        "precision",
        "reported_precision",
        "reported_precision_table",
        "delta_precision",
    ])
    .expect("in-memory write");
    for r in &report.rows {
        let table = |x: &Option<Reported>| x.as_ref().map(|e| e.table.to_string()).unwrap_or_default();
        w.write_record([
            r.network.clone(),
            r.index.token().to_string(),
            opt4(r.theta),
            opt4(r.alpha),
            r.params_from.clone(),
            f4(r.auc),
            opt4(r.reported_auc.as_ref().map(|e| e.value)),
            table(&r.reported_auc),
            signed4(r.delta(Metric::Auc)),
            f4(r.precision),
            opt4(r.reported_precision.as_ref().map(|e| e.value)),
            table(&r.reported_precision),
            signed4(r.delta(Metric::Precision)),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

fn render_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    writeln!(out, "# linkpred bench").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "- version: {}", report.version).unwrap();
    writeln!(out, "- master seed: {}", report.master_seed).unwrap();
    writeln!(out, "- config sha256: {}", report.config_sha256).unwrap();
    writeln!(
        out,
        "- q = {}, runs = {}, precision L = {}",
        report.q,
        report.runs,
        if report.precision_l == 0 {
            "|test edges|".to_string()
        } else {
            report.precision_l.to_string()
        }
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "| Network | Index | θ | α | Params | AUC | Reported | ΔAUC | Precision | Reported | ΔPrecision |"
    )
    .unwrap();
    writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|").unwrap();
    let reported = |x: &Option<Reported>| {
        x.as_ref()
            .map(|e| format!("{} (T{})", f4(e.value), e.table))
            .unwrap_or_else(|| "-".into())
    };
    let dash = |s: String| if s.is_empty() { "-".to_string() } else { s };
    for r in &report.rows {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.network,
            r.index,
            dash(opt4(r.theta)),
            dash(opt4(r.alpha)),
            r.params_from,
            f4(r.auc),
            reported(&r.reported_auc),
            dash(signed4(r.delta(Metric::Auc))),
            f4(r.precision),
            reported(&r.reported_precision),
            dash(signed4(r.delta(Metric::Precision))),
        )
        .unwrap();
    }
    if !report.tolerances.is_empty() {
        writeln!(out).unwrap();
        writeln!(out, "## Tolerances").unwrap();
        writeln!(out).unwrap();
        writeln!(out, "| Network | Index | Metric | Target | Tol | Value | Status |").unwrap();
        writeln!(out, "|---|---|---|---|---|---|---|").unwrap();
        for t in &report.tolerances {
            writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                t.network,
                t.index,
                t.metric.name(),
                f4(t.target),
                f4(t.tol),
                dash(opt4(t.value)),
                t.status.name()
            )
            .unwrap();
        }
    }
    if !report.skipped.is_empty() {
        writeln!(out).unwrap();
        writeln!(out, "## Skipped").unwrap();
        writeln!(out).unwrap();
        for s in &report.skipped {
            writeln!(out, "- {}: {}", s.network, s.reason).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_index_list_is_rejected() {
        let cfg = BenchConfig {
            indices: vec![],
            manifest: Some("m.toml".into()),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("empty"));
    }

    #[test]
    fn bad_knobs_are_rejected() {
        let base = BenchConfig {
            manifest: Some("m.toml".into()),
            ..Default::default()
        };
        assert!(base.validate().is_ok());
        for cfg in [
            BenchConfig { q: 1.0, ..base.clone() },
            BenchConfig { runs: 0, ..base.clone() },
            BenchConfig {
                indices: vec!["XYZ".into()],
                ..base.clone()
            },
            BenchConfig { manifest: None, ..base.clone() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn config_parses_from_toml() {
        let text = r#"
            manifest = "data/manifest.toml"
            networks = ["karate"]
            indices = ["dcclp", "cn"]
            runs = 5
            [dcclp]
            mode = "fixed"
            degree_term = "endpoint"
            [dcclp.networks.karate]
            theta = 0.0960
            alpha = 0.0784
            [[tolerance]]
            network = "karate"
            index = "DCCLP"
            metric = "auc"
            tol = 0.05
        "#;
        let cfg: BenchConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.index_kinds().unwrap(), vec![IndexKind::Cn, IndexKind::Dcclp]);
        assert_eq!(cfg.dcclp.degree_term, DegreeTerm::Endpoint);
        assert_eq!(cfg.dcclp.networks["karate"].alpha, 0.0784);
        assert_eq!(cfg.tolerances[0].metric, Metric::Auc);
        assert!(cfg.validate().is_ok());
        assert!(toml::from_str::<BenchConfig>("colour = 1").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = BenchConfig::default();
        let b = BenchConfig { runs: 99, ..a.clone() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), BenchConfig { workers: 3, ..a.clone() }.hash());
    }
}
