mod bench;
mod input;
mod literature;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use linkpred_core::datasets::{validate_against_table3, Manifest, Tolerances};
use linkpred_core::evaluation::{run_experiment, split_connected, AucSampling, ExperimentOptions};
use linkpred_core::similarity::{non_edges, score_all, DegreeTerm};
use linkpred_core::tuner::{tune, GridSearch, RandomSearch, SearchBox, SearchStrategy, TuneOptions, WhiteShark};
use linkpred_core::{topology_stats, IndexKind, NodePair};
use serde::Serialize;

use crate::bench::{BenchConfig, Format, StrategyName};
use crate::input::{GraphArgs, LoadedGraph, ParamArgs, MANIFEST_ENV};

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Similarity-based link prediction on undirected networks.
#[derive(Debug, Parser)]
#[command(name = "linkpred", version)]
struct Cli {
    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Topology statistics of a network
    Stats(StatsArgs),
    /// Connectivity-preserving train/test split
    Split(SplitArgs),
    /// Score candidate pairs with one index
    Score(ScoreArgs),
    /// Mean AUC and precision over repeated random splits
    Eval(EvalArgs),
    /// Estimate DCCLP's theta and alpha
    Tune(TuneArgs),
    /// Multi-network runs compared with reported values
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatsFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[arg(long, value_enum, default_value = "text")]
    format: StatsFormat,

    /// Compare with the manifest's reference values for this dataset (default: the input's name)
    #[arg(long)]
    check: bool,

    /// Manifest entry to compare with, when it differs from the input name
    #[arg(long, requires = "check")]
    reference: Option<String>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[arg(long, default_value_t = 0.1)]
    q: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the training edges here
    #[arg(long)]
    train: Option<PathBuf>,

    /// Write the held-out edges here
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[arg(long, value_parser = parse_index)]
    index: IndexKind,

    #[command(flatten)]
    params: ParamArgs,

    /// Pairs to score, one per line; default is every non-adjacent pair
    #[arg(long)]
    pairs: Option<PathBuf>,

    /// Print only the N highest-scored pairs
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalFormat {
    Json,
    Markdown,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    /// Fraction of edges held out per run
    #[arg(long, default_value_t = 0.1)]
    q: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// `auto`, `exhaustive`, or a number of sampled comparisons
    #[arg(long, value_parser = parse_sampling, default_value = "auto")]
    sampling: AucSampling,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[arg(long, value_parser = parse_index)]
    index: IndexKind,

    #[command(flatten)]
    params: ParamArgs,

    #[command(flatten)]
    protocol: ProtocolArgs,

    #[arg(long, default_value_t = 100)]
    runs: usize,

    /// Top-L cutoff (default: the number of test edges)
    #[arg(long)]
    precision_l: Option<usize>,

    #[arg(long, value_enum, default_value = "json")]
    format: EvalFormat,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    graph: GraphArgs,

    #[command(flatten)]
    protocol: ProtocolArgs,

    #[arg(long, value_enum, default_value = "wso")]
    strategy: StrategyName,

    /// Maximum objective evaluations
    #[arg(long, default_value_t = 600)]
    budget: usize,

    /// Points per axis for the grid strategy
    #[arg(long, default_value_t = 21)]
    grid_resolution: usize,

    #[arg(long, default_value_t = 10)]
    tuning_runs: usize,

    /// Splits used to re-score the winner; 0 skips it
    #[arg(long, default_value_t = 100)]
    confirm_runs: usize,

    #[arg(long, default_value_t = 0.0)]
    theta_min: f64,
    #[arg(long, default_value_t = linkpred_core::similarity::THETA_MAX)]
    theta_max: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,

    #[arg(long, value_enum, default_value = "common")]
    degree_term: input::DegreeTermArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// TOML configuration; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Dataset manifest; falls back to the config's, then to $LINKPRED_MANIFEST
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Comma-separated dataset names
    #[arg(long, value_delimiter = ',')]
    networks: Option<Vec<String>>,

    /// Comma-separated index names
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<String>>,

    #[arg(long)]
    q: Option<f64>,

    #[arg(long)]
    runs: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Top-L cutoff; 0 uses the number of test edges
    #[arg(long)]
    precision_l: Option<usize>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_index(s: &str) -> Result<IndexKind, String> {
    s.parse().map_err(|e: linkpred_core::Error| e.to_string())
}

fn parse_sampling(s: &str) -> Result<AucSampling, String> {
    match s {
        "auto" => Ok(AucSampling::Auto),
        "exhaustive" => Ok(AucSampling::Exhaustive),
        n => n
            .parse()
            .ok()
            .filter(|&n: &usize| n > 0)
            .map(AucSampling::Sampled)
            .ok_or_else(|| format!("`{n}` is not auto, exhaustive or a positive count")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a).map(|_| true),
        Command::Score(a) => cmd_score(a).map(|_| true),
        Command::Eval(a) => cmd_eval(a).map(|_| true),
        Command::Tune(a) => cmd_tune(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a, cli.workers),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        // a closed downstream pipe (`| head`) is not a failure
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
        || e.chain()
            .filter_map(|c| c.downcast_ref::<serde_json::Error>())
            .any(|j| j.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Returns whether the reference check (if any) passed.
fn cmd_stats(a: StatsArgs) -> Result<bool> {
    let g = a.graph.load()?;
    let stats = topology_stats(&g.graph)?;
    let validation = if a.check {
        let manifest_path = a
            .graph
            .manifest
            .as_ref()
            .ok_or_else(|| anyhow!("--check needs a manifest (--manifest or {MANIFEST_ENV})"))?;
        let manifest = Manifest::load(manifest_path)?;
        let name = a.reference.as_deref().unwrap_or(&g.name);
        let reference = manifest
            .get(name)
            .and_then(|d| d.reference)
            .ok_or_else(|| anyhow!("no reference statistics for `{name}` in {}", manifest_path.display()))?;
        Some(validate_against_table3(&g.graph, &reference, &Tolerances::default()))
    } else {
        None
    };

    match a.format {
        StatsFormat::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                network: &'a str,
                #[serde(flatten)]
                stats: &'a linkpred_core::TopologyStats,
                #[serde(skip_serializing_if = "Option::is_none")]
                validation: Option<&'a linkpred_core::datasets::ValidationReport>,
            }
            print_json(&Out {
                network: &g.name,
                stats: &stats,
                validation: validation.as_ref(),
            })?;
        }
        StatsFormat::Text => {
            println!("network\t|V|\t|E|\t<k>\t<C>\tD\tH\t<d>");
            println!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                g.name,
                stats.node_count,
                stats.edge_count,
                stats.avg_degree,
                stats.avg_clustering,
                stats.density,
                stats.degree_heterogeneity,
                stats.avg_distance
            );
            if let Some(v) = &validation {
                println!();
                println!("field\texpected\tactual\tdelta\ttolerance\tstatus");
                for c in &v.checks {
                    println!(
                        "{}\t{}\t{:.4}\t{:+.4}\t{}\t{}",
                        c.field,
                        c.expected,
                        c.actual,
                        c.delta,
                        c.tolerance,
                        if c.pass { "pass" } else { "FAIL" }
                    );
                }
            }
        }
    }
    Ok(validation.is_none_or(|v| v.passed()))
}

fn write_pairs(path: &PathBuf, g: &LoadedGraph, pairs: impl Iterator<Item = NodePair>) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = io::BufWriter::new(file);
    for p in pairs {
        writeln!(w, "{} {}", g.labels[p.x()], g.labels[p.y()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let g = a.graph.load()?;
    let split = split_connected(&g.graph, a.q, a.seed)?;
    if let Some(w) = &split.warning {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.train {
        write_pairs(path, &g, split.train.edges())?;
    }
    if let Some(path) = &a.test {
        write_pairs(path, &g, split.test_edges.iter().copied())?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        network: &'a str,
        nodes: usize,
        edges: usize,
        q: f64,
        seed: u64,
        requested_test_edges: usize,
        test_edges: usize,
        train_edges: usize,
        train_connected: bool,
        warning: Option<&'a str>,
    }
    print_json(&Summary {
        network: &g.name,
        nodes: g.graph.node_count(),
        edges: g.graph.edge_count(),
        q: a.q,
        seed: a.seed,
        requested_test_edges: split.requested,
        test_edges: split.test_edges.len(),
        train_edges: split.train.edge_count(),
        train_connected: split.train.components().len() == g.graph.components().len(),
        warning: split.warning.as_deref(),
    })
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let g = a.graph.load()?;
    let params = a.params.params()?;
    let candidates = match &a.pairs {
        None => non_edges(&g.graph),
        Some(path) => {
            let edges = linkpred_core::datasets::load_edge_list(
                path,
                &linkpred_core::datasets::FormatOptions::with_labels(a.graph.labels.into()),
            )?;
            let id = |l: &linkpred_core::datasets::Label| {
                g.labels
                    .binary_search(l)
                    .map_err(|_| anyhow!("{}: unknown node `{l}`", path.display()))
            };
            edges
                .iter()
                .map(|(x, y)| Ok(NodePair::new(id(x)?, id(y)?)?))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut scored = score_all(&g.graph, a.index, &params, &candidates)?;
    if let Some(n) = a.top {
        scored.sort_by(|p, q| q.score.total_cmp(&p.score).then(p.pair.cmp(&q.pair)));
        scored.truncate(n);
    }
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["x", "y", "score"])?;
    for s in &scored {
        w.write_record([
            g.labels[s.pair.x()].to_string(),
            g.labels[s.pair.y()].to_string(),
            s.score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let g = a.graph.load()?;
    let params = a.params.params()?;
    let opts = ExperimentOptions {
        q: a.protocol.q,
        runs: a.runs,
        master_seed: a.protocol.seed,
        sampling: a.protocol.sampling,
        precision_l: a.precision_l,
    };
    let report = run_experiment(&g.graph, a.index, &params, &opts)?;
    let warnings = report.per_run.iter().filter(|r| r.warning.is_some()).count();
    if warnings > 0 {
        eprintln!("warning: {warnings} of {} splits held out fewer edges than requested", report.runs);
    }
    match a.format {
        EvalFormat::Json => print_json(&report),
        EvalFormat::Markdown => {
            println!("| Network | Index | AUC | Precision |\n|---|---|---|---|");
            println!("{}", report.markdown_row(&g.name));
            Ok(())
        }
    }
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let g = a.graph.load()?;
    let bounds = SearchBox {
        theta: (a.theta_min, a.theta_max),
        alpha: (a.alpha_min, a.alpha_max),
    };
    let opts = TuneOptions {
        q: a.protocol.q,
        tuning_runs: a.tuning_runs,
        confirm_runs: a.confirm_runs,
        sampling: a.protocol.sampling,
        degree_term: DegreeTerm::from(a.degree_term),
    };
    let strategy: Box<dyn SearchStrategy> = match a.strategy {
        StrategyName::Wso => Box::new(WhiteShark::default()),
        StrategyName::Random => Box::new(RandomSearch),
        StrategyName::Grid => {
            if a.grid_resolution == 0 {
                bail!("--grid-resolution must be at least 1");
            }
            Box::new(GridSearch::square(a.grid_resolution))
        }
    };
    let result = tune(&g.graph, &bounds, strategy.as_ref(), a.budget, a.protocol.seed, &opts)?;
    print_json(&result)
}

/// Returns false when a declared tolerance is violated.
fn cmd_bench(a: BenchArgs, workers: Option<usize>) -> Result<bool> {
    let mut cfg = match &a.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    if let Some(m) = a.manifest {
        cfg.manifest = Some(m);
    } else if cfg.manifest.is_none() {
        cfg.manifest = std::env::var_os(MANIFEST_ENV).map(PathBuf::from);
    }
    if let Some(v) = a.networks {
        cfg.networks = v;
    }
    if let Some(v) = a.indices {
        cfg.indices = v.into_iter().filter(|s| !s.trim().is_empty()).collect();
    }
    if let Some(v) = a.q {
        cfg.q = v;
    }
    if let Some(v) = a.runs {
        cfg.runs = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.precision_l {
        cfg.precision_l = v;
    }
    if let Some(v) = a.format {
        cfg.format = v;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }

    let report = if cfg.workers > 0 && workers.is_none() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()?
            .install(|| bench::run(&cfg))?
    } else {
        bench::run(&cfg)?
    };
    let text = bench::render(&report, cfg.format);
    match &a.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    for t in report.tolerances.iter().filter(|t| t.status == bench::ToleranceStatus::Fail) {
        eprintln!(
            "tolerance violated: {} {} {} = {:.4}, target {:.4} ± {}",
            t.network,
            t.index,
            t.metric.name(),
            t.value.unwrap_or(f64::NAN),
            t.target,
            t.tol
        );
    }
    Ok(!report.violated())
}
