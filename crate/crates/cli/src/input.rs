use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use linkpred_core::datasets::{load_graph, FormatOptions, Label, LabelType, Manifest};
use linkpred_core::similarity::DegreeTerm;
use linkpred_core::{Graph, IndexParams};

pub const MANIFEST_ENV: &str = "LINKPRED_MANIFEST";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelsArg {
    Integer,
    String,
}

impl From<LabelsArg> for LabelType {
    fn from(l: LabelsArg) -> Self {
        match l {
            LabelsArg::Integer => LabelType::Integer,
            LabelsArg::String => LabelType::String,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DegreeTermArg {
    Common,
    Endpoint,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge-list file, or the name of a dataset listed in the manifest
    pub input: String,

    /// How node labels in the file are read
    #[arg(long, value_enum, default_value = "integer")]
    pub labels: LabelsArg,

    /// Dataset manifest used to resolve names
    #[arg(long, env = MANIFEST_ENV)]
    pub manifest: Option<PathBuf>,
}

pub struct LoadedGraph {
    pub name: String,
    pub graph: Graph,
    pub labels: Vec<Label>,
}

impl GraphArgs {
    pub fn load(&self) -> Result<LoadedGraph> {
        let path = Path::new(&self.input);
        if path.is_file() {
            let (graph, labels) = load_graph(path, &FormatOptions::with_labels(self.labels.into()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.input.clone());
            return Ok(LoadedGraph { name, graph, labels });
        }
        let Some(manifest_path) = &self.manifest else {
            bail!("`{}` is not a file and no manifest was given (--manifest or {MANIFEST_ENV})", self.input);
        };
        let manifest = Manifest::load(manifest_path)?;
        let desc = manifest
            .get(&self.input)
            .ok_or_else(|| anyhow!("`{}` is neither a file nor a dataset in {}", self.input, manifest_path.display()))?;
        let ds = manifest.load_dataset(desc)?.ok_or_else(|| {
            anyhow!(
                "dataset `{}` is listed but {} is not present",
                desc.name,
                manifest.resolve(desc).display()
            )
        })?;
        Ok(LoadedGraph {
            name: ds.name,
            graph: ds.graph,
            labels: ds.labels,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Weight of third-order paths (DCCLP, TPSR3)
    #[arg(long, default_value_t = 0.01)]
    pub theta: f64,

    /// Weight of the common-neighbour sum in DCCLP; the pair degree centrality gets 1 - alpha
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.01)]
    pub lp_epsilon: f64,

    #[arg(long, default_value_t = 0.01)]
    pub katz_beta: f64,

    #[arg(long, default_value_t = 6)]
    pub katz_max_len: usize,

    /// Degree in the DCCLP neighbour sum: the common neighbour's or the first endpoint's
    #[arg(long, value_enum, default_value = "common")]
    pub degree_term: DegreeTermArg,
}

impl From<DegreeTermArg> for DegreeTerm {
    fn from(d: DegreeTermArg) -> Self {
        match d {
            DegreeTermArg::Common => DegreeTerm::CommonNeighbor,
            DegreeTermArg::Endpoint => DegreeTerm::Endpoint,
        }
    }
}

impl ParamArgs {
    pub fn params(&self) -> Result<IndexParams> {
        let p = IndexParams {
            theta: self.theta,
            alpha: self.alpha,
            lp_epsilon: self.lp_epsilon,
            katz_beta: self.katz_beta,
            katz_max_len: self.katz_max_len,
            degree_term: self.degree_term.into(),
        };
        p.validate().context("index parameters")?;
        Ok(p)
    }
}
