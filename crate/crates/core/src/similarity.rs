//! Similarity indices for candidate node pairs.
//!
//! Every index is evaluated through one of two routes that give
//! bit-identical results on non-edges: a per-pair route built on sorted
//! neighbourhood intersections, and a per-source "row" route that
//! accumulates contributions for all targets of one source at once. Batch
//! scoring picks whichever is cheaper.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{for_each_common, Graph, NodeId, NodePair};

/// Upper end of the third-order path weight search range.
pub const THETA_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IndexKind {
    Cn,
    Aa,
    Ra,
    Lp,
    Katz,
    Tpsr3,
    Dcclp,
}

impl IndexKind {
    pub const ALL: [IndexKind; 7] = [
        IndexKind::Cn,
        IndexKind::Aa,
        IndexKind::Ra,
        IndexKind::Lp,
        IndexKind::Katz,
        IndexKind::Tpsr3,
        IndexKind::Dcclp,
    ];

    pub fn token(self) -> &'static str {
        match self {
            IndexKind::Cn => "CN",
            IndexKind::Aa => "AA",
            IndexKind::Ra => "RA",
            IndexKind::Lp => "LP",
            IndexKind::Katz => "KATZ",
            IndexKind::Tpsr3 => "TPSR3",
            IndexKind::Dcclp => "DCCLP",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(
            self,
            IndexKind::Cn | IndexKind::Aa | IndexKind::Ra | IndexKind::Lp | IndexKind::Katz
        )
    }

    fn needs_paths3(self) -> bool {
        matches!(self, IndexKind::Lp | IndexKind::Tpsr3 | IndexKind::Dcclp)
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownIndex(s.to_string()))
    }
}

/// Which degree divides the constant per-neighbour term of DCCLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeTerm {
    /// `1 / k_z`, matching TPSR3.
    #[default]
    CommonNeighbor,
    /// `1 / k_x`, the first endpoint's degree. Not symmetric in `(x, y)`.
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    /// Weight of the third-order path count.
    pub theta: f64,
    /// Weight of the common-neighbour sum; the pair degree centrality gets `1 - alpha`.
    pub alpha: f64,
    pub lp_epsilon: f64,
    pub katz_beta: f64,
    pub katz_max_len: usize,
    #[serde(default)]
    pub degree_term: DegreeTerm,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            theta: 0.01,
            alpha: 0.5,
            lp_epsilon: 0.01,
            katz_beta: 0.01,
            katz_max_len: 6,
            degree_term: DegreeTerm::CommonNeighbor,
        }
    }
}

impl IndexParams {
    pub fn dcclp(theta: f64, alpha: f64) -> Self {
        IndexParams {
            theta,
            alpha,
            ..Default::default()
        }
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.theta.is_finite() && (0.0..=THETA_MAX).contains(&self.theta)) {
            return bad(format!("theta = {} outside [0, {THETA_MAX}]", self.theta));
        }
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return bad(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if !(self.lp_epsilon.is_finite() && self.lp_epsilon >= 0.0) {
            return bad(format!("lp_epsilon = {} must be finite and >= 0", self.lp_epsilon));
        }
        if !(self.katz_beta.is_finite() && self.katz_beta >= 0.0) {
            return bad(format!("katz_beta = {} must be finite and >= 0", self.katz_beta));
        }
        if self.katz_max_len < 2 {
            return bad(format!("katz_max_len = {} must be >= 2", self.katz_max_len));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair: NodePair,
    pub score: f64,
}

/// Anything that can score node pairs of a fixed graph.
pub trait PairScorer: Sync {
    fn node_count(&self) -> usize;

    fn score(&self, x: NodeId, y: NodeId) -> f64;

    /// Scores `(x, y)` for every `y` into `out`. Entries at `x` itself and at
    /// neighbours of `x` are unspecified.
    fn score_row(&self, x: NodeId, out: &mut [f64]) {
        for (y, slot) in out.iter_mut().enumerate() {
            *slot = if y == x { 0.0 } else { self.score(x, y) };
        }
    }
}

/// The three parameter-free ingredients of a DCCLP score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DcclpTerms {
    pub neighbor_sum: f64,
    pub degree_centrality: f64,
    pub paths3: u64,
}

impl DcclpTerms {
    #[inline]
    pub fn combine(&self, theta: f64, alpha: f64) -> f64 {
        alpha * self.neighbor_sum + (1.0 - alpha) * self.degree_centrality + theta * self.paths3 as f64
    }
}

/// `k_x k_y / (|V| - 1)^2`.
pub fn pair_degree_centrality(g: &Graph, p: NodePair) -> Result<f64> {
    if g.node_count() < 2 {
        return Err(Error::SingletonGraph);
    }
    g.check_pair(p)?;
    Ok(degree_centrality(g.neighbors(p.x()).len(), g.neighbors(p.y()).len(), g.node_count()))
}

#[inline]
fn degree_centrality(kx: usize, ky: usize, n: usize) -> f64 {
    let denom = (n - 1) as f64;
    (kx * ky) as f64 / (denom * denom)
}

#[inline]
fn neighbor_weight(kind: IndexKind, term: DegreeTerm, c: f64, p: f64, kz: usize, kx: usize) -> f64 {
    let k = kz as f64;
    match kind {
        IndexKind::Cn | IndexKind::Lp | IndexKind::Katz => 1.0,
        IndexKind::Ra => 1.0 / k,
        IndexKind::Aa => {
            if kz < 2 {
                0.0
            } else {
                1.0 / k.ln()
            }
        }
        IndexKind::Tpsr3 => c / k + 1.0 / k,
        IndexKind::Dcclp => match term {
            DegreeTerm::CommonNeighbor => c / k + 1.0 / k + p / k,
            DegreeTerm::Endpoint => c / k + 1.0 / kx as f64 + p / k,
        },
    }
}

/// Everything needed to combine a pair's score besides Katz walks.
#[derive(Clone, Copy)]
struct PairParts {
    neighbor_sum: f64,
    common: u64,
    paths3: u64,
    kx: usize,
    ky: usize,
}

#[inline]
fn combine(kind: IndexKind, params: &IndexParams, parts: PairParts, n: usize) -> f64 {
    match kind {
        IndexKind::Cn | IndexKind::Aa | IndexKind::Ra => parts.neighbor_sum,
        IndexKind::Lp => parts.common as f64 + params.lp_epsilon * parts.paths3 as f64,
        IndexKind::Tpsr3 => parts.neighbor_sum + params.theta * parts.paths3 as f64,
        IndexKind::Dcclp => DcclpTerms {
            neighbor_sum: parts.neighbor_sum,
            degree_centrality: degree_centrality(parts.kx, parts.ky, n),
            paths3: parts.paths3,
        }
        .combine(params.theta, params.alpha),
        IndexKind::Katz => unreachable!("katz is scored from walk vectors"),
    }
}

/// TPSR3: `sum_z (C_z/k_z + 1/k_z) + theta |L3|`.
pub fn score_tpsr3(g: &Graph, p: NodePair, theta: f64) -> Result<f64> {
    let params = IndexParams {
        theta,
        ..Default::default()
    };
    single_pair(g, p, IndexKind::Tpsr3, &params)
}

/// DCCLP: `alpha sum_z (C_z/k_z + 1/k_z + P_z/k_z) + (1 - alpha) D_xy + theta |L3|`.
pub fn score_dcclp(g: &Graph, p: NodePair, params: &IndexParams) -> Result<f64> {
    params.validate()?;
    single_pair(g, p, IndexKind::Dcclp, params)
}

pub fn score_baseline(g: &Graph, p: NodePair, kind: IndexKind, params: &IndexParams) -> Result<f64> {
    if !kind.is_baseline() {
        return Err(Error::InvalidParams(format!("{kind} is not a baseline index")));
    }
    single_pair(g, p, kind, params)
}

/// Scores one pair computing only the node quantities it touches.
fn single_pair(g: &Graph, p: NodePair, kind: IndexKind, params: &IndexParams) -> Result<f64> {
    g.check_pair(p)?;
    let (x, y) = (p.x(), p.y());
    if kind == IndexKind::Katz {
        let mut row = vec![0.0; g.node_count()];
        katz_row(g, x, params, &mut row);
        return Ok(row[y]);
    }
    let kx = g.neighbors(x).len();
    let mut neighbor_sum = 0.0;
    let mut common = 0u64;
    for_each_common(g.neighbors(x), g.neighbors(y), |z| {
        let kz = g.neighbors(z).len();
        let c = match kind {
            IndexKind::Tpsr3 | IndexKind::Dcclp => g.clustering_coefficient(z).expect("node in range"),
            _ => 0.0,
        };
        let pz = match kind {
            IndexKind::Dcclp => g.closeness(z).expect("node in range"),
            _ => 0.0,
        };
        neighbor_sum += neighbor_weight(kind, params.degree_term, c, pz, kz, kx);
        common += 1;
    });
    let paths3 = if kind.needs_paths3() { g.count_paths3(p)? } else { 0 };
    let parts = PairParts {
        neighbor_sum,
        common,
        paths3,
        kx,
        ky: g.neighbors(y).len(),
    };
    Ok(combine(kind, params, parts, g.node_count()))
}

fn katz_row(g: &Graph, x: NodeId, params: &IndexParams, out: &mut [f64]) {
    let n = g.node_count();
    let mut cur = vec![0u64; n];
    let mut next = vec![0u64; n];
    cur[x] = 1;
    out.fill(0.0);
    for len in 1..=params.katz_max_len {
        next.fill(0);
        for (u, &w) in cur.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for &v in g.neighbors(u) {
                next[v] += w;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if len >= 2 {
            let weight = params.katz_beta.powi(len as i32);
            for (slot, &walks) in out.iter_mut().zip(&cur) {
                *slot += weight * walks as f64;
            }
        }
    }
}

/// A similarity index bound to one graph, with the node quantities it needs
/// precomputed once.
pub struct IndexScorer<'g> {
    graph: &'g Graph,
    kind: IndexKind,
    params: IndexParams,
    clustering: Vec<f64>,
    closeness: Vec<f64>,
    /// Per-node common-neighbour weight, for indices where it does not
    /// depend on the source.
    weights: Vec<f64>,
}

impl<'g> IndexScorer<'g> {
    pub fn new(graph: &'g Graph, kind: IndexKind, params: IndexParams) -> Result<Self> {
        params.validate()?;
        if graph.node_count() < 2 {
            return Err(Error::SingletonGraph);
        }
        let clustering = if matches!(kind, IndexKind::Tpsr3 | IndexKind::Dcclp) {
            graph.clustering_all()
        } else {
            vec![0.0; graph.node_count()]
        };
        let closeness = if kind == IndexKind::Dcclp {
            graph.closeness_all()
        } else {
            Vec::new()
        };
        let mut scorer = IndexScorer {
            graph,
            kind,
            params,
            clustering,
            closeness,
            weights: Vec::new(),
        };
        scorer.weights = (0..graph.node_count()).map(|z| scorer.weight(z, 0)).collect();
        Ok(scorer)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn params(&self) -> &IndexParams {
        &self.params
    }

    /// Cached closeness values (empty unless the index is DCCLP).
    pub fn closeness(&self) -> &[f64] {
        &self.closeness
    }

    #[inline]
    fn weight(&self, z: NodeId, kx: usize) -> f64 {
        let pz = self.closeness.get(z).copied().unwrap_or(0.0);
        neighbor_weight(
            self.kind,
            self.params.degree_term,
            self.clustering[z],
            pz,
            self.graph.neighbors(z).len(),
            kx,
        )
    }

    fn source_dependent(&self) -> bool {
        self.kind == IndexKind::Dcclp && self.params.degree_term == DegreeTerm::Endpoint
    }

    fn pair_parts(&self, x: NodeId, y: NodeId) -> PairParts {
        let g = self.graph;
        let kx = g.neighbors(x).len();
        let dependent = self.source_dependent();
        let mut neighbor_sum = 0.0;
        let mut common = 0u64;
        for_each_common(g.neighbors(x), g.neighbors(y), |z| {
            neighbor_sum += if dependent { self.weight(z, kx) } else { self.weights[z] };
            common += 1;
        });
        let paths3 = if self.kind.needs_paths3() {
            g.neighbors(x)
                .iter()
                .map(|&a| crate::graph::intersection_count(g.neighbors(a), g.neighbors(y)) as u64)
                .sum()
        } else {
            0
        };
        PairParts {
            neighbor_sum,
            common,
            paths3,
            kx,
            ky: g.neighbors(y).len(),
        }
    }

    /// Row accumulation of neighbour sums, common-neighbour counts and
    /// 3-walk counts from `x`.
    fn row_parts(&self, x: NodeId, sums: &mut [f64], common: &mut [u64], paths3: &mut [u64]) {
        let g = self.graph;
        let kx = g.neighbors(x).len();
        let dependent = self.source_dependent();
        sums.fill(0.0);
        common.fill(0);
        paths3.fill(0);
        for &z in g.neighbors(x) {
            let w = if dependent { self.weight(z, kx) } else { self.weights[z] };
            for &y in g.neighbors(z) {
                sums[y] += w;
                common[y] += 1;
            }
        }
        if self.kind.needs_paths3() {
            for (b, &walks2) in common.iter().enumerate() {
                if walks2 == 0 {
                    continue;
                }
                for &y in g.neighbors(b) {
                    paths3[y] += walks2;
                }
            }
        }
    }

    /// DCCLP ingredients for a batch of pairs, in input order.
    pub fn dcclp_terms(&self, pairs: &[NodePair]) -> Vec<DcclpTerms> {
        let n = self.graph.node_count();
        self.grouped(pairs, |x, ys, out| {
            let mut sums = vec![0.0; n];
            let mut common = vec![0u64; n];
            let mut paths3 = vec![0u64; n];
            if ys.len() > 4 {
                self.row_parts(x, &mut sums, &mut common, &mut paths3);
                for &y in ys {
                    out.push(DcclpTerms {
                        neighbor_sum: sums[y],
                        degree_centrality: degree_centrality(
                            self.graph.neighbors(x).len(),
                            self.graph.neighbors(y).len(),
                            n,
                        ),
                        paths3: paths3[y],
                    });
                }
            } else {
                for &y in ys {
                    let p = self.pair_parts(x, y);
                    out.push(DcclpTerms {
                        neighbor_sum: p.neighbor_sum,
                        degree_centrality: degree_centrality(p.kx, p.ky, n),
                        paths3: p.paths3,
                    });
                }
            }
        })
    }

    /// Scores a batch of pairs, in input order.
    pub fn score_pairs(&self, pairs: &[NodePair]) -> Vec<f64> {
        let n = self.graph.node_count();
        self.grouped(pairs, |x, ys, out| {
            if ys.len() > 4 || self.kind == IndexKind::Katz {
                let mut row = vec![0.0; n];
                self.score_row(x, &mut row);
                out.extend(ys.iter().map(|&y| row[y]));
            } else {
                out.extend(ys.iter().map(|&y| self.score(x, y)));
            }
        })
    }

    /// Groups pairs by first endpoint, runs `f` per group in parallel and
    /// scatters the results back to input order.
    fn grouped<T, F>(&self, pairs: &[NodePair], f: F) -> Vec<T>
    where
        T: Send + Copy + Default,
        F: Fn(NodeId, &[NodeId], &mut Vec<T>) + Sync,
    {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| (pairs[i].x(), i));
        let mut groups: Vec<(NodeId, Vec<usize>)> = Vec::new();
        for i in order {
            let x = pairs[i].x();
            match groups.last_mut() {
                Some((gx, idx)) if *gx == x => idx.push(i),
                _ => groups.push((x, vec![i])),
            }
        }
        let computed: Vec<Vec<T>> = groups
            .par_iter()
            .map(|(x, idx)| {
                let ys: Vec<NodeId> = idx.iter().map(|&i| pairs[i].y()).collect();
                let mut out = Vec::with_capacity(ys.len());
                f(*x, &ys, &mut out);
                out
            })
            .collect();
        let mut result = vec![T::default(); pairs.len()];
        for ((_, idx), vals) in groups.iter().zip(computed) {
            for (&i, v) in idx.iter().zip(vals) {
                result[i] = v;
            }
        }
        result
    }
}

impl PairScorer for IndexScorer<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn score(&self, x: NodeId, y: NodeId) -> f64 {
        if self.kind == IndexKind::Katz {
            let mut row = vec![0.0; self.graph.node_count()];
            katz_row(self.graph, x, &self.params, &mut row);
            return row[y];
        }
        combine(self.kind, &self.params, self.pair_parts(x, y), self.graph.node_count())
    }

    fn score_row(&self, x: NodeId, out: &mut [f64]) {
        let g = self.graph;
        let n = g.node_count();
        if self.kind == IndexKind::Katz {
            katz_row(g, x, &self.params, out);
            return;
        }
        let mut sums = vec![0.0; n];
        let mut common = vec![0u64; n];
        let mut paths3 = vec![0u64; n];
        self.row_parts(x, &mut sums, &mut common, &mut paths3);
        let kx = g.neighbors(x).len();
        for y in 0..n {
            let parts = PairParts {
                neighbor_sum: sums[y],
                common: common[y],
                paths3: paths3[y],
                kx,
                ky: g.neighbors(y).len(),
            };
            out[y] = combine(self.kind, &self.params, parts, n);
        }
    }
}

/// Scores candidate non-edges of `g` under one index. Output order follows
/// `candidates`.
pub fn score_all(
    g: &Graph,
    kind: IndexKind,
    params: &IndexParams,
    candidates: &[NodePair],
) -> Result<Vec<ScoredPair>> {
    for &p in candidates {
        g.check_pair(p)?;
        if g.has_edge(p.x(), p.y()) {
            return Err(Error::ExistingEdge { x: p.x(), y: p.y() });
        }
    }
    if candidates.is_empty() {
        params.validate()?;
        return Ok(Vec::new());
    }
    let scorer = IndexScorer::new(g, kind, *params)?;
    let scores = scorer.score_pairs(candidates);
    Ok(candidates
        .iter()
        .zip(scores)
        .map(|(&pair, score)| ScoredPair { pair, score })
        .collect())
}

/// All non-edges of `g` in canonical order.
pub fn non_edges(g: &Graph) -> Vec<NodePair> {
    let n = g.node_count();
    let mut out = Vec::with_capacity(g.non_edge_count());
    for x in 0..n {
        let nbrs = g.neighbors(x);
        let mut it = nbrs.iter().peekable();
        for y in x + 1..n {
            while it.peek().is_some_and(|&&v| v < y) {
                it.next();
            }
            if it.peek() != Some(&&y) {
                out.push(NodePair::new(x, y).expect("x < y"));
            }
        }
    }
    out
}
