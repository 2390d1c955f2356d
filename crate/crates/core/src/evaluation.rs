//! Connectivity-preserving train/test splits and the AUC / top-L precision
//! evaluation protocol.
//!
//! A run hides a fraction `q` of the edges, scores every pair that is not a
//! training edge on the training graph alone, and then compares test edges
//! against nonexistent pairs (AUC) and counts test edges among the best `L`
//! candidates (precision).

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodePair};
use crate::similarity::{IndexKind, IndexParams, IndexScorer, PairScorer};

/// Graphs up to this many nodes get exact (all-pairs) AUC under
/// [`AucSampling::Auto`].
pub const EXHAUSTIVE_MAX_NODES: usize = 200;
pub const MIN_SAMPLED_COMPARISONS: usize = 10_000;

/// Mixes a master seed and a stream index into an independent seed
/// (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Graph,
    /// Held-out edges, canonical and sorted.
    pub test_edges: Vec<NodePair>,
    pub q: f64,
    pub seed: u64,
    /// `round(q |E|)`.
    pub requested: usize,
    /// Set when connectivity forced fewer test edges than requested.
    pub warning: Option<String>,
}

impl Split {
    pub fn is_test_edge(&self, p: NodePair) -> bool {
        self.test_edges.binary_search(&p).is_ok()
    }
}

/// Moves a `q` fraction of edges into a test set without disconnecting any
/// component of `g`.
///
/// Edges are visited in a seeded random order; an edge is held out only if
/// its endpoints stay connected in the residual graph without it.
pub fn split_connected(g: &Graph, q: f64, seed: u64) -> Result<Split> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParams(format!("test fraction q = {q} must lie in (0, 1)")));
    }
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let requested = (q * g.edge_count() as f64).round() as usize;
    let mut edges: Vec<NodePair> = g.edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);

    let mut residual: Vec<Vec<NodeId>> = (0..g.node_count()).map(|z| g.neighbors(z).to_vec()).collect();
    let mut reach = ReachScratch::new(g.node_count());
    let mut test_edges = Vec::with_capacity(requested);
    for e in edges {
        if test_edges.len() == requested {
            break;
        }
        remove_sorted(&mut residual[e.x()], e.y());
        remove_sorted(&mut residual[e.y()], e.x());
        if reach.connected(&residual, e.x(), e.y()) {
            test_edges.push(e);
        } else {
            insert_sorted(&mut residual[e.x()], e.y());
            insert_sorted(&mut residual[e.y()], e.x());
        }
    }
    test_edges.sort_unstable();
    let warning = (test_edges.len() < requested).then(|| {
        format!(
            "only {} of {} requested test edges could be removed without disconnecting the graph",
            test_edges.len(),
            requested
        )
    });
    Ok(Split {
        train: Graph::from_adjacency(residual),
        test_edges,
        q,
        seed,
        requested,
        warning,
    })
}

fn remove_sorted(list: &mut Vec<NodeId>, v: NodeId) {
    if let Ok(i) = list.binary_search(&v) {
        list.remove(i);
    }
}

fn insert_sorted(list: &mut Vec<NodeId>, v: NodeId) {
    if let Err(i) = list.binary_search(&v) {
        list.insert(i, v);
    }
}

struct ReachScratch {
    stamp: Vec<u32>,
    epoch: u32,
    queue: VecDeque<NodeId>,
}

impl ReachScratch {
    fn new(n: usize) -> Self {
        ReachScratch {
            stamp: vec![0; n],
            epoch: 0,
            queue: VecDeque::new(),
        }
    }

    fn connected(&mut self, adj: &[Vec<NodeId>], from: NodeId, to: NodeId) -> bool {
        self.epoch += 1;
        self.queue.clear();
        self.stamp[from] = self.epoch;
        self.queue.push_back(from);
        while let Some(u) = self.queue.pop_front() {
            for &v in &adj[u] {
                if v == to {
                    return true;
                }
                if self.stamp[v] != self.epoch {
                    self.stamp[v] = self.epoch;
                    self.queue.push_back(v);
                }
            }
        }
        false
    }
}

/// How AUC comparisons are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucSampling {
    /// Exhaustive up to [`EXHAUSTIVE_MAX_NODES`] nodes, otherwise
    /// `max(10 |test|, 10^4)` sampled comparisons.
    #[default]
    Auto,
    /// Every (test edge, nonexistent pair) comparison.
    Exhaustive,
    /// This many independent random comparisons.
    Sampled(usize),
}

impl AucSampling {
    fn resolve(self, node_count: usize, test_edges: usize) -> AucSampling {
        match self {
            AucSampling::Auto if node_count <= EXHAUSTIVE_MAX_NODES => AucSampling::Exhaustive,
            AucSampling::Auto => AucSampling::Sampled((10 * test_edges).max(MIN_SAMPLED_COMPARISONS)),
            other => other,
        }
    }
}

/// Every pair that is not a training edge, grouped by first endpoint in
/// canonical order, with its test-edge flag.
#[derive(Debug, Clone)]
pub struct Candidates {
    node_count: usize,
    row_start: Vec<usize>,
    targets: Vec<NodeId>,
    is_test: Vec<bool>,
    test_indices: Vec<usize>,
}

impl Candidates {
    pub fn new(split: &Split) -> Self {
        let train = &split.train;
        let n = train.node_count();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut is_test = Vec::new();
        let test_set: HashSet<NodePair> = split.test_edges.iter().copied().collect();
        for x in 0..n {
            row_start.push(targets.len());
            for y in candidate_targets(train, x) {
                is_test.push(test_set.contains(&NodePair::new(x, y).expect("y > x")));
                targets.push(y);
            }
        }
        row_start.push(targets.len());
        let test_indices: Vec<usize> = (0..is_test.len()).filter(|&i| is_test[i]).collect();
        debug_assert_eq!(test_indices.len(), split.test_edges.len());
        Candidates {
            node_count: n,
            row_start,
            targets,
            is_test,
            test_indices,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn test_count(&self) -> usize {
        self.test_indices.len()
    }

    pub fn nonexistent_count(&self) -> usize {
        self.len() - self.test_count()
    }

    pub fn is_test(&self) -> &[bool] {
        &self.is_test
    }

    /// Targets `y > x` of source `x`.
    pub fn targets_of(&self, x: NodeId) -> &[NodeId] {
        &self.targets[self.row_start[x]..self.row_start[x + 1]]
    }

    pub fn index_of(&self, p: NodePair) -> Option<usize> {
        let (lo, hi) = (self.row_start[p.x()], self.row_start[p.x() + 1]);
        self.targets[lo..hi].binary_search(&p.y()).ok().map(|i| lo + i)
    }

    pub fn pair_at(&self, i: usize) -> NodePair {
        let x = self.row_start.partition_point(|&s| s <= i) - 1;
        NodePair::new(x, self.targets[i]).expect("y > x")
    }

    pub fn pairs(&self) -> Vec<NodePair> {
        (0..self.node_count)
            .flat_map(|x| self.targets_of(x).iter().map(move |&y| NodePair::new(x, y).expect("y > x")))
            .collect()
    }

    fn check_auc_inputs(&self) -> Result<()> {
        if self.test_count() == 0 {
            return Err(Error::EmptyTestSet);
        }
        if self.nonexistent_count() == 0 {
            return Err(Error::NoNonexistentPairs);
        }
        Ok(())
    }

    /// Draws `n` (test edge, nonexistent pair) comparisons as candidate
    /// indices. Test edges are drawn uniformly; nonexistent pairs by
    /// rejection sampling over uniform node pairs.
    pub fn sample_comparisons(&self, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
        self.check_auc_inputs()?;
        if n == 0 {
            return Err(Error::InvalidParams("AUC needs at least one comparison".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let probe = self.test_indices[rng.random_range(0..self.test_indices.len())];
            let absent = loop {
                let a = rng.random_range(0..self.node_count);
                let b = rng.random_range(0..self.node_count);
                if a == b {
                    continue;
                }
                let p = NodePair::new(a, b).expect("a != b");
                match self.index_of(p) {
                    Some(i) if !self.is_test[i] => break i,
                    _ => continue,
                }
            };
            out.push((probe, absent));
        }
        Ok(out)
    }

    /// Resolves `sampling` for this candidate set: `None` for exhaustive,
    /// otherwise the sampled comparisons.
    pub fn comparisons(&self, sampling: AucSampling, seed: u64) -> Result<Option<Vec<(usize, usize)>>> {
        self.check_auc_inputs()?;
        match sampling.resolve(self.node_count, self.test_count()) {
            AucSampling::Exhaustive | AucSampling::Auto => Ok(None),
            AucSampling::Sampled(n) => self.sample_comparisons(n, seed).map(Some),
        }
    }
}

/// Exact AUC over every (test, nonexistent) score comparison, ties counted
/// half. Returns the AUC and the comparison count.
pub fn auc_exhaustive(scores: &[f64], is_test: &[bool]) -> (f64, u64) {
    let mut absent: Vec<f64> = Vec::with_capacity(scores.len());
    let mut probe: Vec<f64> = Vec::new();
    for (&s, &t) in scores.iter().zip(is_test) {
        if t {
            probe.push(s);
        } else {
            absent.push(s);
        }
    }
    absent.sort_unstable_by(f64::total_cmp);
    let (mut wins, mut ties) = (0u64, 0u64);
    for &s in &probe {
        let below = absent.partition_point(|a| a.total_cmp(&s).is_lt());
        let not_above = absent.partition_point(|a| a.total_cmp(&s).is_le());
        wins += below as u64;
        ties += (not_above - below) as u64;
    }
    let n = probe.len() as u64 * absent.len() as u64;
    ((2 * wins + ties) as f64 / (2 * n) as f64, n)
}

/// AUC over explicit (test index, nonexistent index) comparisons.
pub fn auc_from_comparisons(scores: &[f64], comparisons: &[(usize, usize)]) -> f64 {
    let (mut wins, mut ties) = (0u64, 0u64);
    for &(p, a) in comparisons {
        match scores[p].total_cmp(&scores[a]) {
            std::cmp::Ordering::Greater => wins += 1,
            std::cmp::Ordering::Equal => ties += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    (2 * wins + ties) as f64 / (2 * comparisons.len() as u64) as f64
}

/// Candidate pairs of a split together with one scorer's scores.
pub struct CandidateScores {
    candidates: Candidates,
    scores: Vec<f64>,
}

impl CandidateScores {
    pub fn compute(split: &Split, scorer: &dyn PairScorer) -> Result<Self> {
        let n = split.train.node_count();
        if scorer.node_count() != n {
            return Err(Error::InvalidParams(format!(
                "scorer covers {} nodes but the split has {n}",
                scorer.node_count()
            )));
        }
        let candidates = Candidates::new(split);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|x| {
                let targets = candidates.targets_of(x);
                if targets.is_empty() {
                    return Vec::new();
                }
                let mut row = vec![0.0; n];
                scorer.score_row(x, &mut row);
                targets.iter().map(|&y| row[y]).collect()
            })
            .collect();
        let scores = rows.concat();
        Ok(CandidateScores { candidates, scores })
    }

    pub fn candidates(&self) -> &Candidates {
        &self.candidates
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score_of(&self, p: NodePair) -> Option<f64> {
        self.candidates.index_of(p).map(|i| self.scores[i])
    }

    /// AUC and the number of comparisons it rests on.
    pub fn auc(&self, sampling: AucSampling, seed: u64) -> Result<(f64, u64)> {
        match self.candidates.comparisons(sampling, seed)? {
            None => Ok(auc_exhaustive(&self.scores, &self.candidates.is_test)),
            Some(comps) => Ok((auc_from_comparisons(&self.scores, &comps), comps.len() as u64)),
        }
    }

    /// Fraction of test edges among the `l` best-scored candidates. Ties in
    /// score are ordered by canonical pair.
    pub fn precision(&self, l: usize) -> Result<f64> {
        if l == 0 {
            return Err(Error::InvalidParams("precision cutoff L must be >= 1".into()));
        }
        if l > self.len() {
            return Err(Error::PrecisionCutoff {
                requested: l,
                available: self.len(),
            });
        }
        // Candidates are stored in canonical pair order, so index order breaks ties.
        let mut order: Vec<usize> = (0..self.len()).collect();
        let cmp = |a: &usize, b: &usize| self.scores[*b].total_cmp(&self.scores[*a]).then(a.cmp(b));
        if l < order.len() {
            order.select_nth_unstable_by(l - 1, cmp);
        }
        let hits = order[..l].iter().filter(|&&i| self.candidates.is_test[i]).count();
        Ok(hits as f64 / l as f64)
    }

    /// The `l` best candidates in rank order.
    pub fn top(&self, l: usize) -> Vec<(NodePair, f64)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_unstable_by(|a, b| self.scores[*b].total_cmp(&self.scores[*a]).then(a.cmp(b)));
        order
            .into_iter()
            .take(l)
            .map(|i| (self.candidates.pair_at(i), self.scores[i]))
            .collect()
    }
}

fn candidate_targets(train: &Graph, x: NodeId) -> Vec<NodeId> {
    let nbrs = train.neighbors(x);
    let mut it = nbrs.iter().peekable();
    let mut out = Vec::new();
    for y in x + 1..train.node_count() {
        while it.peek().is_some_and(|&&v| v < y) {
            it.next();
        }
        if it.peek() != Some(&&y) {
            out.push(y);
        }
    }
    out
}

/// AUC of `scorer` (built on `split.train`) on one split.
pub fn auc(split: &Split, scorer: &dyn PairScorer, sampling: AucSampling, seed: u64) -> Result<f64> {
    if split.test_edges.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let cands = CandidateScores::compute(split, scorer)?;
    cands.auc(sampling, seed).map(|(a, _)| a)
}

/// Top-`l` precision of `scorer` on one split; `l` defaults to the number
/// of test edges.
pub fn precision(split: &Split, scorer: &dyn PairScorer, l: Option<usize>) -> Result<f64> {
    let cands = CandidateScores::compute(split, scorer)?;
    cands.precision(l.unwrap_or(split.test_edges.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub q: f64,
    pub runs: usize,
    pub master_seed: u64,
    pub sampling: AucSampling,
    /// Precision cutoff; `None` uses the run's test-set size.
    pub precision_l: Option<usize>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            q: 0.1,
            runs: 100,
            master_seed: 0,
            sampling: AucSampling::Auto,
            precision_l: None,
        }
    }
}

/// Seeds for run `run` of an experiment: (split seed, AUC sampling seed).
pub fn run_seeds(master_seed: u64, run: usize) -> (u64, u64) {
    let base = derive_seed(master_seed, run as u64);
    (derive_seed(base, 0), derive_seed(base, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub split_seed: u64,
    pub auc_seed: u64,
    pub auc: f64,
    pub precision: f64,
    pub test_edges: usize,
    pub n_comparisons: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub index: IndexKind,
    pub params: IndexParams,
    pub q: f64,
    pub runs: usize,
    pub master_seed: u64,
    /// Mean AUC over runs.
    pub auc: f64,
    /// Mean precision over runs.
    pub precision: f64,
    /// AUC comparisons summed over runs.
    pub n_comparisons: u64,
    pub per_run: Vec<RunResult>,
}

impl EvalReport {
    pub fn auc_per_run(&self) -> Vec<f64> {
        self.per_run.iter().map(|r| r.auc).collect()
    }

    pub fn precision_per_run(&self) -> Vec<f64> {
        self.per_run.iter().map(|r| r.precision).collect()
    }

    pub fn markdown_row(&self, network: &str) -> String {
        format!(
            "| {network} | {} | {:.4} | {:.4} |",
            self.index, self.auc, self.precision
        )
    }
}

/// One split, scored and evaluated.
pub fn run_once(g: &Graph, index: IndexKind, params: &IndexParams, opts: &ExperimentOptions, run: usize) -> Result<RunResult> {
    let (split_seed, auc_seed) = run_seeds(opts.master_seed, run);
    let split = split_connected(g, opts.q, split_seed)?;
    let scorer = IndexScorer::new(&split.train, index, *params)?;
    let cands = CandidateScores::compute(&split, &scorer)?;
    let (auc, n_comparisons) = cands.auc(opts.sampling, auc_seed)?;
    let precision = cands.precision(opts.precision_l.unwrap_or(split.test_edges.len()))?;
    Ok(RunResult {
        run,
        split_seed,
        auc_seed,
        auc,
        precision,
        test_edges: split.test_edges.len(),
        n_comparisons,
        warning: split.warning,
    })
}

/// Repeats split/score/evaluate `opts.runs` times and averages.
///
/// Runs execute in parallel; each derives its seeds from the master seed
/// and its index, so the report does not depend on the worker count.
pub fn run_experiment(g: &Graph, index: IndexKind, params: &IndexParams, opts: &ExperimentOptions) -> Result<EvalReport> {
    if opts.runs == 0 {
        return Err(Error::InvalidParams("runs must be >= 1".into()));
    }
    params.validate()?;
    let per_run: Vec<RunResult> = (0..opts.runs)
        .into_par_iter()
        .map(|run| run_once(g, index, params, opts, run))
        .collect::<Result<_>>()?;
    let runs = per_run.len() as f64;
    Ok(EvalReport {
        index,
        params: *params,
        q: opts.q,
        runs: opts.runs,
        master_seed: opts.master_seed,
        auc: per_run.iter().map(|r| r.auc).sum::<f64>() / runs,
        precision: per_run.iter().map(|r| r.precision).sum::<f64>() / runs,
        n_comparisons: per_run.iter().map(|r| r.n_comparisons).sum(),
        per_run,
    })
}
