//! Brute-force reference implementations over a dense adjacency matrix,
//! written without reusing any of the library's graph code.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use linkpred_core::Graph;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub n: usize,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in edges {
            if a != b {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
        Dense { n, adj }
    }

    pub fn degree(&self, z: usize) -> usize {
        self.adj[z].iter().filter(|&&b| b).count()
    }

    pub fn common(&self, x: usize, y: usize) -> Vec<usize> {
        (0..self.n).filter(|&z| self.adj[x][z] && self.adj[y][z]).collect()
    }

    /// Simple paths x-a-b-y with all four nodes distinct.
    pub fn simple_paths3(&self, x: usize, y: usize) -> u64 {
        let mut count = 0;
        for a in 0..self.n {
            if a == x || a == y || !self.adj[x][a] {
                continue;
            }
            for b in 0..self.n {
                if b == x || b == y || b == a {
                    continue;
                }
                if self.adj[a][b] && self.adj[b][y] {
                    count += 1;
                }
            }
        }
        count
    }

    /// Number of walks of each length `1..=max_len` from `x` to `y`.
    pub fn walks(&self, x: usize, y: usize, max_len: usize) -> Vec<u64> {
        let mut cur = vec![0u64; self.n];
        cur[x] = 1;
        let mut out = Vec::new();
        for _ in 0..max_len {
            let mut next = vec![0u64; self.n];
            for u in 0..self.n {
                if cur[u] == 0 {
                    continue;
                }
                for v in 0..self.n {
                    if self.adj[u][v] {
                        next[v] += cur[u];
                    }
                }
            }
            out.push(next[y]);
            cur = next;
        }
        out
    }

    pub fn clustering(&self, z: usize) -> f64 {
        let nb: Vec<usize> = (0..self.n).filter(|&v| self.adj[z][v]).collect();
        let k = nb.len();
        if k < 2 {
            return 0.0;
        }
        let mut links = 0;
        for i in 0..k {
            for j in i + 1..k {
                if self.adj[nb[i]][nb[j]] {
                    links += 1;
                }
            }
        }
        2.0 * links as f64 / (k * (k - 1)) as f64
    }

    pub fn distances(&self, s: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for v in 0..self.n {
                if self.adj[u][v] && dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Reciprocal mean distance to reachable nodes, scaled by the reachable
    /// fraction of the other nodes.
    pub fn closeness(&self, z: usize) -> f64 {
        let d = self.distances(z);
        let reached: Vec<usize> = (0..self.n).filter(|&v| v != z).filter_map(|v| d[v]).collect();
        if reached.is_empty() {
            return 0.0;
        }
        let mean = reached.iter().sum::<usize>() as f64 / reached.len() as f64;
        (1.0 / mean) * (reached.len() as f64 / (self.n - 1) as f64)
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Random simple graph as (node count, edge list) with every pair kept
/// with probability `p`.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    edges
}

pub fn seeded_graph(seed: u64, n: usize, p: f64) -> (Graph, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_edges(&mut rng, n, p);
    (Graph::from_edges(n, &edges).unwrap(), edges)
}

/// Random graphs with 2..=max_nodes nodes and at least one edge.
pub fn arb_graph(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..=max_nodes, 0.05f64..0.7, any::<u64>()).prop_filter_map("needs an edge", |(n, p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_edges(&mut rng, n, p);
        (!edges.is_empty()).then_some((n, edges))
    })
}

pub fn arb_permuted_graph(max_nodes: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<usize>)> {
    arb_graph(max_nodes).prop_flat_map(|(n, edges)| {
        let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
        (Just(n), Just(edges), perm)
    })
}

pub fn karate_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/karate.txt")
}
