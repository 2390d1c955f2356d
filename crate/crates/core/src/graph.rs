//! Immutable undirected simple graph and the per-node quantities the
//! similarity indices are built from.
//!
//! Nodes are dense identifiers `0..node_count`. Adjacency lists are sorted
//! and duplicate-free, so neighbourhood intersections are linear merges and
//! every traversal visits nodes in a fixed order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

const UNREACHED: u32 = u32::MAX;

/// An unordered pair of distinct nodes, stored with `x < y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodePair {
    x: NodeId,
    y: NodeId,
}

impl NodePair {
    pub fn new(a: NodeId, b: NodeId) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(NodePair { x: a, y: b }),
            std::cmp::Ordering::Greater => Ok(NodePair { x: b, y: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfPair(a)),
        }
    }

    #[inline]
    pub fn x(&self) -> NodeId {
        self.x
    }

    #[inline]
    pub fn y(&self) -> NodeId {
        self.y
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

/// Builds a graph from labelled endpoint pairs.
///
/// Direction is dropped, self-loops and repeated pairs are removed. Node
/// identifiers are assigned in ascending label order, so the same edge set
/// yields the same graph whatever order the pairs arrive in. The returned
/// vector maps each identifier back to its label.
pub fn build_graph<L, I>(edges: I) -> Result<(Graph, Vec<L>)>
where
    L: Ord + Clone,
    I: IntoIterator<Item = (L, L)>,
{
    let mut cleaned: BTreeSet<(L, L)> = BTreeSet::new();
    for (a, b) in edges {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => {
                cleaned.insert((a, b));
            }
            std::cmp::Ordering::Greater => {
                cleaned.insert((b, a));
            }
            std::cmp::Ordering::Equal => {}
        }
    }
    if cleaned.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let labels: Vec<L> = cleaned
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let id_of = |l: &L| labels.binary_search(l).expect("label collected above");

    let pairs: Vec<(NodeId, NodeId)> = cleaned.iter().map(|(a, b)| (id_of(a), id_of(b))).collect();
    let graph = Graph::from_edges(labels.len(), &pairs)?;
    Ok((graph, labels))
}

impl Graph {
    /// Builds a graph on `node_count` nodes. Self-loops and duplicates are
    /// dropped; isolated nodes are allowed.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            for n in [a, b] {
                if n >= node_count {
                    return Err(Error::InvalidNode { node: n, node_count });
                }
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        Ok(Self::from_adjacency(adjacency))
    }

    pub(crate) fn from_adjacency(mut adjacency: Vec<Vec<NodeId>>) -> Self {
        for (x, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            debug_assert!(list.binary_search(&x).is_err());
        }
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Graph {
            adjacency,
            edge_count,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn check_node(&self, z: NodeId) -> Result<()> {
        if z < self.node_count() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                node: z,
                node_count: self.node_count(),
            })
        }
    }

    pub fn check_pair(&self, p: NodePair) -> Result<()> {
        self.check_node(p.x)?;
        self.check_node(p.y)
    }

    /// Sorted neighbour list. Panics on an out-of-range node.
    #[inline]
    pub fn neighbors(&self, z: NodeId) -> &[NodeId] {
        &self.adjacency[z]
    }

    pub fn degree(&self, z: NodeId) -> Result<usize> {
        self.check_node(z)?;
        Ok(self.adjacency[z].len())
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    #[inline]
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        a < self.node_count() && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as canonical pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = NodePair> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(x, list)| {
            list.iter()
                .filter(move |&&y| y > x)
                .map(move |&y| NodePair { x, y })
        })
    }

    pub fn common_neighbors(&self, p: NodePair) -> Result<Vec<NodeId>> {
        self.check_pair(p)?;
        let mut out = Vec::new();
        for_each_common(&self.adjacency[p.x], &self.adjacency[p.y], |z| out.push(z));
        Ok(out)
    }

    /// Number of edges among the neighbours of `z`.
    pub fn triangles_at(&self, z: NodeId) -> Result<usize> {
        self.check_node(z)?;
        let nbrs = &self.adjacency[z];
        let twice: usize = nbrs
            .iter()
            .map(|&u| intersection_count(&self.adjacency[u], nbrs))
            .sum();
        Ok(twice / 2)
    }

    /// `2 t_z / (k_z (k_z - 1))`, and 0 for nodes of degree below 2.
    pub fn clustering_coefficient(&self, z: NodeId) -> Result<f64> {
        let k = self.degree(z)?;
        if k < 2 {
            return Ok(0.0);
        }
        let t = self.triangles_at(z)?;
        Ok((2 * t) as f64 / (k * (k - 1)) as f64)
    }

    pub fn clustering_all(&self) -> Vec<f64> {
        (0..self.node_count())
            .into_par_iter()
            .map(|z| self.clustering_coefficient(z).expect("node in range"))
            .collect()
    }

    /// Hop distances from `z`; unreachable nodes are absent.
    pub fn bfs_distances(&self, z: NodeId) -> Result<BTreeMap<NodeId, usize>> {
        self.check_node(z)?;
        let mut dist = vec![UNREACHED; self.node_count()];
        let mut queue = VecDeque::new();
        self.bfs_levels(z, &mut dist, &mut queue);
        Ok(dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != UNREACHED)
            .map(|(j, &d)| (j, d as usize))
            .collect())
    }

    /// Fills `dist` with BFS levels from `src` (`u32::MAX` when unreached).
    pub(crate) fn bfs_levels(&self, src: NodeId, dist: &mut [u32], queue: &mut VecDeque<NodeId>) {
        dist.fill(UNREACHED);
        queue.clear();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.adjacency[u] {
                if dist[v] == UNREACHED {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }

    /// Sum of distances and number of reachable nodes other than `src`.
    pub(crate) fn reach_from(&self, src: NodeId, dist: &mut [u32], queue: &mut VecDeque<NodeId>) -> (u64, usize) {
        self.bfs_levels(src, dist, queue);
        let mut total = 0u64;
        let mut reached = 0usize;
        for &d in dist.iter() {
            if d != UNREACHED && d > 0 {
                total += u64::from(d);
                reached += 1;
            }
        }
        (total, reached)
    }

    /// Closeness (proximity) centrality.
    ///
    /// The mean distance is taken over the nodes reachable from `z`, and the
    /// reciprocal is scaled by the reachable fraction `r / (|V| - 1)`. On a
    /// connected graph this is the plain reciprocal of the mean distance.
    /// Isolated nodes score 0.
    pub fn closeness(&self, z: NodeId) -> Result<f64> {
        self.check_node(z)?;
        let mut dist = vec![UNREACHED; self.node_count()];
        let mut queue = VecDeque::new();
        let (total, reached) = self.reach_from(z, &mut dist, &mut queue);
        Ok(closeness_from(total, reached, self.node_count()))
    }

    pub fn closeness_all(&self) -> Vec<f64> {
        let n = self.node_count();
        (0..n)
            .into_par_iter()
            .map_init(
                || (vec![UNREACHED; n], VecDeque::new()),
                |(dist, queue), z| {
                    let (total, reached) = self.reach_from(z, dist, queue);
                    closeness_from(total, reached, n)
                },
            )
            .collect()
    }

    /// Number of length-3 paths between the endpoints of `p`.
    ///
    /// Counted as `sum_{a in N(x)} |N(a) & N(y)|`. For non-adjacent pairs
    /// every such walk is a simple path. For adjacent pairs the walks that
    /// revisit an endpoint (`x-y-b-y`, `x-a-x-y`) are subtracted.
    pub fn count_paths3(&self, p: NodePair) -> Result<u64> {
        self.check_pair(p)?;
        let ny = &self.adjacency[p.y];
        let walks: u64 = self.adjacency[p.x]
            .iter()
            .map(|&a| intersection_count(&self.adjacency[a], ny) as u64)
            .sum();
        if self.has_edge(p.x, p.y) {
            let revisits = (self.adjacency[p.x].len() + ny.len() - 1) as u64;
            Ok(walks - revisits)
        } else {
            Ok(walks)
        }
    }

    /// Connected components as a per-node component index, numbered in order
    /// of their smallest node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Number of unordered pairs `x < y` that are not edges.
    pub fn non_edge_count(&self) -> usize {
        let n = self.node_count();
        n * n.saturating_sub(1) / 2 - self.edge_count
    }
}

fn closeness_from(total: u64, reached: usize, node_count: usize) -> f64 {
    if reached == 0 {
        return 0.0;
    }
    let mean = total as f64 / reached as f64;
    (1.0 / mean) * (reached as f64 / (node_count - 1) as f64)
}

pub(crate) fn intersection_count(a: &[NodeId], b: &[NodeId]) -> usize {
    let mut n = 0;
    for_each_common(a, b, |_| n += 1);
    n
}

/// Calls `f` on every element of both sorted slices, in ascending order.
#[inline]
pub(crate) fn for_each_common(a: &[NodeId], b: &[NodeId], mut f: impl FnMut(NodeId)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(n, edges).unwrap()
    }

    fn pair(a: usize, b: usize) -> NodePair {
        NodePair::new(a, b).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        g(leaves + 1, &edges)
    }

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        g(n, &edges)
    }

    #[test]
    fn build_graph_cleans_input() {
        let (graph, labels) =
            build_graph(vec![("a", "b"), ("b", "a"), ("b", "b"), ("a", "b")]).unwrap();
        assert_eq!(graph.node_count(), 2);
        assert_eq!(graph.edge_count(), 1);
        assert_eq!(labels, vec!["a", "b"]);
    }

    #[test]
    fn build_graph_symmetrizes_directed_pairs() {
        let (graph, _) = build_graph(vec![(1, 2), (2, 3), (3, 1), (1, 3)]).unwrap();
        assert_eq!(graph.node_count(), 3);
        assert_eq!(graph.edge_count(), 3);
    }

    #[test]
    fn build_graph_rejects_loops_only() {
        assert!(matches!(build_graph(vec![(1, 1), (2, 2)]), Err(Error::EmptyGraph)));
        assert!(matches!(build_graph(Vec::<(u8, u8)>::new()), Err(Error::EmptyGraph)));
    }

    #[test]
    fn node_pair_is_canonical() {
        assert_eq!(pair(5, 2), pair(2, 5));
        assert_eq!(pair(5, 2).x(), 2);
        assert!(matches!(NodePair::new(3, 3), Err(Error::SelfPair(3))));
    }

    #[test]
    fn degree_on_star() {
        let s = star(4);
        assert_eq!(s.degree(0).unwrap(), 4);
        assert_eq!(s.degree(3).unwrap(), 1);
        assert!(matches!(s.degree(9), Err(Error::InvalidNode { node: 9, .. })));
    }

    #[test]
    fn common_neighbors_examples() {
        let path = g(3, &[(0, 1), (1, 2)]);
        assert_eq!(path.common_neighbors(pair(0, 2)).unwrap(), vec![1]);
        let disjoint = g(4, &[(0, 1), (2, 3)]);
        assert!(disjoint.common_neighbors(pair(0, 2)).unwrap().is_empty());
        let k5 = complete(5);
        assert_eq!(k5.common_neighbors(pair(1, 3)).unwrap(), vec![0, 2, 4]);
        assert!(k5.common_neighbors(pair(1, 7)).is_err());
    }

    #[test]
    fn clustering_examples() {
        let tri = complete(3);
        assert_eq!(tri.clustering_coefficient(0).unwrap(), 1.0);
        let p3 = g(3, &[(0, 1), (1, 2)]);
        assert_eq!(p3.clustering_coefficient(1).unwrap(), 0.0);
        assert_eq!(p3.clustering_coefficient(0).unwrap(), 0.0);
        // K4 minus (0,1): node 2 has neighbours {0,1,3} with edges 0-3, 1-3
        let k4m = g(4, &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!((k4m.clustering_coefficient(2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bfs_examples() {
        let p = g(3, &[(0, 1), (1, 2)]);
        let d = p.bfs_distances(0).unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2)]);
        let two = g(4, &[(0, 1), (2, 3)]);
        assert_eq!(two.bfs_distances(0).unwrap().len(), 2);
    }

    #[test]
    fn closeness_examples() {
        assert_eq!(star(6).closeness(0).unwrap(), 1.0);
        let p3 = g(3, &[(0, 1), (1, 2)]);
        assert!((p3.closeness(0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let with_isolated = g(3, &[(0, 1)]);
        assert_eq!(with_isolated.closeness(2).unwrap(), 0.0);
        // component {0,1} of a 3-node graph: mean distance 1, reachable fraction 1/2
        assert_eq!(with_isolated.closeness(0).unwrap(), 0.5);
        assert_eq!(p3.closeness_all(), vec![2.0 / 3.0, 1.0, 2.0 / 3.0]);
    }

    #[test]
    fn paths3_examples() {
        let p4 = g(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(p4.count_paths3(pair(0, 3)).unwrap(), 1);
        let c6 = g(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert_eq!(c6.count_paths3(pair(0, 3)).unwrap(), 2);
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                if (a, b) != (0, 1) {
                    edges.push((a, b));
                }
            }
        }
        let k5m = g(5, &edges);
        assert_eq!(k5m.count_paths3(pair(0, 1)).unwrap(), 6);
        // adjacent pair in a triangle: no simple 3-path
        assert_eq!(complete(3).count_paths3(pair(0, 1)).unwrap(), 0);
        // adjacent pair in K4: x-a-b-y with {a,b} the other two, both orders
        assert_eq!(complete(4).count_paths3(pair(0, 1)).unwrap(), 2);
    }

    #[test]
    fn components_and_connectivity() {
        let two = g(5, &[(0, 1), (2, 3), (3, 4)]);
        assert_eq!(two.components(), vec![0, 0, 1, 1, 1]);
        assert!(!two.is_connected());
        assert!(complete(4).is_connected());
        assert_eq!(complete(4).non_edge_count(), 0);
        assert_eq!(two.non_edge_count(), 10 - 3);
    }

    #[test]
    fn edges_iterate_canonically() {
        let graph = g(4, &[(3, 2), (1, 0), (2, 0)]);
        let e: Vec<_> = graph.edges().map(|p| (p.x(), p.y())).collect();
        assert_eq!(e, vec![(0, 1), (0, 2), (2, 3)]);
    }
}
