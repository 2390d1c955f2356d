//! Network-level topology statistics.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Mean degree `2|E| / |V|`.
    pub avg_degree: f64,
    /// Mean local clustering over all nodes, degree < 2 counted as 0.
    pub avg_clustering: f64,
    /// `2|E| / (|V| (|V| - 1))`.
    pub density: f64,
    /// Degree heterogeneity `<k^2> / <k>^2`.
    pub degree_heterogeneity: f64,
    /// Mean hop distance over reachable ordered pairs.
    pub avg_distance: f64,
}

pub fn topology_stats(g: &Graph) -> Result<TopologyStats> {
    let n = g.node_count();
    let m = g.edge_count();
    if n == 0 || m == 0 {
        return Err(Error::EmptyGraph);
    }
    let degrees = g.degrees();
    let degree_sum: usize = degrees.iter().sum();
    let square_sum: usize = degrees.iter().map(|k| k * k).sum();

    let avg_degree = (2 * m) as f64 / n as f64;
    let mean_sq = square_sum as f64 / n as f64;
    let mean_k = degree_sum as f64 / n as f64;
    let clustering = g.clustering_all();
    let avg_clustering = clustering.iter().sum::<f64>() / n as f64;
    let density = (2 * m) as f64 / (n * (n - 1)) as f64;

    let (distance_total, reachable_pairs) = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], VecDeque::new()),
            |(dist, queue), s| g.reach_from(s, dist, queue),
        )
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0u64, 0u64), |(t, r), (dt, dr)| (t + dt, r + dr as u64));
    let avg_distance = if reachable_pairs == 0 {
        0.0
    } else {
        distance_total as f64 / reachable_pairs as f64
    };

    Ok(TopologyStats {
        node_count: n,
        edge_count: m,
        avg_degree,
        avg_clustering,
        density,
        degree_heterogeneity: mean_sq / (mean_k * mean_k),
        avg_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn complete_graph_stats() {
        let s = topology_stats(&complete(4)).unwrap();
        assert_eq!(s.node_count, 4);
        assert_eq!(s.edge_count, 6);
        assert_eq!(s.avg_degree, 3.0);
        assert_eq!(s.avg_clustering, 1.0);
        assert_eq!(s.density, 1.0);
        assert_eq!(s.degree_heterogeneity, 1.0);
        assert_eq!(s.avg_distance, 1.0);
    }

    #[test]
    fn regular_graph_has_unit_heterogeneity() {
        let ring: Vec<_> = (0..9).map(|i| (i, (i + 1) % 9)).collect();
        let s = topology_stats(&Graph::from_edges(9, &ring).unwrap()).unwrap();
        assert_eq!(s.degree_heterogeneity, 1.0);
    }

    #[test]
    fn heterogeneity_grows_when_degree_concentrates() {
        // Same 5-edge budget on 6 nodes: path vs. star-with-tail.
        let spread = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let concentrated = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (4, 5)]).unwrap();
        let h_spread = topology_stats(&spread).unwrap().degree_heterogeneity;
        let h_conc = topology_stats(&concentrated).unwrap().degree_heterogeneity;
        assert!(h_conc > h_spread);
        // sum k^2: path 1+4+4+4+4+1 = 18, star-with-tail 16+1+1+1+4+1 = 24, <k> = 10/6
        let mean_k = 10.0 / 6.0;
        assert!((h_spread - (18.0 / 6.0) / (mean_k * mean_k)).abs() < 1e-12);
        assert!((h_conc - (24.0 / 6.0) / (mean_k * mean_k)).abs() < 1e-12);
    }

    #[test]
    fn disconnected_distance_uses_reachable_pairs() {
        // two disjoint P3 paths: per component ordered distances 1,2,1,1,2,1 -> mean 4/3
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let s = topology_stats(&g).unwrap();
        assert!((s.avg_distance - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert!(matches!(topology_stats(&g), Err(Error::EmptyGraph)));
    }
}
