mod common;

use common::{arb_graph, seeded_graph};
use linkpred_core::evaluation::{
    auc, auc_exhaustive, precision, run_experiment, split_connected, AucSampling, CandidateScores,
    ExperimentOptions,
};
use linkpred_core::{Graph, IndexKind, IndexParams, IndexScorer, NodeId, PairScorer};
use proptest::prelude::*;

struct Hashed(usize);

impl PairScorer for Hashed {
    fn node_count(&self) -> usize {
        self.0
    }

    fn score(&self, x: NodeId, y: NodeId) -> f64 {
        let (a, b) = (x.min(y) as u64, x.max(y) as u64);
        let mut h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= h >> 29;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 32;
        (h >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Direct O(|test| x |absent|) Mann-Whitney count with ties as halves.
fn brute_auc(scores: &CandidateScores) -> f64 {
    let c = scores.candidates();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (i, &s) in scores.scores().iter().enumerate() {
        if c.is_test()[i] {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    let mut total = 0.0;
    for &p in &pos {
        for &q in &neg {
            total += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    total / (pos.len() * neg.len()) as f64
}

proptest! {
    #[test]
    fn split_invariants((n, edges) in arb_graph(30), q in 0.05f64..0.6, seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let s = split_connected(&g, q, seed).unwrap();
        prop_assert_eq!(s.train.node_count(), n);
        prop_assert_eq!(s.train.edge_count() + s.test_edges.len(), g.edge_count());
        prop_assert_eq!(s.requested, (q * g.edge_count() as f64).round() as usize);
        prop_assert!(s.test_edges.len() <= s.requested);
        prop_assert_eq!(s.warning.is_some(), s.test_edges.len() < s.requested);
        for p in &s.test_edges {
            prop_assert!(g.has_edge(p.x(), p.y()));
            prop_assert!(!s.train.has_edge(p.x(), p.y()));
        }
        prop_assert_eq!(s.train.components(), g.components());
        prop_assert!(s.test_edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn exhaustive_auc_is_the_mann_whitney_statistic((n, edges) in arb_graph(25), seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let s = split_connected(&g, 0.2, seed).unwrap();
        prop_assume!(!s.test_edges.is_empty());
        let scorer = IndexScorer::new(&s.train, IndexKind::Ra, IndexParams::default()).unwrap();
        let scores = CandidateScores::compute(&s, &scorer).unwrap();
        prop_assume!(scores.candidates().nonexistent_count() > 0);
        let (a, count) = auc_exhaustive(scores.scores(), scores.candidates().is_test());
        prop_assert!((a - brute_auc(&scores)).abs() < 1e-12);
        prop_assert_eq!(count as usize, scores.candidates().test_count() * scores.candidates().nonexistent_count());
    }

    #[test]
    fn full_cutoff_precision_is_the_test_fraction((n, edges) in arb_graph(25), seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let s = split_connected(&g, 0.2, seed).unwrap();
        prop_assume!(!s.test_edges.is_empty());
        let scorer = IndexScorer::new(&s.train, IndexKind::Cn, IndexParams::default()).unwrap();
        let scores = CandidateScores::compute(&s, &scorer).unwrap();
        let all = scores.len();
        let p = scores.precision(all).unwrap();
        prop_assert!((p - s.test_edges.len() as f64 / all as f64).abs() < 1e-12);
        for l in 1..=all.min(10) {
            let v = scores.precision(l).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn sampled_auc_converges_to_exhaustive() {
    // 40-node graphs: the sampled estimate must sit within 3 standard errors
    for seed in 0..20 {
        let (g, _) = seeded_graph(seed, 40, 0.15);
        let s = split_connected(&g, 0.15, seed).unwrap();
        if s.test_edges.is_empty() {
            continue;
        }
        let scorer = IndexScorer::new(&s.train, IndexKind::Aa, IndexParams::default()).unwrap();
        let scores = CandidateScores::compute(&s, &scorer).unwrap();
        let (exact, _) = scores.auc(AucSampling::Exhaustive, 0).unwrap();
        let n = 50_000;
        let (est, used) = scores.auc(AucSampling::Sampled(n), seed).unwrap();
        assert_eq!(used, n as u64);
        // ties make the per-comparison variance at most 1/4
        let se = (0.25 / n as f64).sqrt();
        assert!((est - exact).abs() <= 3.0 * se, "seed {seed}: {est} vs {exact}");
    }
}

#[test]
fn hashed_scorer_is_near_chance_with_many_comparisons() {
    let (g, _) = seeded_graph(3, 300, 0.05);
    let s = split_connected(&g, 0.1, 11).unwrap();
    let a = auc(&s, &Hashed(g.node_count()), AucSampling::Sampled(100_000), 5).unwrap();
    assert!((0.48..=0.52).contains(&a), "{a}");
}

#[test]
fn precision_is_bounded_for_arbitrary_scorers() {
    let (g, _) = seeded_graph(5, 60, 0.1);
    let s = split_connected(&g, 0.1, 2).unwrap();
    let p = precision(&s, &Hashed(g.node_count()), None).unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn experiments_do_not_depend_on_worker_count() {
    let (g, _) = seeded_graph(9, 50, 0.12);
    let opts = ExperimentOptions {
        runs: 12,
        master_seed: 77,
        ..Default::default()
    };
    let params = IndexParams::dcclp(0.02, 0.4);
    let many = run_experiment(&g, IndexKind::Dcclp, &params, &opts).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_experiment(&g, IndexKind::Dcclp, &params, &opts).unwrap());
    assert_eq!(many, one);
    let mean = many.auc_per_run().iter().sum::<f64>() / 12.0;
    assert!((mean - many.auc).abs() < 1e-15);
}
