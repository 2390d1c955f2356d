mod common;

use std::sync::Mutex;

use common::seeded_graph;
use linkpred_core::evaluation::{run_experiment, ExperimentOptions};
use linkpred_core::tuner::{
    grid_search, search, tune, GridSearch, Objective, Point, RandomSearch, SearchBox, TuneOptions, WhiteShark,
};
use linkpred_core::{Error, IndexKind, IndexParams};

fn quick() -> TuneOptions {
    TuneOptions {
        tuning_runs: 4,
        confirm_runs: 0,
        ..Default::default()
    }
}

#[test]
fn one_point_grid_returns_that_point() {
    let (g, _) = seeded_graph(1, 40, 0.15);
    let r = tune(&g, &SearchBox::default(), &GridSearch::square(1), 1, 3, &quick()).unwrap();
    assert_eq!((r.theta_star, r.alpha_star, r.evaluations), (0.0, 0.0, 1));
    let obj = Objective::new(&g, 4, 3, &quick()).unwrap();
    assert_eq!(r.best_auc, obj.evaluate(Point { theta: 0.0, alpha: 0.0 }));
}

#[test]
fn resolution_two_grid_evaluates_the_corners() {
    let (g, _) = seeded_graph(2, 34, 0.15);
    let r = grid_search(&g, &SearchBox::default(), 2, 0, &quick()).unwrap();
    assert_eq!(r.evaluations, 4);
    let obj = Objective::new(&g, 4, 0, &quick()).unwrap();
    let corners = GridSearch::square(2).points(&SearchBox::default());
    let best = corners.iter().map(|&p| obj.evaluate(p)).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_auc, best);
    assert!(matches!(
        grid_search(&g, &SearchBox::default(), 1, 0, &quick()),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn constant_objective_picks_the_lower_corner() {
    let b = SearchBox {
        theta: (0.01, 0.09),
        alpha: (0.2, 0.8),
    };
    for strategy in [&GridSearch::square(7) as &dyn linkpred_core::tuner::SearchStrategy, &WhiteShark::default(), &RandomSearch] {
        let (p, v, _) = search(&|pts| vec![0.75; pts.len()], &b, strategy, 120, 4).unwrap();
        assert_eq!(v, 0.75);
        if strategy.tag().starts_with("grid") {
            assert_eq!(p, Point { theta: 0.01, alpha: 0.2 });
        }
    }
}

#[test]
fn tuning_is_deterministic() {
    let (g, _) = seeded_graph(3, 50, 0.12);
    let opts = TuneOptions {
        confirm_runs: 5,
        ..quick()
    };
    let a = tune(&g, &SearchBox::default(), &WhiteShark::default(), 90, 21, &opts).unwrap();
    let b = tune(&g, &SearchBox::default(), &WhiteShark::default(), 90, 21, &opts).unwrap();
    assert_eq!(a, b);
    let c = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| tune(&g, &SearchBox::default(), &WhiteShark::default(), 90, 21, &opts).unwrap());
    assert_eq!(a, c);
}

#[test]
fn best_auc_reproduces_on_reevaluation_and_matches_the_experiment() {
    let (g, _) = seeded_graph(4, 45, 0.15);
    let opts = TuneOptions {
        confirm_runs: 6,
        ..quick()
    };
    let r = tune(&g, &SearchBox::default(), &WhiteShark::default(), 60, 8, &opts).unwrap();
    let p = Point {
        theta: r.theta_star,
        alpha: r.alpha_star,
    };
    assert!(SearchBox::default().contains(p));
    assert_eq!(Objective::new(&g, 4, 8, &opts).unwrap().evaluate(p), r.best_auc);

    let report = run_experiment(
        &g,
        IndexKind::Dcclp,
        &IndexParams::dcclp(r.theta_star, r.alpha_star),
        &ExperimentOptions {
            runs: 6,
            master_seed: 8,
            ..Default::default()
        },
    )
    .unwrap();
    let confirm = r.confirm_auc.unwrap();
    assert!((report.auc - confirm).abs() < 1e-12, "{} vs {confirm}", report.auc);
}

#[test]
fn white_shark_keeps_its_best_point() {
    let (g, _) = seeded_graph(5, 40, 0.15);
    let obj = Objective::new(&g, 3, 1, &quick()).unwrap();
    let seen = Mutex::new(Vec::new());
    let f = |pts: &[Point]| {
        let v = obj.evaluate_batch(pts);
        seen.lock().unwrap().extend(v.iter().copied());
        v
    };
    let (_, best, used) = search(&f, &SearchBox::default(), &WhiteShark::default(), 150, 2, ).unwrap();
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.len(), used);
    assert_eq!(best, seen.iter().copied().fold(f64::NEG_INFINITY, f64::max));
}

#[test]
fn nested_grids_never_lose_ground() {
    let (g, _) = seeded_graph(6, 40, 0.15);
    let b = SearchBox::default();
    let mut last = f64::NEG_INFINITY;
    for res in [2, 3, 5, 9, 17] {
        let r = grid_search(&g, &b, res, 5, &quick()).unwrap();
        assert!(r.best_auc >= last, "resolution {res}: {} < {last}", r.best_auc);
        last = r.best_auc;
    }
}

#[test]
fn splits_without_test_edges_are_an_error() {
    let path: Vec<_> = (0..9).map(|i| (i, i + 1)).collect();
    let g = linkpred_core::Graph::from_edges(10, &path).unwrap();
    assert!(matches!(
        tune(&g, &SearchBox::default(), &WhiteShark::default(), 30, 0, &quick()),
        Err(Error::Tuning(_))
    ));
}
