//! Estimation of the DCCLP weights `(theta, alpha)` by maximising mean AUC
//! over a fixed set of tuning splits.
//!
//! The splits (and, for large graphs, the sampled AUC comparisons) are drawn
//! once up front and shared by every candidate point, so differences in the
//! objective reflect the parameters and not split luck. The per-pair DCCLP
//! ingredients do not depend on the parameters and are cached, which makes
//! one objective evaluation a linear combination plus a ranking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    auc_exhaustive, auc_from_comparisons, run_seeds, split_connected, AucSampling, Candidates,
};
use crate::graph::Graph;
use crate::similarity::{DcclpTerms, DegreeTerm, IndexKind, IndexParams, IndexScorer, THETA_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub theta: (f64, f64),
    pub alpha: (f64, f64),
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            theta: (0.0, THETA_MAX),
            alpha: (0.0, 1.0),
        }
    }
}

impl SearchBox {
    pub fn validate(&self) -> Result<()> {
        let (tl, th) = self.theta;
        let (al, ah) = self.alpha;
        let ok = [tl, th, al, ah].iter().all(|v| v.is_finite())
            && 0.0 <= tl
            && tl <= th
            && th <= THETA_MAX
            && 0.0 <= al
            && al <= ah
            && ah <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "search box theta {:?} alpha {:?} must be nonempty and inside [0, {THETA_MAX}] x [0, 1]",
                self.theta, self.alpha
            )))
        }
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point {
            theta: p.theta.clamp(self.theta.0, self.theta.1),
            alpha: p.alpha.clamp(self.alpha.0, self.alpha.1),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.theta.0..=self.theta.1).contains(&p.theta) && (self.alpha.0..=self.alpha.1).contains(&p.alpha)
    }

    fn lower(&self) -> [f64; 2] {
        [self.theta.0, self.alpha.0]
    }

    fn upper(&self) -> [f64; 2] {
        [self.theta.1, self.alpha.1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub theta: f64,
    pub alpha: f64,
}

impl Point {
    fn from_array(v: [f64; 2]) -> Self {
        Point {
            theta: v[0],
            alpha: v[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub q: f64,
    /// Splits averaged by the search objective.
    pub tuning_runs: usize,
    /// Splits for the final re-evaluation of the winner; 0 skips it.
    pub confirm_runs: usize,
    pub sampling: AucSampling,
    pub degree_term: DegreeTerm,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            q: 0.1,
            tuning_runs: 10,
            confirm_runs: 100,
            sampling: AucSampling::Auto,
            degree_term: DegreeTerm::CommonNeighbor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub theta_star: f64,
    pub alpha_star: f64,
    /// Objective value at the winner over the tuning splits.
    pub best_auc: f64,
    pub evaluations: usize,
    pub strategy: String,
    pub tuning_runs: usize,
    pub master_seed: u64,
    /// Mean AUC at the winner over `confirm_runs` splits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confirm_auc: Option<f64>,
    pub confirm_runs: usize,
}

struct SplitTerms {
    terms: Vec<DcclpTerms>,
    is_test: Vec<bool>,
    comparisons: Option<Vec<(usize, usize)>>,
}

impl SplitTerms {
    fn auc(&self, p: Point, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend(self.terms.iter().map(|t| t.combine(p.theta, p.alpha)));
        match &self.comparisons {
            None => auc_exhaustive(scratch, &self.is_test).0,
            Some(c) => auc_from_comparisons(scratch, c),
        }
    }
}

/// Mean DCCLP AUC over a fixed set of splits, as a function of `(theta, alpha)`.
///
/// Run `r` uses the same split and AUC seeds as run `r` of
/// [`crate::evaluation::run_experiment`] with the same master seed, so the
/// objective equals that experiment's mean AUC.
pub struct Objective {
    splits: Vec<SplitTerms>,
    skipped: usize,
}

impl Objective {
    pub fn new(g: &Graph, runs: usize, master_seed: u64, opts: &TuneOptions) -> Result<Self> {
        if runs == 0 {
            return Err(Error::InvalidParams("tuning needs at least one split".into()));
        }
        let built: Vec<Option<SplitTerms>> = (0..runs)
            .into_par_iter()
            .map(|run| -> Result<Option<SplitTerms>> {
                let (split_seed, auc_seed) = run_seeds(master_seed, run);
                let split = split_connected(g, opts.q, split_seed)?;
                if split.test_edges.is_empty() {
                    return Ok(None);
                }
                let candidates = Candidates::new(&split);
                if candidates.nonexistent_count() == 0 {
                    return Ok(None);
                }
                let params = IndexParams {
                    degree_term: opts.degree_term,
                    ..IndexParams::dcclp(0.0, 1.0)
                };
                let scorer = IndexScorer::new(&split.train, IndexKind::Dcclp, params)?;
                let terms = scorer.dcclp_terms(&candidates.pairs());
                let comparisons = candidates.comparisons(opts.sampling, auc_seed)?;
                Ok(Some(SplitTerms {
                    terms,
                    is_test: candidates.is_test().to_vec(),
                    comparisons,
                }))
            })
            .collect::<Result<_>>()?;
        let skipped = built.iter().filter(|s| s.is_none()).count();
        let splits: Vec<SplitTerms> = built.into_iter().flatten().collect();
        if splits.is_empty() {
            return Err(Error::Tuning(format!(
                "none of the {runs} splits produced a usable test set (is the graph a forest?)"
            )));
        }
        Ok(Objective { splits, skipped })
    }

    pub fn split_count(&self) -> usize {
        self.splits.len()
    }

    /// Splits dropped because they had no test edges.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn evaluate(&self, p: Point) -> f64 {
        let mut scratch = Vec::new();
        let total: f64 = self.splits.iter().map(|s| s.auc(p, &mut scratch)).sum();
        total / self.splits.len() as f64
    }

    pub fn evaluate_batch(&self, points: &[Point]) -> Vec<f64> {
        points.par_iter().map(|&p| self.evaluate(p)).collect()
    }
}

/// A bounded black-box maximiser. Implementations call `evaluate` with
/// batches of in-box points and must not exceed `budget` points overall.
pub trait SearchStrategy: Sync {
    fn tag(&self) -> String;

    fn search(
        &self,
        bounds: &SearchBox,
        budget: usize,
        seed: u64,
        evaluate: &mut dyn FnMut(&[Point]) -> Vec<f64>,
    ) -> Result<()>;
}

/// Lattice of `theta_steps x alpha_steps` points spanning the box, visited
/// theta-major in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSearch {
    pub theta_steps: usize,
    pub alpha_steps: usize,
}

impl GridSearch {
    pub fn square(resolution: usize) -> Self {
        GridSearch {
            theta_steps: resolution,
            alpha_steps: resolution,
        }
    }

    pub fn points(&self, bounds: &SearchBox) -> Vec<Point> {
        let axis = |(lo, hi): (f64, f64), steps: usize| -> Vec<f64> {
            if steps == 1 {
                return vec![lo];
            }
            (0..steps)
                .map(|i| {
                    if i == steps - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (i as f64 / (steps - 1) as f64)
                    }
                })
                .collect()
        };
        let thetas = axis(bounds.theta, self.theta_steps);
        let alphas = axis(bounds.alpha, self.alpha_steps);
        thetas
            .iter()
            .flat_map(|&theta| alphas.iter().map(move |&alpha| Point { theta, alpha }))
            .collect()
    }
}

impl SearchStrategy for GridSearch {
    fn tag(&self) -> String {
        format!("grid{}x{}", self.theta_steps, self.alpha_steps)
    }

    fn search(
        &self,
        bounds: &SearchBox,
        budget: usize,
        _seed: u64,
        evaluate: &mut dyn FnMut(&[Point]) -> Vec<f64>,
    ) -> Result<()> {
        if self.theta_steps == 0 || self.alpha_steps == 0 {
            return Err(Error::InvalidParams("grid needs at least one step per axis".into()));
        }
        let points = self.points(bounds);
        if points.len() > budget {
            return Err(Error::Tuning(format!(
                "grid of {} points exceeds the budget of {budget} evaluations",
                points.len()
            )));
        }
        evaluate(&points);
        Ok(())
    }
}

/// Uniform random points in the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RandomSearch;

impl SearchStrategy for RandomSearch {
    fn tag(&self) -> String {
        "random".into()
    }

    fn search(
        &self,
        bounds: &SearchBox,
        budget: usize,
        seed: u64,
        evaluate: &mut dyn FnMut(&[Point]) -> Vec<f64>,
    ) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (bounds.lower(), bounds.upper());
        let points: Vec<Point> = (0..budget)
            .map(|_| Point::from_array([0, 1].map(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>())))
            .collect();
        evaluate(&points);
        Ok(())
    }
}

/// White Shark Optimizer (Braik et al., 2022).
///
/// Each shark moves by a damped velocity toward the global best and a
/// randomly chosen shark's personal best, occasionally snaps back into the
/// box, and with a slowly growing probability joins a fish-school move
/// around the global best. Positions are clamped to the box before every
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhiteShark {
    pub population: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub tau: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Default for WhiteShark {
    fn default() -> Self {
        WhiteShark {
            population: 30,
            p_min: 0.5,
            p_max: 1.5,
            tau: 4.125,
            f_min: 0.07,
            f_max: 0.75,
            a0: 6.25,
            a1: 100.0,
            a2: 0.0005,
        }
    }
}

impl WhiteShark {
    fn constriction(&self) -> f64 {
        2.0 / (2.0 - self.tau - (self.tau * self.tau - 4.0 * self.tau).sqrt()).abs()
    }
}

impl SearchStrategy for WhiteShark {
    fn tag(&self) -> String {
        format!("wso{}", self.population)
    }

    fn search(
        &self,
        bounds: &SearchBox,
        budget: usize,
        seed: u64,
        evaluate: &mut dyn FnMut(&[Point]) -> Vec<f64>,
    ) -> Result<()> {
        if self.population == 0 {
            return Err(Error::InvalidParams("white shark population must be >= 1".into()));
        }
        let pop = self.population.min(budget);
        let iterations = budget / pop - 1;
        let (lo, hi) = (bounds.lower(), bounds.upper());
        let clamp = |w: [f64; 2]| -> [f64; 2] { [0, 1].map(|d| w[d].clamp(lo[d], hi[d])) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut pos: Vec<[f64; 2]> = (0..pop)
            .map(|_| [0, 1].map(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>()))
            .collect();
        let mut vel = vec![[0.0f64; 2]; pop];
        let batch: Vec<Point> = pos.iter().map(|&w| Point::from_array(w)).collect();
        let mut fitness = evaluate(&batch);
        let mut personal = pos.clone();
        let mut gbest_idx = argmax(&fitness);
        let mut gbest = personal[gbest_idx];

        let mu = self.constriction();
        let f = self.f_min + (self.f_max - self.f_min) / (self.f_max + self.f_min);
        let k_max = iterations as f64;
        for k in 1..=iterations {
            let kf = k as f64;
            let decay = (-(4.0 * kf / k_max).powi(2)).exp();
            let p1 = self.p_max + (self.p_max - self.p_min) * decay;
            let p2 = self.p_min + (self.p_max - self.p_min) * decay;
            let mv = 1.0 / (self.a0 + ((k_max / 2.0 - kf) / self.a1).exp());
            let ss = (1.0 - (-self.a2 * kf / k_max).exp()).abs();

            for i in 0..pop {
                let nu = rng.random_range(0..pop);
                let (c1, c2) = (rng.random::<f64>(), rng.random::<f64>());
                for d in 0..2 {
                    vel[i][d] = mu
                        * (vel[i][d]
                            + p1 * c1 * (gbest[d] - pos[i][d])
                            + p2 * c2 * (personal[nu][d] - pos[i][d]));
                }
            }
            for i in 0..pop {
                if rng.random::<f64>() < mv {
                    for d in 0..2 {
                        if pos[i][d] > hi[d] {
                            pos[i][d] = hi[d];
                        } else if pos[i][d] < lo[d] {
                            pos[i][d] = lo[d];
                        }
                    }
                } else {
                    for d in 0..2 {
                        pos[i][d] += vel[i][d] / f;
                    }
                }
            }
            for i in 0..pop {
                if rng.random::<f64>() <= ss {
                    let mut school = [0.0; 2];
                    for d in 0..2 {
                        let dist = (rng.random::<f64>() * (gbest[d] - pos[i][d])).abs();
                        let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                        school[d] = gbest[d] + rng.random::<f64>() * dist * sign;
                    }
                    if i == 0 {
                        pos[i] = school;
                    } else {
                        let r = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        let prev = pos[i - 1];
                        pos[i] = [0, 1].map(|d| (school[d] + prev[d]) / (2.0 * r));
                    }
                }
                pos[i] = clamp(pos[i]);
            }

            let batch: Vec<Point> = pos.iter().map(|&w| Point::from_array(w)).collect();
            let values = evaluate(&batch);
            for i in 0..pop {
                if values[i] > fitness[i] {
                    fitness[i] = values[i];
                    personal[i] = pos[i];
                }
            }
            let best = argmax(&fitness);
            if fitness[best] > fitness[gbest_idx] {
                gbest_idx = best;
            }
            gbest = personal[gbest_idx];
        }
        Ok(())
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Strict improvement, then smaller theta, then smaller alpha.
fn better(candidate: (Point, f64), incumbent: (Point, f64)) -> bool {
    let (p, v) = candidate;
    let (q, w) = incumbent;
    v > w || (v == w && (p.theta < q.theta || (p.theta == q.theta && p.alpha < q.alpha)))
}

/// Runs `strategy` against a batch objective and returns the best evaluated
/// point, its value and the number of evaluations.
pub fn search(
    objective: &dyn Fn(&[Point]) -> Vec<f64>,
    bounds: &SearchBox,
    strategy: &dyn SearchStrategy,
    budget: usize,
    seed: u64,
) -> Result<(Point, f64, usize)> {
    bounds.validate()?;
    if budget == 0 {
        return Err(Error::InvalidParams("tuning budget must be >= 1 evaluation".into()));
    }
    let mut best: Option<(Point, f64)> = None;
    let mut used = 0usize;
    let mut overrun = false;
    let mut evaluate = |points: &[Point]| -> Vec<f64> {
        let points: Vec<Point> = points.iter().map(|&p| bounds.clamp(p)).collect();
        if used + points.len() > budget {
            overrun = true;
        }
        used += points.len();
        let values = objective(&points);
        for (&p, &v) in points.iter().zip(&values) {
            if best.is_none_or(|b| better((p, v), b)) {
                best = Some((p, v));
            }
        }
        values
    };
    strategy.search(bounds, budget, seed, &mut evaluate)?;
    if overrun {
        return Err(Error::Tuning(format!(
            "strategy {} used {used} evaluations, over its budget of {budget}",
            strategy.tag()
        )));
    }
    let (p, v) = best.ok_or_else(|| Error::Tuning("strategy evaluated no points".into()))?;
    Ok((p, v, used))
}

/// Tunes `(theta, alpha)` on `g`.
pub fn tune(
    g: &Graph,
    bounds: &SearchBox,
    strategy: &dyn SearchStrategy,
    budget: usize,
    master_seed: u64,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    bounds.validate()?;
    let objective = Objective::new(g, opts.tuning_runs, master_seed, opts)?;
    let strategy_seed = crate::evaluation::derive_seed(master_seed, u64::MAX);
    let (best, best_auc, evaluations) =
        search(&|pts| objective.evaluate_batch(pts), bounds, strategy, budget, strategy_seed)?;
    let confirm_auc = if opts.confirm_runs > 0 {
        let confirm = Objective::new(g, opts.confirm_runs, master_seed, opts)?;
        Some(confirm.evaluate(best))
    } else {
        None
    };
    Ok(TuneResult {
        theta_star: best.theta,
        alpha_star: best.alpha,
        best_auc,
        evaluations,
        strategy: strategy.tag(),
        tuning_runs: opts.tuning_runs,
        master_seed,
        confirm_auc,
        confirm_runs: opts.confirm_runs,
    })
}

/// Exhaustive `resolution x resolution` lattice search.
pub fn grid_search(
    g: &Graph,
    bounds: &SearchBox,
    resolution: usize,
    master_seed: u64,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    if resolution < 2 {
        return Err(Error::InvalidParams("grid resolution must be >= 2 per axis".into()));
    }
    let grid = GridSearch::square(resolution);
    tune(g, bounds, &grid, resolution * resolution, master_seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Point>);
    impl SearchStrategy for Fixed {
        fn tag(&self) -> String {
            "fixed".into()
        }
        fn search(&self, _: &SearchBox, _: usize, _: u64, evaluate: &mut dyn FnMut(&[Point]) -> Vec<f64>) -> Result<()> {
            evaluate(&self.0);
            Ok(())
        }
    }

    #[test]
    fn grid_points_nest_and_hit_corners() {
        let b = SearchBox::default();
        let coarse = GridSearch::square(3).points(&b);
        let fine = GridSearch::square(5).points(&b);
        assert_eq!(coarse.len(), 9);
        assert_eq!(coarse[0], Point { theta: 0.0, alpha: 0.0 });
        assert_eq!(coarse[8], Point { theta: THETA_MAX, alpha: 1.0 });
        for p in &coarse {
            assert!(fine.contains(p), "{p:?}");
        }
        assert_eq!(GridSearch::square(1).points(&b), vec![Point { theta: 0.0, alpha: 0.0 }]);
    }

    #[test]
    fn clamping_keeps_points_inside() {
        let b = SearchBox::default();
        let p = b.clamp(Point { theta: -1.0, alpha: 3.0 });
        assert_eq!(p, Point { theta: 0.0, alpha: 1.0 });
        assert!(b.contains(p));
        assert!(SearchBox { theta: (0.0, 0.5), alpha: (0.0, 1.0) }.validate().is_err());
        assert!(SearchBox { theta: (0.05, 0.01), alpha: (0.0, 1.0) }.validate().is_err());
    }

    #[test]
    fn wso_constriction_factor() {
        let mu = WhiteShark::default().constriction();
        assert!((mu - 0.7034).abs() < 1e-3, "{mu}");
    }

    #[test]
    fn wso_respects_budget() {
        let b = SearchBox::default();
        for budget in [1, 29, 30, 31, 95, 600] {
            let mut used = 0;
            WhiteShark::default()
                .search(&b, budget, 3, &mut |pts| {
                    used += pts.len();
                    assert!(pts.iter().all(|p| b.contains(*p)));
                    pts.iter().map(|p| -(p.theta - 0.03).powi(2) - (p.alpha - 0.4).powi(2)).collect()
                })
                .unwrap();
            assert!(used <= budget && used > 0, "budget {budget} used {used}");
        }
    }

    #[test]
    fn wso_finds_a_smooth_optimum() {
        let b = SearchBox::default();
        let mut best = f64::NEG_INFINITY;
        WhiteShark::default()
            .search(&b, 600, 11, &mut |pts| {
                let v: Vec<f64> = pts
                    .iter()
                    .map(|p| -((p.theta - 0.03) / 0.1).powi(2) - (p.alpha - 0.4).powi(2))
                    .collect();
                best = v.iter().copied().fold(best, f64::max);
                v
            })
            .unwrap();
        assert!(best > -1e-3, "{best}");
    }

    #[test]
    fn tie_break_prefers_small_theta_then_alpha() {
        let a = Point { theta: 0.01, alpha: 0.5 };
        let b = Point { theta: 0.02, alpha: 0.1 };
        let c = Point { theta: 0.01, alpha: 0.2 };
        assert!(better((a, 1.0), (b, 1.0)));
        assert!(better((c, 1.0), (a, 1.0)));
        assert!(!better((b, 1.0), (a, 1.0)));
        assert!(better((b, 1.1), (a, 1.0)));
    }

    #[test]
    fn forest_cannot_be_tuned() {
        let tree = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let r = tune(&tree, &SearchBox::default(), &GridSearch::square(2), 4, 0, &TuneOptions::default());
        assert!(matches!(r, Err(Error::Tuning(_))));
    }

    #[test]
    fn overrunning_strategy_is_rejected() {
        let ring: Vec<_> = (0..12).map(|i| (i, (i + 1) % 12)).chain([(0, 6), (2, 8)]).collect();
        let g = Graph::from_edges(12, &ring).unwrap();
        let opts = TuneOptions {
            tuning_runs: 2,
            confirm_runs: 0,
            ..Default::default()
        };
        let obj = Objective::new(&g, 2, 0, &opts).unwrap();
        let pts = vec![Point { theta: 0.0, alpha: 0.0 }; 3];
        assert!(search(&|p| obj.evaluate_batch(p), &SearchBox::default(), &Fixed(pts), 2, 0).is_err());
    }
}
