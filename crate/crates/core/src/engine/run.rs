use super::{Budget, Charge, EngineConfig};
use crate::data::Dataset;
use crate::dst::relax;
use crate::expr::{evaluate_tree, ramped_half_and_half, simplify, Caps, PrimitiveSet, SymbolicTree};
use crate::grad::{check_target, nrmse, sanitize, train_dst};
use crate::metrics::{r2, rmse};
use crate::sampler::{diversify, sample_tree, Individual};
use crate::seed::{derived_rng, Rng};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

const STREAM_MAIN: u64 = 1;
const STREAM_OPTIMIZE: u64 = 2;

/// Training-set NRMSE of discrete trees.
pub struct Fitness {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    sigma: f64,
}

impl Fitness {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let sigma = check_target(&y)?;
        Ok(Self { x, y, sigma })
    }

    pub fn eval(&self, t: &SymbolicTree) -> f64 {
        let mse = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| (y - sanitize(evaluate_tree(t, x))).powi(2))
            .sum::<f64>()
            / self.y.len() as f64;
        mse.sqrt() / self.sigma
    }
}

/// Held-out metrics of the reported tree. `None` marks an undefined value
/// (for instance a constant test target).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestMetrics {
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
    pub nrmse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub evaluations: u64,
    /// Individuals relaxed, trained and sampled in this iteration.
    pub optimized: usize,
    pub best_train_nrmse: f64,
    pub population_best_nrmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationBest {
    pub tree: SymbolicTree,
    pub train_nrmse: f64,
}

/// Outcome of one engine run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: String,
    pub seed: u64,
    /// Best tree over every evaluation of the run, with `pass` removed.
    pub best_tree: SymbolicTree,
    pub best_train_nrmse: f64,
    pub test_metrics: TestMetrics,
    pub program_size: usize,
    pub evaluations_used: u64,
    pub iterations_completed: usize,
    pub early_stopped: bool,
    pub final_population_best: PopulationBest,
    pub history: Vec<IterationRecord>,
    pub wall_time: f64,
    pub config: EngineConfig,
}

/// Ramped half-and-half trees over `cfg.init_depth`, each evaluated and
/// charged to `budget`. Trees outside the caps are regenerated.
pub fn initialize_population<R: rand::Rng + ?Sized>(
    cfg: &EngineConfig,
    ps: &PrimitiveSet,
    fit: &Fitness,
    rng: &mut R,
    budget: &mut Budget,
) -> Vec<Individual> {
    let trees = (0..cfg.population_size)
        .map(|_| {
            for _ in 0..100 {
                let t = ramped_half_and_half(rng, cfg.init_depth, ps);
                if cfg.caps.admits(&t) {
                    return t;
                }
            }
            ramped_half_and_half(rng, (0, 0), ps)
        })
        .collect();
    evaluate_all(trees, fit, budget)
}

fn evaluate_all(trees: Vec<SymbolicTree>, fit: &Fitness, budget: &mut Budget) -> Vec<Individual> {
    let scores: Vec<f64> = trees.par_iter().map(|t| fit.eval(t)).collect();
    trees
        .into_iter()
        .zip(scores)
        .map(|(tree, fitness)| {
            budget.record_fitness(fitness);
            Individual { tree, fitness }
        })
        .collect()
}

fn best_of(pool: &[Individual]) -> &Individual {
    pool.iter()
        .reduce(|a, b| if b.fitness < a.fitness { b } else { a })
        .expect("non-empty pool")
}

struct Tracker {
    best: Individual,
    history: Vec<IterationRecord>,
}

impl Tracker {
    fn offer(&mut self, ind: &Individual) {
        if ind.fitness < self.best.fitness || self.best.fitness.is_nan() {
            self.best = ind.clone();
        }
    }

    fn record(&mut self, iteration: usize, optimized: usize, pool: &[Individual], budget: &Budget) {
        self.offer(best_of(pool));
        self.history.push(IterationRecord {
            iteration,
            evaluations: budget.used,
            optimized,
            best_train_nrmse: self.best.fitness,
            population_best_nrmse: best_of(pool).fitness,
        });
    }
}

struct Setup {
    ps: Arc<PrimitiveSet>,
    fit: Fitness,
    budget: Budget,
    rng: Rng,
    pool: Vec<Individual>,
    tracker: Tracker,
    start: Instant,
}

fn setup(ds: &Dataset, cfg: &EngineConfig) -> Result<Setup> {
    let start = Instant::now();
    cfg.validate()?;
    let fit = Fitness::new(ds.train_x(), ds.train_y())?;
    let ps = Arc::new(PrimitiveSet::new(ds.n_vars()));
    let mut budget = Budget::new(cfg.max_evaluations, cfg.epoch_eval_cost, cfg.early_stop_nrmse);
    let mut rng = derived_rng(cfg.seed, &[STREAM_MAIN]);
    let pool = initialize_population(cfg, &ps, &fit, &mut rng, &mut budget);
    let mut tracker = Tracker {
        best: best_of(&pool).clone(),
        history: Vec::new(),
    };
    tracker.record(0, 0, &pool, &budget);
    Ok(Setup {
        ps,
        fit,
        budget,
        rng,
        pool,
        tracker,
        start,
    })
}

fn finish(method: &str, ds: &Dataset, cfg: &EngineConfig, s: Setup) -> RunResult {
    let best_tree = simplify(&s.tracker.best.tree);
    let pred: Vec<f64> = ds.test_x().iter().map(|x| evaluate_tree(&best_tree, x)).collect();
    let test_y = ds.test_y();
    let test_metrics = if test_y.is_empty() {
        TestMetrics {
            r2: None,
            rmse: None,
            nrmse: None,
        }
    } else {
        TestMetrics {
            r2: r2(&test_y, &pred).ok(),
            rmse: Some(rmse(&test_y, &pred)),
            nrmse: nrmse(&test_y, &pred).ok(),
        }
    };
    let final_best = best_of(&s.pool);
    RunResult {
        method: method.to_owned(),
        seed: cfg.seed,
        program_size: best_tree.len(),
        best_tree,
        best_train_nrmse: s.tracker.best.fitness,
        test_metrics,
        evaluations_used: s.budget.used,
        iterations_completed: s.tracker.history.len() - 1,
        early_stopped: s.budget.stopped,
        final_population_best: PopulationBest {
            tree: simplify(&final_best.tree),
            train_nrmse: final_best.fitness,
        },
        history: s.tracker.history,
        wall_time: s.start.elapsed().as_secs_f64(),
        config: *cfg,
    }
}

/// Relaxes, trains and re-samples one individual. Returns the best sampled
/// tree, or the input tree if training diverged.
fn optimize_one(
    tree: &SymbolicTree,
    ps: &Arc<PrimitiveSet>,
    train_x: &[Vec<f64>],
    fit: &Fitness,
    cfg: &EngineConfig,
    caps: &Caps,
    rng: &mut Rng,
) -> Vec<Individual> {
    let mut dst = relax(tree, ps.clone(), &cfg.init);
    if train_dst(&mut dst, train_x, &fit.y, &cfg.train, &cfg.loss, rng).is_err() {
        let fitness = fit.eval(tree);
        return vec![Individual { tree: tree.clone(), fitness }];
    }
    (0..cfg.samples_per_dst)
        .map(|_| {
            let t = sample_tree(&dst, rng, &cfg.sample, caps);
            let fitness = fit.eval(&t);
            Individual { tree: t, fitness }
        })
        .collect()
}

/// Differentiable GP: initialize, then repeat relax/train/sample for every
/// individual followed by genetic diversification, until the evaluation
/// budget is spent or a tree reaches the early-stop error.
///
/// An individual is optimized only if its full cost (`epochs *
/// epoch_eval_cost + samples_per_dst`) fits in the remaining budget, so only
/// fitness waves can overshoot it.
pub fn dgp_run(ds: &Dataset, cfg: &EngineConfig) -> Result<RunResult> {
    let mut s = setup(ds, cfg)?;
    let train_x = ds.train_x();
    let epoch_cost = cfg.train.epochs as u64 * cfg.epoch_eval_cost;
    let cost = epoch_cost + cfg.samples_per_dst as u64;
    let mut iteration = 0;
    while !s.budget.done() {
        iteration += 1;
        let used_before = s.budget.used;
        let n_opt = ((s.budget.remaining() / cost.max(1)) as usize).min(s.pool.len());
        let results: Vec<Vec<Individual>> = s.pool[..n_opt]
            .par_iter()
            .enumerate()
            .map(|(i, ind)| {
                let mut rng = derived_rng(cfg.seed, &[STREAM_OPTIMIZE, iteration as u64, i as u64]);
                optimize_one(&ind.tree, &s.ps, &train_x, &s.fit, cfg, &cfg.caps, &mut rng)
            })
            .collect();
        // committed in index order, as a sequential run would; results past
        // an early stop are discarded
        let mut optimized = 0;
        for (i, samples) in results.into_iter().enumerate() {
            if s.budget.stopped {
                break;
            }
            s.budget.account(Charge::Epoch, cfg.train.epochs as u64);
            for ind in &samples {
                s.budget.record_fitness(ind.fitness);
                s.tracker.offer(ind);
            }
            s.pool[i] = best_of(&samples).clone();
            optimized += 1;
        }

        let pool = std::mem::take(&mut s.pool);
        let fit = &s.fit;
        s.pool = diversify(
            pool,
            &|t: &SymbolicTree| fit.eval(t),
            &cfg.genetic,
            &s.ps,
            &cfg.caps,
            &mut s.rng,
            &mut s.budget,
        );
        s.tracker.record(iteration, optimized, &s.pool, &s.budget);
        if s.budget.used == used_before {
            break;
        }
    }
    Ok(finish("dgp", ds, cfg, s))
}

/// Canonical generational GP with the same initialization, operators,
/// budget accounting and reporting as [`dgp_run`], without relaxation.
/// One history entry covers `generations_per_iteration` generations.
pub fn canonical_gp_run(ds: &Dataset, cfg: &EngineConfig) -> Result<RunResult> {
    let mut s = setup(ds, cfg)?;
    let mut iteration = 0;
    while !s.budget.done() {
        iteration += 1;
        let used_before = s.budget.used;
        let pool = std::mem::take(&mut s.pool);
        let fit = &s.fit;
        s.pool = diversify(
            pool,
            &|t: &SymbolicTree| fit.eval(t),
            &cfg.genetic,
            &s.ps,
            &cfg.caps,
            &mut s.rng,
            &mut s.budget,
        );
        s.tracker.record(iteration, 0, &s.pool, &s.budget);
        if s.budget.used == used_before {
            break;
        }
    }
    Ok(finish("gp", ds, cfg, s))
}
