use super::GeneticConfig;
use crate::engine::Budget;
use crate::expr::{random_tree, Caps, GenMethod, PrimitiveSet, SymbolicTree};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A discrete tree with its training NRMSE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub tree: SymbolicTree,
    pub fitness: f64,
}

fn key(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Index of the lowest fitness; ties go to the earliest individual.
pub(crate) fn best_index(pool: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pool.iter().enumerate().skip(1) {
        if key(ind.fitness) < key(pool[best].fitness) {
            best = i;
        }
    }
    best
}

/// Draws `size` contestants with replacement and returns the index of the
/// fittest (first drawn wins ties).
pub fn tournament<R: Rng + ?Sized>(pool: &[Individual], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..pool.len());
    for _ in 1..size {
        let c = rng.random_range(0..pool.len());
        if key(pool[c].fitness) < key(pool[best].fitness) {
            best = c;
        }
    }
    best
}

/// Swaps uniformly chosen subtrees of `a` and `b`. An offspring that breaks
/// `caps` is replaced by its unmodified parent.
pub fn crossover_one_point<R: Rng + ?Sized>(
    a: &SymbolicTree,
    b: &SymbolicTree,
    rng: &mut R,
    caps: &Caps,
) -> (SymbolicTree, SymbolicTree) {
    let i = rng.random_range(0..a.len());
    let j = rng.random_range(0..b.len());
    let child_a = a.replace_subtree(i, &b.subtree(j));
    let child_b = b.replace_subtree(j, &a.subtree(i));
    let keep = |child: SymbolicTree, parent: &SymbolicTree| {
        if caps.admits(&child) {
            child
        } else {
            parent.clone()
        }
    };
    (keep(child_a, a), keep(child_b, b))
}

/// Replaces a uniformly chosen subtree with a fresh `grow` tree whose depth
/// lies in `gc.mutate_subtree_depth`. Reverts to `t` if `caps` would break.
pub fn mutate_uniform<R: Rng + ?Sized>(
    t: &SymbolicTree,
    rng: &mut R,
    gc: &GeneticConfig,
    ps: &PrimitiveSet,
    caps: &Caps,
) -> SymbolicTree {
    let i = rng.random_range(0..t.len());
    let sub = random_tree(rng, gc.mutate_subtree_depth, GenMethod::Grow, ps);
    let out = t.replace_subtree(i, &sub);
    if caps.admits(&out) {
        out
    } else {
        t.clone()
    }
}

/// Runs `gc.generations_per_iteration` generations of tournament selection,
/// one-point crossover and uniform mutation with full replacement and one
/// elite. Only offspring that differ from their selected parent are
/// re-evaluated; each evaluation is charged to `budget`. Stops before a new
/// generation once the budget is done.
pub fn diversify<F, R>(
    mut pool: Vec<Individual>,
    fitness: &F,
    gc: &GeneticConfig,
    ps: &PrimitiveSet,
    caps: &Caps,
    rng: &mut R,
    budget: &mut Budget,
) -> Vec<Individual>
where
    F: Fn(&SymbolicTree) -> f64 + Sync,
    R: Rng + ?Sized,
{
    if pool.is_empty() {
        return pool;
    }
    for _ in 0..gc.generations_per_iteration {
        if budget.done() {
            break;
        }
        let elite = pool[best_index(&pool)].clone();
        let mut offspring: Vec<(SymbolicTree, Option<f64>)> = (1..pool.len())
            .map(|_| {
                let w = tournament(&pool, gc.tournament_size, rng);
                (pool[w].tree.clone(), Some(pool[w].fitness))
            })
            .collect();

        for i in (1..offspring.len()).step_by(2) {
            if rng.random::<f64>() < gc.crossover_rate {
                let (a, b) = crossover_one_point(&offspring[i - 1].0, &offspring[i].0, rng, caps);
                if a != offspring[i - 1].0 {
                    offspring[i - 1] = (a, None);
                }
                if b != offspring[i].0 {
                    offspring[i] = (b, None);
                }
            }
        }
        for o in offspring.iter_mut() {
            if rng.random::<f64>() < gc.mutation_rate {
                let m = mutate_uniform(&o.0, rng, gc, ps, caps);
                if m != o.0 {
                    *o = (m, None);
                }
            }
        }

        let stale: Vec<usize> = (0..offspring.len()).filter(|&i| offspring[i].1.is_none()).collect();
        let scores: Vec<f64> = stale.par_iter().map(|&i| fitness(&offspring[i].0)).collect();
        for (&i, &f) in stale.iter().zip(&scores) {
            budget.record_fitness(f);
            offspring[i].1 = Some(f);
        }

        pool = std::iter::once(elite)
            .chain(offspring.into_iter().map(|(tree, f)| Individual {
                tree,
                fitness: f.expect("evaluated"),
            }))
            .collect();
    }
    pool
}
