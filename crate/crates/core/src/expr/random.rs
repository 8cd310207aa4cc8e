use super::{Primitive, PrimitiveSet, SymbolicTree};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenMethod {
    /// Functions at every level above the target height.
    Full,
    /// Terminals may appear anywhere at or below the minimum depth.
    Grow,
}

/// Generates a random tree whose depth lies in `depth_range` (inclusive).
///
/// A target height is drawn uniformly from the range. `Full` fills every
/// level above it with functions; `Grow` forces functions above the minimum
/// depth and afterwards picks a terminal with probability
/// `d / (d + |functions|)`. `Pass` is never generated.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    depth_range: (usize, usize),
    method: GenMethod,
    ps: &PrimitiveSet,
) -> SymbolicTree {
    let (d_min, d_max) = depth_range;
    assert!(d_min <= d_max, "empty depth range {d_min}..={d_max}");
    assert!(ps.n_vars() > 0, "primitive set has no terminals");
    let functions: Vec<Primitive> = ps.generative_functions().collect();
    let terminals: Vec<Primitive> = ps.terminals().collect();
    let terminal_ratio = terminals.len() as f64 / (terminals.len() + functions.len()) as f64;
    let height = rng.random_range(d_min..=d_max);

    let mut prefix = Vec::new();
    // explicit stack of node depths still to generate
    let mut pending = vec![0usize];
    while let Some(depth) = pending.pop() {
        let leaf = depth == height
            || (method == GenMethod::Grow
                && depth >= d_min
                && rng.random::<f64>() < terminal_ratio);
        let p = if leaf {
            *terminals.choose(rng).expect("non-empty")
        } else {
            *functions.choose(rng).expect("non-empty")
        };
        prefix.push(p);
        for _ in 0..p.arity() {
            pending.push(depth + 1);
        }
    }
    SymbolicTree::from_prefix(&prefix).expect("generator emits complete prefix")
}

/// Ramped half-and-half: each call picks `Full` or `Grow` with equal
/// probability.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    rng: &mut R,
    depth_range: (usize, usize),
    ps: &PrimitiveSet,
) -> SymbolicTree {
    let method = if rng.random::<bool>() {
        GenMethod::Full
    } else {
        GenMethod::Grow
    };
    random_tree(rng, depth_range, method, ps)
}
