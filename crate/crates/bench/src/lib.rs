//! Fixtures shared by the benchmarks.

use dgp_core::data::{synthetic_trial, Dataset, NoiseSpec, SyntheticBenchmark, SyntheticSpec};
use dgp_core::dst::{relax, DiffSymbolicTree, InitConfig};
use dgp_core::engine::EngineConfig;
use dgp_core::{parse_tree, PrimitiveSet};
use std::sync::Arc;

/// Ground-truth shaped expression of the S4 problem.
pub const S4_TREE: &str = "(+ (sin x0) (sin (* x1 x1)))";

pub fn s4_data() -> Dataset {
    synthetic_trial(&SyntheticSpec::new(SyntheticBenchmark::S4), &NoiseSpec::default(), 0, 0).unwrap()
}

/// S4-shaped tree relaxed with default logits.
pub fn s4_dst() -> DiffSymbolicTree {
    relax(&parse_tree(S4_TREE).unwrap(), Arc::new(PrimitiveSet::new(2)), &InitConfig::default())
}

/// A search small enough to time repeatedly.
pub fn tiny_engine() -> EngineConfig {
    let mut cfg = EngineConfig::desk();
    cfg.population_size = 20;
    cfg.max_evaluations = 5_000;
    cfg.train.epochs = 50;
    cfg.samples_per_dst = 10;
    cfg.early_stop_nrmse = 0.0;
    cfg
}
