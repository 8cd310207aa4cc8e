//! The search loop, its evaluation budget, and the canonical GP baseline.

mod budget;
mod config;
mod run;

pub use budget::{Budget, Charge};
pub use config::EngineConfig;
pub use run::{canonical_gp_run, dgp_run, initialize_population, Fitness, IterationRecord, PopulationBest, RunResult, TestMetrics};
