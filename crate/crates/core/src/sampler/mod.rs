//! Turning trained DSTs back into discrete trees, and the genetic operators
//! that diversify the resulting pool.

mod discretize;
mod genetic;
mod ops;

pub use discretize::sample_tree;
pub use genetic::{crossover_one_point, diversify, mutate_uniform, tournament, Individual};
pub use ops::{expand, replace, shrink};

use crate::{DgpError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Logits are divided by this before the per-node softmax draw.
    pub temperature: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(DgpError::Config(format!(
                "sample.temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneticConfig {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub generations_per_iteration: usize,
    /// Inclusive depth range of the subtrees grown by uniform mutation.
    pub mutate_subtree_depth: (usize, usize),
}

impl Default for GeneticConfig {
    fn default() -> Self {
        Self {
            crossover_rate: 0.5,
            mutation_rate: 0.5,
            tournament_size: 3,
            generations_per_iteration: 20,
            mutate_subtree_depth: (0, 2),
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if !rate_ok(self.crossover_rate) || !rate_ok(self.mutation_rate) {
            return Err(DgpError::Config(
                "genetic crossover_rate and mutation_rate must lie in [0, 1]".into(),
            ));
        }
        if self.tournament_size == 0 {
            return Err(DgpError::Config("genetic.tournament_size must be >= 1".into()));
        }
        let (lo, hi) = self.mutate_subtree_depth;
        if lo > hi {
            return Err(DgpError::Config(format!(
                "genetic.mutate_subtree_depth is empty: [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}
