use crate::dst::InitConfig;
use crate::expr::Caps;
use crate::grad::{LossConfig, TrainConfig};
use crate::sampler::{GeneticConfig, SampleConfig};
use crate::{DgpError, Result};
use serde::{Deserialize, Serialize};

/// Everything a run needs besides the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub population_size: usize,
    pub max_evaluations: u64,
    pub early_stop_nrmse: f64,
    pub seed: u64,
    /// Budget charged per DST training epoch.
    pub epoch_eval_cost: u64,
    /// Trees drawn from each trained DST; the best one enters the pool.
    pub samples_per_dst: usize,
    /// Depth range of the ramped half-and-half initial population.
    pub init_depth: (usize, usize),
    pub caps: Caps,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub sample: SampleConfig,
    pub genetic: GeneticConfig,
    pub init: InitConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            max_evaluations: 100_000,
            early_stop_nrmse: 1e-6,
            seed: 0,
            epoch_eval_cost: 1,
            samples_per_dst: 1,
            init_depth: (1, 3),
            caps: Caps::default(),
            train: TrainConfig::default(),
            loss: LossConfig::default(),
            sample: SampleConfig::default(),
            genetic: GeneticConfig::default(),
            init: InitConfig::default(),
        }
    }
}

impl EngineConfig {
    /// Scale used for the synthetic benchmarks.
    pub fn synthetic() -> Self {
        Self {
            population_size: 1000,
            max_evaluations: 500_000,
            ..Self::default()
        }
    }

    /// Small configuration that finishes in seconds per run. Sampling is
    /// cheap next to training, so each trained DST is sampled 100 times.
    pub fn desk() -> Self {
        Self {
            population_size: 50,
            max_evaluations: 50_000,
            samples_per_dst: 100,
            train: TrainConfig {
                epochs: 200,
                ..TrainConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(DgpError::Config(m));
        if self.population_size == 0 {
            return err("engine.population_size must be >= 1".into());
        }
        if self.samples_per_dst == 0 {
            return err("engine.samples_per_dst must be >= 1".into());
        }
        if self.early_stop_nrmse.is_nan() {
            return err("engine.early_stop_nrmse is NaN".into());
        }
        let (lo, hi) = self.init_depth;
        if lo > hi {
            return err(format!("engine.init_depth is empty: [{lo}, {hi}]"));
        }
        if self.caps.max_nodes == 0 {
            return err("engine.max_nodes must be >= 1".into());
        }
        let t = &self.train;
        for (name, lr) in [("train.lr_node", t.lr_node), ("train.lr_edge", t.lr_edge)] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return err(format!("{name} must be a finite value >= 0, got {lr}"));
            }
        }
        if t.batch_size == Some(0) {
            return err("train.batch_size must be >= 1".into());
        }
        if t.batches_per_epoch == 0 {
            return err("train.batches_per_epoch must be >= 1".into());
        }
        let a = &t.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps.is_nan() || a.eps <= 0.0 {
            return err("train.adam needs beta1, beta2 in [0, 1) and eps > 0".into());
        }
        if !(self.loss.lambda_01 >= 0.0 && self.loss.lambda_01.is_finite()) {
            return err(format!("loss.lambda_01 must be >= 0, got {}", self.loss.lambda_01));
        }
        if !self.init.hot_logit.is_finite() || !self.init.edge_logit.is_finite() {
            return err("init logits must be finite".into());
        }
        self.sample.validate()?;
        self.genetic.validate()
    }
}
