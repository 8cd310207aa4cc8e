use anyhow::{Context, Result};
use dgp_core::data::{NoiseSpec, TRAIN_FRACTION};
use dgp_core::{Caps, EngineConfig, GeneticConfig, InitConfig, LossConfig, SampleConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Top-level engine keys; the nested engine configs have their own tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub population_size: usize,
    pub max_evaluations: u64,
    pub early_stop_nrmse: f64,
    pub seed: u64,
    pub epoch_eval_cost: u64,
    pub samples_per_dst: usize,
    pub init_depth: (usize, usize),
    pub caps: Caps,
}

impl Default for EngineSection {
    fn default() -> Self {
        RunConfig::from_engine(EngineConfig::default()).engine
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub train_fraction: f64,
    /// Synthetic samples per split.
    pub points: usize,
    /// Synthetic dataset instances shared by a trial series (1: one per trial).
    pub trials: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            train_fraction: TRAIN_FRACTION,
            points: 20,
            trials: 1,
        }
    }
}

/// The configuration file. Every table is optional and defaults per key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub engine: EngineSection,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub sample: SampleConfig,
    pub genetic: GeneticConfig,
    pub init: InitConfig,
    pub data: DataSection,
    pub noise: NoiseSpec,
}

impl RunConfig {
    pub fn from_engine(e: EngineConfig) -> Self {
        Self {
            engine: EngineSection {
                population_size: e.population_size,
                max_evaluations: e.max_evaluations,
                early_stop_nrmse: e.early_stop_nrmse,
                seed: e.seed,
                epoch_eval_cost: e.epoch_eval_cost,
                samples_per_dst: e.samples_per_dst,
                init_depth: e.init_depth,
                caps: e.caps,
            },
            train: e.train,
            loss: e.loss,
            sample: e.sample,
            genetic: e.genetic,
            init: e.init,
            data: DataSection::default(),
            noise: NoiseSpec::default(),
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        let e = &self.engine;
        EngineConfig {
            population_size: e.population_size,
            max_evaluations: e.max_evaluations,
            early_stop_nrmse: e.early_stop_nrmse,
            seed: e.seed,
            epoch_eval_cost: e.epoch_eval_cost,
            samples_per_dst: e.samples_per_dst,
            init_depth: e.init_depth,
            caps: e.caps,
            train: self.train,
            loss: self.loss,
            sample: self.sample,
            genetic: self.genetic,
            init: self.init,
        }
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.engine_config().validate()?;
        let d = &self.data;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            anyhow::bail!("data.train_fraction must lie in (0, 1), got {}", d.train_fraction);
        }
        if d.points < 2 {
            anyhow::bail!("data.points must be >= 2, got {}", d.points);
        }
        if d.trials == 0 {
            anyhow::bail!("data.trials must be >= 1");
        }
        if !(self.noise.level >= 0.0 && self.noise.level.is_finite()) {
            anyhow::bail!("noise.level must be a finite value >= 0, got {}", self.noise.level);
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.engine.seed = s;
        }
        self
    }
}
