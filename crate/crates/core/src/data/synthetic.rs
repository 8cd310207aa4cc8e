use super::{add_noise, Dataset, NoiseSpec};
use crate::seed::derived_rng;
use crate::expr::{evaluate_tree_checked, numeric_equiv, parse_tree, SymbolicTree};
use crate::{DgpError, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The six synthetic benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyntheticBenchmark {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl SyntheticBenchmark {
    pub const ALL: [SyntheticBenchmark; 6] = [Self::S1, Self::S2, Self::S3, Self::S4, Self::S5, Self::S6];

    pub fn n_vars(self) -> usize {
        match self {
            Self::S1 | Self::S2 | Self::S3 => 1,
            Self::S4 | Self::S5 | Self::S6 => 2,
        }
    }

    /// Open sampling interval shared by every variable.
    pub fn range(self) -> (f64, f64) {
        match self {
            Self::S1 | Self::S3 | Self::S5 => (-1.0, 1.0),
            Self::S2 => (0.0, 2.0),
            Self::S4 | Self::S6 => (0.0, 1.0),
        }
    }

    /// Closed-form target.
    pub fn target(self, x: &[f64]) -> f64 {
        let a = x[0];
        match self {
            Self::S1 => (a * a).sin() * a.cos() - 1.0,
            Self::S2 => (a + 1.0).ln() + (a * a + 1.0).ln(),
            Self::S3 => a * a * a + a * a + a + a.sin() + (a * a).sin(),
            Self::S4 => a.sin() + (x[1] * x[1]).sin(),
            Self::S5 => a.powi(4) / (a + x[1]),
            Self::S6 => 4.0 * a.sin() * x[1].cos(),
        }
    }

    /// Constant-free expression tree of the target; `1` is written `x0 / x0`.
    pub fn ground_truth(self) -> SymbolicTree {
        let one = "(/ x0 x0)";
        let text = match self {
            Self::S1 => format!("(- (* (sin (* x0 x0)) (cos x0)) {one})"),
            Self::S2 => format!("(+ (log (+ x0 {one})) (log (+ (* x0 x0) {one})))"),
            Self::S3 => "(+ (+ (+ (+ (* x0 (* x0 x0)) (* x0 x0)) x0) (sin x0)) (sin (* x0 x0)))".to_owned(),
            Self::S4 => "(+ (sin x0) (sin (* x1 x1)))".to_owned(),
            Self::S5 => "(/ (* (* x0 x0) (* x0 x0)) (+ x0 x1))".to_owned(),
            Self::S6 => {
                let t = "(* (sin x0) (cos x1))";
                format!("(+ (+ {t} {t}) (+ {t} {t}))")
            }
        };
        parse_tree(&text).expect("benchmark expressions are well formed")
    }

    /// Per-variable domain used for equivalence checks.
    pub fn domain(self) -> Vec<(f64, f64)> {
        vec![self.range(); self.n_vars()]
    }

    /// Whether `tree` is numerically equivalent to the ground truth over the
    /// benchmark's domain. Deterministic for a given `seed`.
    pub fn is_recovered(self, tree: &SymbolicTree, seed: u64) -> bool {
        numeric_equiv(tree, &self.ground_truth(), &self.domain(), &mut crate::seed::rng(seed))
    }

    /// Whether a sample must be re-drawn: the pole of S5, or any point where
    /// a protected operator would alter the ground-truth tree.
    fn rejects(self, x: &[f64]) -> bool {
        let (lo, _) = self.range();
        if x.contains(&lo) {
            return true;
        }
        if self == Self::S5 && (x[0] + x[1]).abs() < 1e-3 {
            return true;
        }
        let (_, fired) = evaluate_tree_checked(&self.ground_truth(), x);
        fired
    }
}

impl fmt::Display for SyntheticBenchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SyntheticBenchmark {
    type Err = DgpError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| DgpError::Config(format!("unknown benchmark `{s}`, expected S1..S6")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub benchmark: SyntheticBenchmark,
    /// Samples in each of the train and test splits.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Number of independently resampled dataset instances.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_points() -> usize {
    20
}

fn default_trials() -> usize {
    1
}

impl SyntheticSpec {
    pub fn new(benchmark: SyntheticBenchmark) -> Self {
        Self {
            benchmark,
            points: default_points(),
            trials: default_trials(),
        }
    }
}

/// Draws `points` training then `points` test samples uniformly inside the
/// benchmark's open range. The ground-truth tree is attached.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<Dataset> {
    let b = spec.benchmark;
    if spec.points < 2 {
        return Err(DgpError::Config(format!("synthetic points must be >= 2, got {}", spec.points)));
    }
    let (lo, hi) = b.range();
    let n = 2 * spec.points;
    let mut x = Vec::with_capacity(n);
    while x.len() < n {
        let row: Vec<f64> = (0..b.n_vars()).map(|_| rng.random_range(lo..hi)).collect();
        if !b.rejects(&row) {
            x.push(row);
        }
    }
    let y = x.iter().map(|r| b.target(r)).collect();
    let names = (0..b.n_vars()).map(|i| format!("x{i}")).collect();
    let mut ds = Dataset::new(x, y, names, "y")?.with_ordered_split(spec.points)?;
    ds.ground_truth = Some(b.ground_truth());
    Ok(ds)
}

/// `spec.trials` independent instances from one generator stream.
pub fn generate_synthetic_trials<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<Vec<Dataset>> {
    (0..spec.trials.max(1)).map(|_| generate_synthetic(spec, rng)).collect()
}

const STREAM_DATA: u64 = 3;
const STREAM_NOISE: u64 = 4;

/// Dataset of trial `trial` in a seeded series starting at `base_seed`.
///
/// With `spec.trials == 1` every trial draws a fresh instance from its own
/// seed (`base_seed + trial`). With more instances, the `spec.trials`
/// instances are drawn once from the base seed and trial `i` uses instance
/// `i % spec.trials`. Noise always comes from the trial seed, and from a
/// stream separate from the data, so two noise levels share clean targets.
pub fn synthetic_trial(spec: &SyntheticSpec, noise: &NoiseSpec, base_seed: u64, trial: u64) -> Result<Dataset> {
    let seed = base_seed.wrapping_add(trial);
    let ds = if spec.trials > 1 {
        let mut all = generate_synthetic_trials(spec, &mut derived_rng(base_seed, &[STREAM_DATA]))?;
        all.swap_remove((trial % spec.trials as u64) as usize)
    } else {
        generate_synthetic(spec, &mut derived_rng(seed, &[STREAM_DATA]))?
    };
    add_noise(ds, noise, &mut derived_rng(seed, &[STREAM_NOISE]))
}
