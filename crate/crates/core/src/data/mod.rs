//! Datasets: CSV ingestion, train/test splitting, synthetic benchmarks and
//! target noise.

mod csvio;
mod noise;
mod synthetic;

pub use csvio::{load_csv, read_csv, write_csv};
pub use noise::{add_noise, NoiseSpec, NOISE_GRID};
pub use synthetic::{generate_synthetic, generate_synthetic_trials, synthetic_trial, SyntheticBenchmark, SyntheticSpec};

use crate::expr::SymbolicTree;
use crate::{DgpError, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// Smallest dataset accepted anywhere in the crate.
pub const MIN_ROWS: usize = 4;

/// Default share of rows assigned to the training split.
pub const TRAIN_FRACTION: f64 = 0.75;

/// Paired samples with named variables and a train/test partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    variable_names: Vec<String>,
    target_name: String,
    train: Vec<usize>,
    test: Vec<usize>,
    /// Generating expression, when known.
    pub ground_truth: Option<SymbolicTree>,
}

impl Dataset {
    /// Validates shapes and finiteness. Every row starts in the training split.
    pub fn new(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        variable_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let n = y.len();
        if x.len() != n {
            return Err(DgpError::Data(format!("{} feature rows but {n} targets", x.len())));
        }
        if n < MIN_ROWS {
            return Err(DgpError::Data(format!("need at least {MIN_ROWS} rows, got {n}")));
        }
        let d = variable_names.len();
        if d == 0 {
            return Err(DgpError::Data("dataset has no feature columns".into()));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(DgpError::Data(format!("row {i} has {} features, expected {d}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
                return Err(DgpError::Data(format!("row {i} contains a non-finite value")));
            }
        }
        Ok(Self {
            x,
            y,
            variable_names,
            target_name: target_name.into(),
            train: (0..n).collect(),
            test: Vec::new(),
            ground_truth: None,
        })
    }

    /// Rows `0..n_train` form the training split, the rest the test split.
    pub fn with_ordered_split(mut self, n_train: usize) -> Result<Self> {
        if n_train > self.len() {
            return Err(DgpError::Data(format!("train size {n_train} exceeds {} rows", self.len())));
        }
        self.train = (0..n_train).collect();
        self.test = (n_train..self.len()).collect();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn train_x(&self) -> Vec<Vec<f64>> {
        self.train.iter().map(|&i| self.x[i].clone()).collect()
    }

    pub fn train_y(&self) -> Vec<f64> {
        self.train.iter().map(|&i| self.y[i]).collect()
    }

    pub fn test_x(&self) -> Vec<Vec<f64>> {
        self.test.iter().map(|&i| self.x[i].clone()).collect()
    }

    pub fn test_y(&self) -> Vec<f64> {
        self.test.iter().map(|&i| self.y[i]).collect()
    }

    /// True when every target value is identical.
    pub fn target_is_constant(&self) -> bool {
        self.y.iter().all(|&v| v == self.y[0])
    }

    pub(crate) fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }
}

/// Shuffles row indices and assigns `round(train_fraction * n)` of them to
/// training; both index lists are returned sorted.
pub fn split<R: Rng + ?Sized>(mut ds: Dataset, train_fraction: f64, rng: &mut R) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(DgpError::Config(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let n = ds.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    ds.train = train;
    ds.test = test;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn toy(n: usize) -> Dataset {
        let x = (0..n).map(|i| vec![i as f64]).collect();
        let y = (0..n).map(|i| 2.0 * i as f64).collect();
        Dataset::new(x, y, vec!["a".into()], "y").unwrap()
    }

    #[test]
    fn split_sizes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let ds = split(toy(240), TRAIN_FRACTION, &mut rng).unwrap();
        assert_eq!((ds.train_indices().len(), ds.test_indices().len()), (180, 60));
        let ds = split(toy(4), TRAIN_FRACTION, &mut rng).unwrap();
        assert_eq!((ds.train_indices().len(), ds.test_indices().len()), (3, 1));
    }

    #[test]
    fn split_is_seeded() {
        let a = split(toy(50), 0.75, &mut rand_chacha::ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = split(toy(50), 0.75, &mut rand_chacha::ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_or_ragged() {
        assert!(Dataset::new(vec![vec![1.0]; 3], vec![1.0, 2.0, 3.0], vec!["a".into()], "y").is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0, 2.0]], vec![1.0; 4], vec!["a".into()], "y").is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]; 4], vec![1.0; 4], vec!["a".into()], "y").is_err());
    }

    proptest! {
        #[test]
        fn split_partitions(n in 4usize..300, seed in any::<u64>(), frac in 0.0f64..=1.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ds = split(toy(n), frac, &mut rng).unwrap();
            let mut all: Vec<usize> = ds.train_indices().iter().chain(ds.test_indices()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(ds.train_indices().len(), (frac * n as f64).round() as usize);
        }
    }
}
