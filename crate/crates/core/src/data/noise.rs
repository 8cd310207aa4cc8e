use super::Dataset;
use crate::{DgpError, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Noise levels of the default sweep: 0, 0.01, ..., 0.1.
pub const NOISE_GRID: [f64; 11] = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Noise standard deviation as a multiple of the training-target RMS.
    pub level: f64,
    /// Also perturb test targets.
    pub noise_test_targets: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            level: 0.0,
            noise_test_targets: false,
        }
    }
}

/// Adds `Normal(0, level * RMS(y_train))` noise to the training targets (and
/// the test targets if requested). Features are untouched.
pub fn add_noise<R: Rng + ?Sized>(mut ds: Dataset, spec: &NoiseSpec, rng: &mut R) -> Result<Dataset> {
    if !(spec.level >= 0.0 && spec.level.is_finite()) {
        return Err(DgpError::Config(format!("noise level must be >= 0, got {}", spec.level)));
    }
    if spec.level == 0.0 {
        return Ok(ds);
    }
    let train = ds.train_indices().to_vec();
    if train.is_empty() {
        return Err(DgpError::Data("noise needs a non-empty training split".into()));
    }
    let rms = (train.iter().map(|&i| ds.y()[i].powi(2)).sum::<f64>() / train.len() as f64).sqrt();
    let normal = Normal::new(0.0, spec.level * rms).map_err(|e| DgpError::Config(e.to_string()))?;
    let mut targets = train;
    if spec.noise_test_targets {
        targets.extend_from_slice(ds.test_indices());
    }
    let y = ds.y_mut();
    for i in targets {
        y[i] += normal.sample(rng);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split;
    use rand::SeedableRng;

    fn rng(s: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(s)
    }

    fn ds(n: usize) -> Dataset {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
        let y = x.iter().map(|r| 1.0 + r[0]).collect();
        split(Dataset::new(x, y, vec!["a".into()], "y").unwrap(), 0.75, &mut rng(1)).unwrap()
    }

    #[test]
    fn zero_level_is_identity() {
        let d = ds(40);
        assert_eq!(add_noise(d.clone(), &NoiseSpec::default(), &mut rng(0)).unwrap(), d);
    }

    #[test]
    fn noise_scale_matches_train_rms() {
        let clean = ds(13334);
        let n_train = clean.train_indices().len();
        assert!(n_train >= 10000);
        let rms = (clean.train_y().iter().map(|v| v * v).sum::<f64>() / n_train as f64).sqrt();
        let noisy = add_noise(clean.clone(), &NoiseSpec { level: 0.1, ..Default::default() }, &mut rng(5)).unwrap();
        let eps: Vec<f64> = noisy.train_y().iter().zip(clean.train_y()).map(|(a, b)| a - b).collect();
        let m = eps.iter().sum::<f64>() / eps.len() as f64;
        let sd = (eps.iter().map(|e| (e - m).powi(2)).sum::<f64>() / eps.len() as f64).sqrt();
        assert!((sd / (0.1 * rms) - 1.0).abs() < 0.05, "sd {sd} vs {}", 0.1 * rms);
        assert_eq!(noisy.x(), clean.x());
        assert_eq!(noisy.test_y(), clean.test_y());
    }

    #[test]
    fn seeds_differ_and_are_additive() {
        let clean = ds(100);
        let spec = NoiseSpec { level: 0.05, ..Default::default() };
        let a = add_noise(clean.clone(), &spec, &mut rng(1)).unwrap();
        let b = add_noise(clean.clone(), &spec, &mut rng(2)).unwrap();
        assert_ne!(a.train_y(), b.train_y());
        for (i, &t) in clean.train_indices().iter().enumerate() {
            let e = a.y()[t] - clean.y()[t];
            assert!((a.train_y()[i] - e - clean.y()[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn test_targets_optionally_noised() {
        let clean = ds(100);
        let spec = NoiseSpec { level: 0.05, noise_test_targets: true };
        let a = add_noise(clean.clone(), &spec, &mut rng(1)).unwrap();
        assert_ne!(a.test_y(), clean.test_y());
    }
}
