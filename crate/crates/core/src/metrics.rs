//! Evaluation metrics and multi-trial aggregation.

use crate::grad::{check_target, sanitize};
use crate::{DgpError, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Coefficient of determination over the pairs whose prediction is finite.
pub fn r2(y: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y.len() != y_pred.len() {
        return Err(DgpError::Data(format!("{} targets vs {} predictions", y.len(), y_pred.len())));
    }
    let (ys, ps): (Vec<f64>, Vec<f64>) = y
        .iter()
        .zip(y_pred)
        .filter(|(_, p)| p.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    if ys.len() < 2 {
        return Err(DgpError::DegenerateTarget(format!(
            "r2 needs at least 2 finite predictions, got {}",
            ys.len()
        )));
    }
    check_target(&ys)?;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_res: f64 = ys.iter().zip(&ps).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|a| (a - mean).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root-mean-square error; non-finite predictions count as `1e12`.
pub fn rmse(y: &[f64], y_pred: &[f64]) -> f64 {
    assert_eq!(y.len(), y_pred.len(), "length mismatch");
    assert!(!y.is_empty(), "rmse of an empty sample");
    let mse = y
        .iter()
        .zip(y_pred)
        .map(|(a, b)| (a - sanitize(*b)).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    mse.sqrt()
}

/// Percentage of recovered runs.
pub fn recovery_rate(recovered: &[bool]) -> f64 {
    assert!(!recovered.is_empty(), "recovery rate of zero trials");
    100.0 * recovered.iter().filter(|&&r| r).count() as f64 / recovered.len() as f64
}

/// Outcome of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub test_r2: f64,
    pub test_rmse: f64,
    pub recovered: bool,
    pub program_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Population statistics; `NaN` entries are skipped.
    pub fn of(values: &[f64]) -> Stats {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return Stats {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mid = v.len() / 2;
        let median = if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) };
        Stats {
            mean: mean.clamp(v[0], v[v.len() - 1]),
            std,
            median,
            min: v[0],
            max: v[v.len() - 1],
        }
    }
}

/// Per-seed records (sorted by seed) with their aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: Vec<TrialRecord>,
    pub test_r2: Stats,
    pub test_rmse: Stats,
    pub program_size: Stats,
    pub recovery_rate: f64,
}

pub fn aggregate(trials: &[TrialRecord]) -> TrialSummary {
    assert!(!trials.is_empty(), "aggregate of zero trials");
    let mut sorted = trials.to_vec();
    sorted.sort_by_key(|t| t.seed);
    let col = |f: fn(&TrialRecord) -> f64| Stats::of(&sorted.iter().map(f).collect::<Vec<_>>());
    TrialSummary {
        test_r2: col(|t| t.test_r2),
        test_rmse: col(|t| t.test_rmse),
        program_size: col(|t| t.program_size as f64),
        recovery_rate: recovery_rate(&sorted.iter().map(|t| t.recovered).collect::<Vec<_>>()),
        trials: sorted,
    }
}

/// Header of the aggregate CSV.
pub const AGGREGATE_HEADER: [&str; 12] = [
    "benchmark",
    "method",
    "noise",
    "trials",
    "recovery_rate",
    "r2_mean",
    "r2_std",
    "rmse_mean",
    "rmse_std",
    "rmse_median",
    "size_mean",
    "size_std",
];

/// One aggregate row per (benchmark, method, noise level).
pub fn write_aggregate_csv<W: Write>(w: W, rows: &[(String, String, f64, TrialSummary)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for (bench, method, noise, s) in rows {
        out.write_record(&[
            bench.clone(),
            method.clone(),
            noise.to_string(),
            s.trials.len().to_string(),
            s.recovery_rate.to_string(),
            s.test_r2.mean.to_string(),
            s.test_r2.std.to_string(),
            s.test_rmse.mean.to_string(),
            s.test_rmse.std.to_string(),
            s.test_rmse.median.to_string(),
            s.program_size.mean.to_string(),
            s.program_size.std.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Raw per-seed rows for external significance testing.
pub fn write_trials_csv<W: Write>(w: W, rows: &[(String, String, f64, TrialRecord)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["benchmark", "method", "noise", "seed", "test_r2", "test_rmse", "recovered", "program_size"])?;
    for (bench, method, noise, t) in rows {
        out.write_record(&[
            bench.clone(),
            method.clone(),
            noise.to_string(),
            t.seed.to_string(),
            t.test_r2.to_string(),
            t.test_rmse.to_string(),
            t.recovered.to_string(),
            t.program_size.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
