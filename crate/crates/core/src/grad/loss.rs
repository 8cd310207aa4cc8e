use crate::dst::{forward_batch, DiffSymbolicTree};
use crate::{DgpError, Result};
use serde::{Deserialize, Serialize};

/// Replacement for non-finite predictions in error metrics.
pub const NONFINITE_SENTINEL: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Weight of the 0-1 penalty.
    pub lambda_01: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda_01: 0.1 }
    }
}

/// Components of the training loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub nrmse: f64,
    pub loss01: f64,
    pub total: f64,
}

/// Population standard deviation (divisor n).
pub fn population_std(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub(crate) fn check_target(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(DgpError::DegenerateTarget(format!(
            "need at least 2 samples, got {}",
            y.len()
        )));
    }
    let sigma = population_std(y);
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(DgpError::DegenerateTarget(
            "target has zero variance".into(),
        ));
    }
    Ok(sigma)
}

#[inline]
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        NONFINITE_SENTINEL
    }
}

/// RMSE normalized by the population standard deviation of `y`.
/// Non-finite predictions are replaced by `1e12`.
pub fn nrmse(y: &[f64], y_pred: &[f64]) -> Result<f64> {
    assert_eq!(y.len(), y_pred.len(), "length mismatch");
    let sigma = check_target(y)?;
    let mse = y
        .iter()
        .zip(y_pred)
        .map(|(a, b)| (a - sanitize(*b)).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt() / sigma)
}

/// Mean over rows of `-(1/L) Σ_j (w_j - 0.5)^2` for row-major weights.
pub fn loss_01(weights: &[f64], cols: usize) -> f64 {
    let rows = weights.len() / cols;
    let total: f64 = weights
        .chunks(cols)
        .map(|row| -row.iter().map(|w| (w - 0.5).powi(2)).sum::<f64>() / cols as f64)
        .sum();
    total / rows as f64
}

/// NRMSE of the relaxed tree on a batch plus `lambda_01 * loss_01`.
pub fn total_loss(
    dst: &DiffSymbolicTree,
    xs: &[&[f64]],
    ys: &[f64],
    cfg: &LossConfig,
) -> Result<LossParts> {
    if xs.is_empty() {
        return Err(DgpError::Data("empty batch".into()));
    }
    let pred = forward_batch(dst, xs.iter().copied());
    let n = nrmse(ys, &pred)?;
    let l01 = loss_01(&dst.node_matrix.weights(), dst.primitive_set.len());
    Ok(LossParts {
        nrmse: n,
        loss01: l01,
        total: n + cfg.lambda_01 * l01,
    })
}
