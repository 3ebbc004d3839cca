//! Batch-means summaries and normal-approximation confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Mean and standard error of a set of (approximately independent) batch values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub mean: f64,
    pub std_err: f64,
    pub batches: usize,
}

impl BatchSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 batches, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, std_err: (var / n).sqrt(), batches: values.len() })
    }

    /// Number of standard errors separating the batch mean from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_err == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.std_err
        }
    }
}

/// Two-sided standard normal quantile for a confidence `level` in (0, 1).
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            value: level,
            reason: "confidence level must lie in (0, 1)",
        });
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(0.5 + level / 2.0))
}

/// Symmetric normal-approximation interval around the mean of `batch_values`.
pub fn batch_ci(batch_values: &[f64], level: f64) -> Result<(f64, f64)> {
    let s = BatchSummary::from_values(batch_values)?;
    let half = normal_quantile(level)? * s.std_err;
    Ok((s.mean - half, s.mean + half))
}
