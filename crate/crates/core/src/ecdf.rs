//! Empirical cumulative distribution functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous empirical CDF over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    /// Sorts the sample; non-finite values are rejected.
    pub fn from_samples(mut values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sample",
                value: *bad,
                reason: "ECDF samples must be finite",
            });
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Empirical quantile (lower inverse of the CDF).
    pub fn quantile(&self, p: f64) -> Option<f64> {
        if self.values.is_empty() || !(0.0..=1.0).contains(&p) {
            return None;
        }
        let n = self.values.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        Some(self.values[k - 1])
    }

    /// `(value, cumulative probability)` at each distinct sample value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.values.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = p,
                _ => out.push((v, p)),
            }
        }
        out
    }

    /// At most `points` steps, evenly spread over the sample, for plotting.
    pub fn thinned_steps(&self, points: usize) -> Vec<(f64, f64)> {
        let steps = self.steps();
        if points == 0 || steps.len() <= points {
            return steps;
        }
        let stride = steps.len() as f64 / points as f64;
        let mut out: Vec<(f64, f64)> =
            (0..points).map(|i| steps[(i as f64 * stride) as usize]).collect();
        if out.last() != steps.last() {
            out.push(*steps.last().unwrap());
        }
        out
    }
}
