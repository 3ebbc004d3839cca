//! Bivariate compound-Poisson-plus-drift input.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::Queue;
use crate::par::map_indexed;
use crate::sim::replication_rng;
use crate::stats::BatchSummary;

/// Law of one bivariate jump `(J1, J2)`; sizes are exponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    None,
    /// Both coordinates jump, with independent sizes.
    Independent { mean1: f64, mean2: f64 },
    /// Both coordinates jump by the same amount.
    Shared { mean: f64 },
    /// Only one coordinate jumps: queue 1 with probability `prob1`.
    OneOf { mean1: f64, mean2: f64, prob1: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::Independent { mean1, mean2 } => {
                check_positive("jump mean1", mean1)?;
                check_positive("jump mean2", mean2).map(|_| ())
            }
            Self::Shared { mean } => check_positive("jump mean", mean).map(|_| ()),
            Self::OneOf { mean1, mean2, prob1 } => {
                check_positive("jump mean1", mean1)?;
                check_positive("jump mean2", mean2)?;
                if !(0.0..=1.0).contains(&prob1) {
                    return Err(Error::InvalidParameter {
                        name: "prob1",
                        value: prob1,
                        reason: "must be a probability",
                    });
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let e = |rng: &mut R| -> f64 { Exp1.sample(rng) };
        match *self {
            Self::None => (0.0, 0.0),
            Self::Independent { mean1, mean2 } => (mean1 * e(rng), mean2 * e(rng)),
            Self::Shared { mean } => {
                let x = mean * e(rng);
                (x, x)
            }
            Self::OneOf { mean1, mean2, prob1 } => {
                if rng.random::<f64>() < prob1 {
                    (mean1 * e(rng), 0.0)
                } else {
                    (0.0, mean2 * e(rng))
                }
            }
        }
    }

    /// `E[J1]`, `E[J2]`.
    pub fn means(&self) -> (f64, f64) {
        match *self {
            Self::None => (0.0, 0.0),
            Self::Independent { mean1, mean2 } => (mean1, mean2),
            Self::Shared { mean } => (mean, mean),
            Self::OneOf { mean1, mean2, prob1 } => (prob1 * mean1, (1.0 - prob1) * mean2),
        }
    }

    /// `E[J J^T]`.
    pub fn second_moments(&self) -> [[f64; 2]; 2] {
        match *self {
            Self::None => [[0.0; 2]; 2],
            Self::Independent { mean1, mean2 } => {
                [[2.0 * mean1 * mean1, mean1 * mean2], [mean1 * mean2, 2.0 * mean2 * mean2]]
            }
            Self::Shared { mean } => [[2.0 * mean * mean; 2]; 2],
            Self::OneOf { mean1, mean2, prob1 } => {
                [[2.0 * prob1 * mean1 * mean1, 0.0], [0.0, 2.0 * (1.0 - prob1) * mean2 * mean2]]
            }
        }
    }

    /// `E[exp(-s1 J1 - s2 J2)]` for `s1, s2 >= 0`.
    pub fn lst(&self, s1: f64, s2: f64) -> f64 {
        match *self {
            Self::None => 1.0,
            Self::Independent { mean1, mean2 } => 1.0 / ((1.0 + mean1 * s1) * (1.0 + mean2 * s2)),
            Self::Shared { mean } => 1.0 / (1.0 + mean * (s1 + s2)),
            Self::OneOf { mean1, mean2, prob1 } => {
                prob1 / (1.0 + mean1 * s1) + (1.0 - prob1) / (1.0 + mean2 * s2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub drift1: f64,
    pub drift2: f64,
    pub jump_rate: f64,
    pub jumps: JumpLaw,
}

impl SubordinatorSpec {
    pub fn new(drift1: f64, drift2: f64, jump_rate: f64, jumps: JumpLaw) -> Result<Self> {
        let s = Self { drift1, drift2, jump_rate, jumps };
        s.validate()?;
        Ok(s)
    }

    /// Deterministic fluid input at rates `(l1, l2)`.
    pub fn fluid(l1: f64, l2: f64) -> Result<Self> {
        Self::new(l1, l2, 0.0, JumpLaw::None)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("drift1", self.drift1)?;
        check_nonnegative("drift2", self.drift2)?;
        check_nonnegative("jump_rate", self.jump_rate)?;
        self.jumps.validate()?;
        if self.rate(Queue::One) <= 0.0 || self.rate(Queue::Two) <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: self.rate(Queue::One).min(self.rate(Queue::Two)),
                reason: "both mean input rates must be positive",
            });
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        self.jump_rate > 0.0 && self.jumps != JumpLaw::None
    }

    /// Mean input rate `λ_q = b_q + rate E[J_q]`.
    pub fn rate(&self, q: Queue) -> f64 {
        let (m1, m2) = self.jumps.means();
        match q {
            Queue::One => self.drift1 + self.jump_rate * m1,
            Queue::Two => self.drift2 + self.jump_rate * m2,
        }
    }

    /// Covariance matrix per unit time of the input process.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let m = self.jumps.second_moments();
        let r = if self.has_jumps() { self.jump_rate } else { 0.0 };
        [[r * m[0][0], r * m[0][1]], [r * m[1][0], r * m[1][1]]]
    }

    /// `-log E[exp(-s1 J1(1) - s2 J2(1))]` for `s1, s2 >= 0`.
    pub fn laplace_exponent(&self, s1: f64, s2: f64) -> f64 {
        self.drift1 * s1 + self.drift2 * s2 + self.jump_rate * (1.0 - self.jumps.lst(s1, s2))
    }

    /// Input over `[0, t]`: the drift plus a Poisson number of jumps.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> (f64, f64) {
        let (mut a, mut b) = (self.drift1 * t, self.drift2 * t);
        if self.has_jumps() {
            let mut clock: f64 = Exp1.sample(rng);
            clock /= self.jump_rate;
            while clock < t {
                let (x, y) = self.jumps.sample(rng);
                a += x;
                b += y;
                let e: f64 = Exp1.sample(rng);
                clock += e / self.jump_rate;
            }
        }
        (a, b)
    }

    /// Checks the declared rates against `count` increments over `horizon`,
    /// returning the two z-scores.
    pub fn validate_mc(&self, horizon: f64, count: usize, seed: u64) -> Result<(f64, f64)> {
        self.validate()?;
        check_positive("horizon", horizon)?;
        let xs = map_indexed(count, |k| {
            let mut rng = replication_rng(seed, k as u64);
            let (a, b) = self.increment(horizon, &mut rng);
            (a / horizon, b / horizon)
        });
        let a: Vec<f64> = xs.iter().map(|x| x.0).collect();
        let b: Vec<f64> = xs.iter().map(|x| x.1).collect();
        let z1 = BatchSummary::from_values(&a)?.z_score(self.rate(Queue::One));
        let z2 = BatchSummary::from_values(&b)?.z_score(self.rate(Queue::Two));
        Ok((z1, z2))
    }
}
