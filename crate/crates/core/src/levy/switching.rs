//! Alternating-renewal switching laws: the server visits queue 1 for `T1`,
//! then queue 2 for `T2`, with `(T1, T2)` i.i.d. across cycles.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::Queue;
use crate::par::map_indexed;
use crate::sim::replication_rng;
use crate::stats::BatchSummary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwitchLaw {
    /// Independent exponentials; the fluid model's switching.
    Exponential { mean1: f64, mean2: f64 },
    Deterministic { mean1: f64, mean2: f64 },
    /// Independent gammas with the given shapes.
    Gamma { mean1: f64, mean2: f64, shape1: f64, shape2: f64 },
    /// `T1 = mean1 E`, `T2 = mean2 E` for one unit exponential `E`.
    CommonShock { mean1: f64, mean2: f64 },
    /// `T1 = -mean1 ln U`, `T2 = -mean2 ln(1 - U)`.
    Antithetic { mean1: f64, mean2: f64 },
}

impl SwitchLaw {
    pub fn exponential_rates(c1: f64, c2: f64) -> Result<Self> {
        let law = Self::Exponential {
            mean1: 1.0 / check_positive("c1", c1)?,
            mean2: 1.0 / check_positive("c2", c2)?,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let (m1, m2) = self.means();
        check_positive("mean1", m1)?;
        check_positive("mean2", m2)?;
        if !(m1.is_finite() && m2.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mean",
                value: f64::INFINITY,
                reason: "switching means must be finite",
            });
        }
        if let Self::Gamma { shape1, shape2, .. } = *self {
            check_positive("shape1", shape1)?;
            check_positive("shape2", shape2)?;
        }
        Ok(())
    }

    pub fn means(&self) -> (f64, f64) {
        match *self {
            Self::Exponential { mean1, mean2 }
            | Self::Deterministic { mean1, mean2 }
            | Self::Gamma { mean1, mean2, .. }
            | Self::CommonShock { mean1, mean2 }
            | Self::Antithetic { mean1, mean2 } => (mean1, mean2),
        }
    }

    pub fn mean(&self, q: Queue) -> f64 {
        let (a, b) = self.means();
        match q {
            Queue::One => a,
            Queue::Two => b,
        }
    }

    pub fn rate(&self, q: Queue) -> f64 {
        1.0 / self.mean(q)
    }

    pub fn var(&self, q: Queue) -> f64 {
        let m = self.mean(q);
        match *self {
            Self::Deterministic { .. } => 0.0,
            Self::Gamma { shape1, shape2, .. } => {
                let k = if q == Queue::One { shape1 } else { shape2 };
                m * m / k
            }
            _ => m * m,
        }
    }

    pub fn cov(&self) -> f64 {
        let (m1, m2) = self.means();
        match *self {
            Self::CommonShock { .. } => m1 * m2,
            Self::Antithetic { .. } => m1 * m2 * (1.0 - std::f64::consts::PI.powi(2) / 6.0),
            _ => 0.0,
        }
    }

    /// Long-run fraction of time at queue `q`.
    pub fn visit_fraction(&self, q: Queue) -> f64 {
        let (m1, m2) = self.means();
        self.mean(q) / (m1 + m2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match *self {
            Self::Exponential { mean1, mean2 } => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                (mean1 * a, mean2 * b)
            }
            Self::Deterministic { mean1, mean2 } => (mean1, mean2),
            Self::Gamma { mean1, mean2, shape1, shape2 } => {
                let g1 = Gamma::new(shape1, mean1 / shape1).expect("validated shape");
                let g2 = Gamma::new(shape2, mean2 / shape2).expect("validated shape");
                (g1.sample(rng), g2.sample(rng))
            }
            Self::CommonShock { mean1, mean2 } => {
                let e: f64 = Exp1.sample(rng);
                (mean1 * e, mean2 * e)
            }
            Self::Antithetic { mean1, mean2 } => {
                let u: f64 = Open01.sample(rng);
                (-mean1 * u.ln(), -mean2 * (-u).ln_1p())
            }
        }
    }

    /// Checks declared means, variances and covariance against `samples`
    /// draws, each within `z_max` batch standard errors.
    pub fn validate_mc(&self, samples: usize, seed: u64, z_max: f64) -> Result<MomentCheck> {
        self.validate()?;
        const BATCHES: usize = 40;
        if samples < 10 * BATCHES {
            return Err(Error::InsufficientData(format!(
                "need at least {} samples, got {samples}",
                10 * BATCHES
            )));
        }
        let per = samples / BATCHES;
        let law = *self;
        let rows: Vec<[f64; 5]> = map_indexed(BATCHES, |b| {
            let mut rng = replication_rng(seed, b as u64);
            let mut s = [0.0; 5];
            let draws: Vec<(f64, f64)> = (0..per).map(|_| law.sample(&mut rng)).collect();
            let n = per as f64;
            let m1 = draws.iter().map(|d| d.0).sum::<f64>() / n;
            let m2 = draws.iter().map(|d| d.1).sum::<f64>() / n;
            s[0] = m1;
            s[1] = m2;
            for &(a, b) in &draws {
                s[2] += (a - m1).powi(2);
                s[3] += (b - m2).powi(2);
                s[4] += (a - m1) * (b - m2);
            }
            for v in &mut s[2..] {
                *v /= n - 1.0;
            }
            s
        });
        let declared = [
            self.mean(Queue::One),
            self.mean(Queue::Two),
            self.var(Queue::One),
            self.var(Queue::Two),
            self.cov(),
        ];
        let mut z = [0.0; 5];
        for (k, zk) in z.iter_mut().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let summary = BatchSummary::from_values(&col)?;
            // Degenerate laws reproduce their moments up to rounding.
            let rounding = 1e-12 * declared[k].abs().max(1.0);
            *zk = if summary.std_err <= rounding && (summary.mean - declared[k]).abs() <= rounding {
                0.0
            } else {
                summary.z_score(declared[k])
            };
        }
        let passed = z.iter().all(|v| v.abs() <= z_max);
        Ok(MomentCheck { declared, z_scores: z, passed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    /// `[mean1, mean2, var1, var2, cov]`.
    pub declared: [f64; 5],
    pub z_scores: [f64; 5],
    pub passed: bool,
}

/// Diffusion constant of `∫(I - p1)`:
/// `c1 c2 (c1² σ1² - 2 c1 c2 ζ + c2² σ2²) / (c1 + c2)³`.
pub fn switching_bm_variance(sw: &SwitchLaw) -> f64 {
    let (c1, c2) = (sw.rate(Queue::One), sw.rate(Queue::Two));
    let inner = c1 * c1 * sw.var(Queue::One) - 2.0 * c1 * c2 * sw.cov() + c2 * c2 * sw.var(Queue::Two);
    (c1 * c2 * inner / (c1 + c2).powi(3)).max(0.0)
}

/// Monte Carlo estimate of `Var(∫_0^t (I(u) - p1) du) / t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub replications: usize,
    pub horizon: f64,
}

impl VarianceEstimate {
    pub fn z_score(&self, target: f64) -> f64 {
        BatchSummary { mean: self.estimate, std_err: self.std_err, batches: self.replications }
            .z_score(target)
    }
}

fn centred_visit_integral<R: Rng + ?Sized>(sw: &SwitchLaw, horizon: f64, rng: &mut R) -> f64 {
    let p1 = sw.visit_fraction(Queue::One);
    let mut clock = 0.0;
    let mut at_one = 0.0;
    while clock < horizon {
        let (t1, t2) = sw.sample(rng);
        let d1 = t1.min(horizon - clock);
        at_one += d1;
        clock += t1 + t2;
    }
    at_one - p1 * horizon
}

pub fn switching_variance_mc(
    sw: &SwitchLaw,
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    sw.validate()?;
    check_positive("horizon", horizon)?;
    if replications < 2 {
        return Err(Error::InsufficientData("need at least 2 replications".into()));
    }
    let xs = map_indexed(replications, |r| {
        let mut rng = replication_rng(seed, r as u64);
        centred_visit_integral(sw, horizon, &mut rng)
    });
    let n = replications as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = dev.iter().sum::<f64>() / (n - 1.0);
    // Standard error of the sample variance from the fourth central moment.
    let m4 = dev.iter().map(|d| d * d).sum::<f64>() / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    Ok(VarianceEstimate {
        estimate: var / horizon,
        std_err: se / horizon,
        replications,
        horizon,
    })
}
