//! Closed forms for the stationary law of the two-dimensional reflected
//! Brownian motion `V_1 = reflect(-θ1 t - W)`, `V_2 = reflect(-θ2 t + W)`.
//!
//! Queue `j` owns the boundary function `f_hat(j, s)`, evaluated at the
//! transform variable of the *other* queue, and the parabola traced by the
//! kernel roots in that variable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::complex::{c64, principal_sqrt, s_over_cosh_difference, Complex};
use crate::error::{check_positive, Error, Result};
use crate::heavy::{mobius_of_cosh, removable_limit, HTSymmetric, ParabolaGeometry};
use crate::model::Queue;

/// Normalised drifts of the two free processes (unit-variance noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HTDrifts {
    theta1_hat: f64,
    theta2_hat: f64,
}

impl HTDrifts {
    pub fn new(theta1_hat: f64, theta2_hat: f64) -> Result<Self> {
        Ok(Self {
            theta1_hat: check_positive("theta1_hat", theta1_hat)?,
            theta2_hat: check_positive("theta2_hat", theta2_hat)?,
        })
    }

    /// The symmetric fluid regime corresponds to `θ = 4c/mu` for both queues.
    pub fn from_symmetric(h: &HTSymmetric) -> Self {
        let t = 4.0 / h.ratio();
        Self { theta1_hat: t, theta2_hat: t }
    }

    pub fn theta(&self, q: Queue) -> f64 {
        match q {
            Queue::One => self.theta1_hat,
            Queue::Two => self.theta2_hat,
        }
    }

    pub fn sum(&self) -> f64 {
        self.theta1_hat + self.theta2_hat
    }

    pub fn swapped(&self) -> Self {
        Self { theta1_hat: self.theta2_hat, theta2_hat: self.theta1_hat }
    }

    pub fn is_symmetric(&self) -> bool {
        self.theta1_hat == self.theta2_hat
    }

    /// Left edge of the strip on which `f_hat(q, .)` is analytic: the vertex
    /// of the parabola mapped by `levy_conformal(q, .)`.
    pub fn strip_edge(&self, q: Queue) -> f64 {
        let own = self.theta(q);
        let other = self.theta(q.other());
        -other * (2.0 * own + other) / (2.0 * self.sum())
    }
}

/// `θ̂_j = p_j θ_j / (λ_j σ)`.
pub fn hat_drifts(theta: (f64, f64), lambdas: (f64, f64), p1: f64, sigma: f64) -> Result<HTDrifts> {
    check_positive("theta1", theta.0)?;
    check_positive("theta2", theta.1)?;
    check_positive("lambda1", lambdas.0)?;
    check_positive("lambda2", lambdas.1)?;
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p1",
            value: p1,
            reason: "visit fraction must lie in (0, 1)",
        });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: sigma,
            reason: "switching noise must be positive (visit ratio is not constant)",
        });
    }
    HTDrifts::new(p1 * theta.0 / (lambdas.0 * sigma), (1.0 - p1) * theta.1 / (lambdas.1 * sigma))
}

/// `θ1 s1 + θ2 s2 + (s1 - s2)^2 / 2`, the Lévy exponent of the free process.
pub fn levy_ht_kernel(d: &HTDrifts, s1: Complex, s2: Complex) -> Complex {
    let diff = s1 - s2;
    d.theta1_hat * s1 + d.theta2_hat * s2 + 0.5 * diff * diff
}

/// Roots in `s2` of the kernel for given `s1`, minus branch first.
pub fn levy_kernel_roots(d: &HTDrifts, s1: Complex) -> (Complex, Complex) {
    let t2 = d.theta2_hat;
    let w = principal_sqrt(t2 * t2 - 2.0 * s1 * d.sum());
    (s1 - t2 - w, s1 - t2 + w)
}

/// Roots in `s1` for given `s2` (the kernel with the queue roles exchanged).
pub fn levy_kernel_roots_s1(d: &HTDrifts, s2: Complex) -> (Complex, Complex) {
    levy_kernel_roots(&d.swapped(), s2)
}

/// Real `s1` beyond which the `s2` roots are complex.
pub fn levy_branch_point(d: &HTDrifts) -> f64 {
    d.theta2_hat * d.theta2_hat / (2.0 * d.sum())
}

/// Parabola bounding the domain of `f_hat(q, .)`.
pub fn levy_parabola(d: &HTDrifts, q: Queue) -> ParabolaGeometry {
    ParabolaGeometry { vertex_u: d.strip_edge(q), opening: 2.0 * d.sum() }
}

/// Conformal map of the interior of `levy_parabola(q)` onto the unit disc.
pub fn levy_conformal(d: &HTDrifts, q: Queue, z: Complex) -> Result<Complex> {
    let sum = d.sum();
    let t = d.theta(q);
    let arg = PI / (2.0 * sum) * principal_sqrt(2.0 * sum * z - t * t);
    mobius_of_cosh(arg.cosh())
}

/// `levy_conformal(q, 0)` in closed form.
pub fn levy_conformal_at_zero(d: &HTDrifts, q: Queue) -> f64 {
    let c = (PI * d.theta(q) / (2.0 * d.sum())).cos();
    (1.0 - std::f64::consts::SQRT_2 * c) / (1.0 + std::f64::consts::SQRT_2 * c)
}

/// Boundary function without the strip check:
///
/// `f_hat(q, s) = π s sin(π θ_q / Σ) / (cosh((π/Σ) sqrt(2Σ s - θ_q^2)) - cos(π θ_q / Σ))`
///
/// with `Σ = θ1 + θ2`. The removable point `s = 0` is handled by the
/// cosh-difference identity and yields `θ_q`.
pub fn f_hat_unchecked(d: &HTDrifts, q: Queue, s: Complex) -> Complex {
    let sum = d.sum();
    let t = d.theta(q);
    let angle = PI * t / sum;
    let z = (PI / sum).powi(2) * (2.0 * sum * s - t * t);
    let b = c64(0.0, angle);
    let k = 2.0 * PI * PI / sum;
    PI * angle.sin() * s_over_cosh_difference(z, b, k, s)
}

pub fn f_hat(d: &HTDrifts, q: Queue, s: Complex) -> Result<Complex> {
    let edge = d.strip_edge(q);
    if s.re <= edge {
        return Err(Error::Domain(format!(
            "boundary function of queue {q:?}: Re s = {} must exceed {edge}",
            s.re
        )));
    }
    Ok(f_hat_unchecked(d, q, s))
}

fn joint_raw(d: &HTDrifts, s1: Complex, s2: Complex) -> Complex {
    (s1 * f_hat_unchecked(d, Queue::One, s2) + s2 * f_hat_unchecked(d, Queue::Two, s1))
        / levy_ht_kernel(d, s1, s2)
}

/// Joint transform `(s1 f_hat(1, s2) + s2 f_hat(2, s1)) / k(s1, s2)`.
pub fn levy_joint_lst(d: &HTDrifts, s1: Complex, s2: Complex) -> Result<Complex> {
    f_hat(d, Queue::Two, s1)?;
    f_hat(d, Queue::One, s2)?;
    Ok(levy_joint_unchecked(d, s1, s2))
}

pub fn levy_joint_unchecked(d: &HTDrifts, s1: Complex, s2: Complex) -> Complex {
    let zero = c64(0.0, 0.0);
    if s1 == zero && s2 == zero {
        return c64(1.0, 0.0);
    }
    let k = levy_ht_kernel(d, s1, s2);
    let scale = d.sum() * (s1.norm() + s2.norm()) + (s1 - s2).norm_sqr();
    if k.norm() > 1e-9 * scale {
        return joint_raw(d, s1, s2);
    }
    removable_limit(|e| joint_raw(d, s1 + e, s2), (s1.norm() + s2.norm()).max(d.sum()))
}

/// `k * nu - s1 f_hat(1, s2) - s2 f_hat(2, s1)`.
pub fn functional_equation_residual(d: &HTDrifts, s1: Complex, s2: Complex) -> Complex {
    levy_ht_kernel(d, s1, s2) * levy_joint_unchecked(d, s1, s2)
        - s1 * f_hat_unchecked(d, Queue::One, s2)
        - s2 * f_hat_unchecked(d, Queue::Two, s1)
}

/// `Re[i f_hat(1, s2) / s2]` at a kernel root `s2` of a real `s1`.
pub fn boundary_condition_residual(d: &HTDrifts, s2: Complex) -> f64 {
    (c64(0.0, 1.0) * f_hat_unchecked(d, Queue::One, s2) / s2).re
}

/// Poles of `f_hat(q, .)`: zeros of `cosh(x) - cos(π θ_q/Σ)` other than the
/// origin, at `s = (θ_q^2 - (2Σn ± θ_q)^2) / (2Σ)` for `n >= 1`.
pub fn f_hat_poles(d: &HTDrifts, q: Queue, count: usize) -> Vec<f64> {
    let sum = d.sum();
    let t = d.theta(q);
    let mut out = Vec::with_capacity(2 * count);
    for n in 1..=count {
        let base = 2.0 * sum * n as f64;
        for w in [base - t, base + t] {
            out.push((t * t - w * w) / (2.0 * sum));
        }
    }
    out
}

/// Candidate singular points of the form printed with the boundary function:
/// zeros of `1 + sqrt(2) cosh(.)` and of the difference of reciprocals, for
/// `|n| <= count`.
pub fn printed_pole_families(d: &HTDrifts, q: Queue, count: i64) -> (Vec<f64>, Vec<f64>) {
    let sum = d.sum();
    let t = d.theta(q);
    let first = (-count..=count)
        .map(|n| {
            let w = 2.0 * sum * (0.75 + 2.0 * n as f64);
            (t * t - w * w) / (2.0 * sum)
        })
        .collect();
    let second = (-count..=count)
        .filter(|&n| n != 0)
        .map(|n| {
            let w = -t + 4.0 * sum * n as f64;
            (t * t - w * w) / (2.0 * sum)
        })
        .collect();
    (first, second)
}

/// Stationary moments read off the joint transform by finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub second1: f64,
    pub second2: f64,
    pub cross: f64,
}

impl LevyMoments {
    pub fn correlation(&self) -> f64 {
        let v1 = self.second1 - self.mean1 * self.mean1;
        let v2 = self.second2 - self.mean2 * self.mean2;
        (self.cross - self.mean1 * self.mean2) / (v1 * v2).sqrt()
    }
}

pub fn levy_moments(d: &HTDrifts) -> LevyMoments {
    use crate::numdiff::mixed_partial_at_zero;
    let h = 2e-3 * d.theta1_hat.min(d.theta2_hat);
    let nu = |a: f64, b: f64| levy_joint_unchecked(d, c64(a, 0.0), c64(b, 0.0)).re;
    // Marginals are exponential with rate 2θ_j.
    let (m1, m2) = (0.5 / d.theta1_hat, 0.5 / d.theta2_hat);
    LevyMoments {
        mean1: m1,
        mean2: m2,
        second1: 2.0 * m1 * m1,
        second2: 2.0 * m2 * m2,
        cross: mixed_partial_at_zero(nu, h),
    }
}

/// Decay of `f_hat(q, s)` as `θ_q` vanishes with the other drift fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingRecord {
    pub queue: u8,
    pub s: f64,
    pub theta_other: f64,
    pub thetas: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// `|f_hat| / θ_q`, which settles to a constant at leading order.
    pub ratios: Vec<f64>,
    pub monotone: bool,
}

pub fn f_hat_vanishing_limit(theta_other: f64, q: Queue, s: f64) -> Result<VanishingRecord> {
    check_positive("theta_other", theta_other)?;
    let thetas = vec![1e-1, 1e-2, 1e-3, 1e-4];
    let mut magnitudes = Vec::with_capacity(thetas.len());
    for &t in &thetas {
        let d = match q {
            Queue::One => HTDrifts::new(t, theta_other)?,
            Queue::Two => HTDrifts::new(theta_other, t)?,
        };
        magnitudes.push(f_hat(&d, q, c64(s, 0.0))?.norm());
    }
    let ratios = magnitudes.iter().zip(&thetas).map(|(m, t)| m / t).collect();
    let monotone = magnitudes.windows(2).all(|w| w[1] < w[0]);
    Ok(VanishingRecord {
        queue: (q.idx() + 1) as u8,
        s,
        theta_other,
        thetas,
        magnitudes,
        ratios,
        monotone,
    })
}
