//! Heavy-traffic limits of the symmetric model (`rho -> 1/2` with workloads
//! scaled by `1/2 - rho`): kernel and parabola, conformal map, transforms of
//! the total and joint workload, the density of the total workload, a sampler
//! built from its infinitely divisible representation, and the moments.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::complex::{c64, principal_sqrt, s_over_cosh_difference, Complex};
use crate::error::{check_positive, Error, Result};
use crate::inversion::{talbot_invert_pdf, LstEvaluator, DEFAULT_NODES};

/// Service and switch-out rate of the symmetric heavy-traffic regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HTSymmetric {
    mu: f64,
    c: f64,
}

impl HTSymmetric {
    pub fn new(mu: f64, c: f64) -> Result<Self> {
        Ok(Self { mu: check_positive("mu", mu)?, c: check_positive("c", c)? })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `mu / c`, the natural workload scale.
    pub fn ratio(&self) -> f64 {
        self.mu / self.c
    }

    /// Left edge `-3c/mu` of the strip where the transforms are analytic.
    pub fn strip_edge(&self) -> f64 {
        -3.0 / self.ratio()
    }

    /// Rate of the `n`-th exponential component, `(c/mu)((2n+1)^2 - 1)`.
    pub fn rate(&self, n: usize) -> f64 {
        let k = 2.0 * n as f64 + 1.0;
        (k * k - 1.0) / self.ratio()
    }

    fn check_strip(&self, s: Complex, what: &str) -> Result<()> {
        if s.re > self.strip_edge() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "{what}: Re s = {} must exceed {}",
                s.re,
                self.strip_edge()
            )))
        }
    }
}

/// Parabola `v^2 = opening * (u - vertex_u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaGeometry {
    pub vertex_u: f64,
    pub opening: f64,
}

impl ParabolaGeometry {
    pub fn residual(&self, u: f64, v: f64) -> f64 {
        v * v - self.opening * (u - self.vertex_u)
    }

    /// Boundary point with imaginary part `v`.
    pub fn point(&self, v: f64) -> Complex {
        c64(self.vertex_u + v * v / self.opening, v)
    }

    pub fn contains(&self, z: Complex) -> bool {
        self.residual(z.re, z.im) < 0.0
    }
}

pub fn parabola(h: &HTSymmetric) -> ParabolaGeometry {
    ParabolaGeometry { vertex_u: h.strip_edge(), opening: 16.0 / h.ratio() }
}

/// `s1 + s2 + (mu/8c)(s1 - s2)^2`.
pub fn ht_kernel(h: &HTSymmetric, s1: Complex, s2: Complex) -> Complex {
    let d = s1 - s2;
    s1 + s2 + d * d * (h.ratio() / 8.0)
}

/// Roots in `s2` of the kernel, minus branch first.
pub fn ht_kernel_roots(h: &HTSymmetric, s1: Complex) -> (Complex, Complex) {
    let q = h.ratio() / 4.0;
    let base = q * s1 - 1.0;
    let w = principal_sqrt(1.0 - h.ratio() * s1);
    ((base - w) / q, (base + w) / q)
}

/// Conformal map of the parabola interior onto the unit disc, with
/// `psi(0) = 0` and `psi(-3c/mu) = 1`.
pub fn conformal_psi(h: &HTSymmetric, z: Complex) -> Result<Complex> {
    let ch = (PI / 4.0 * principal_sqrt(h.ratio() * z - 1.0)).cosh();
    mobius_of_cosh(ch)
}

pub(crate) fn mobius_of_cosh(ch: Complex) -> Result<Complex> {
    if !ch.is_finite() {
        return Ok(c64(-1.0, 0.0));
    }
    let den = 1.0 + SQRT_2 * ch;
    if den.norm() < 1e-300 {
        return Err(Error::Domain("conformal map has a pole here".into()));
    }
    Ok((1.0 - SQRT_2 * ch) / den)
}

/// Transform of the scaled total workload without the strip check; the
/// closed form is meromorphic, which inversion contours rely on.
pub fn total_lst_unchecked(h: &HTSymmetric, s: Complex) -> Complex {
    let g = h.ratio();
    let k = PI * PI / 4.0 * g;
    let z = (PI * PI / 4.0) * (g * s - 1.0);
    // cosh(i pi / 2) = 0, so the denominator is a cosh difference.
    PI / 4.0 * g * s_over_cosh_difference(z, c64(0.0, PI / 2.0), k, s)
}

/// `(pi/4)(mu/c) s / cosh((pi/2) sqrt(mu s / c - 1))`.
pub fn ht_total_lst(h: &HTSymmetric, s: Complex) -> Result<Complex> {
    h.check_strip(s, "total workload transform")?;
    Ok(total_lst_unchecked(h, s))
}

/// Truncated product `prod_{n=1}^{N} a_n / (s + a_n)`.
pub fn ht_total_lst_product(h: &HTSymmetric, s: Complex, n_terms: usize) -> Result<Complex> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter {
            name: "n_terms",
            value: 0.0,
            reason: "need at least one factor",
        });
    }
    let mut acc = c64(1.0, 0.0);
    for n in 1..=n_terms {
        let a = h.rate(n);
        let den = s + a;
        if den == c64(0.0, 0.0) {
            return Err(Error::Domain(format!("product has a pole at s = {}", -a)));
        }
        acc *= a / den;
    }
    Ok(acc)
}

/// Truncated product times `exp(-s * sum_{n>N} 1/a_n)`, the first-order
/// remainder of the omitted factors. The plain product converges like
/// `O(s / N)`; this one like `O(s^2 / N^3)`.
pub fn ht_total_lst_product_with_tail(h: &HTSymmetric, s: Complex, n_terms: usize) -> Result<Complex> {
    Ok(ht_total_lst_product(h, s, n_terms)? * (-s * truncation_bias(h, n_terms)).exp())
}

/// Evaluator for the total workload transform, for numerical inversion.
pub fn total_lst_evaluator(h: &HTSymmetric) -> LstEvaluator {
    let h = *h;
    LstEvaluator::probability(move |s| total_lst_unchecked(&h, s), -8.0 / h.ratio())
        .expect("total workload transform is normalised")
}

/// Below `SMALL_X_FRACTION * mu / c` the alternating series converges slowly
/// and the density is obtained by inversion instead.
pub const SMALL_X_FRACTION: f64 = 0.05;

/// Density of the scaled total workload.
pub fn ht_total_density(h: &HTSymmetric, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("density needs x > 0, got {x}")));
    }
    if x < SMALL_X_FRACTION * h.ratio() {
        return talbot_invert_pdf(&total_lst_evaluator(h), x, DEFAULT_NODES);
    }
    Ok(density_series(h, x))
}

/// The alternating series for the density; accurate for moderate and large `x`.
pub fn density_series(h: &HTSymmetric, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut sign = 1.0;
    for n in 1.. {
        let a = h.rate(n);
        let term = (2 * n + 1) as f64 * a * (-a * x).exp();
        sum += sign * term;
        sign = -sign;
        // Only stop once past the peak of the term magnitudes.
        if a * x > 1.0 && term < 1e-14 * (sum.abs() + 1e-30) {
            break;
        }
        if n > 1_000_000 {
            break;
        }
    }
    sum
}

/// Sum of the means `1/a_n` of the components left out after `n_terms`.
pub fn truncation_bias(h: &HTSymmetric, n_terms: usize) -> f64 {
    h.ratio() / 4.0 / (n_terms as f64 + 1.0)
}

/// `sum_{n=1}^{N} E_n / a_n` with unit exponentials `E_n`.
pub fn ht_total_sampler<R: Rng + ?Sized>(h: &HTSymmetric, rng: &mut R, n_terms: usize) -> f64 {
    (1..=n_terms).map(|n| rng.sample::<f64, _>(Exp1) / h.rate(n)).sum()
}

/// Sampler of the scaled total workload that draws the first components
/// exactly and replaces the remainder by a gamma variable with the same mean
/// and variance, which removes the truncation bias.
#[derive(Debug, Clone)]
pub struct TotalWorkloadSampler {
    inv_rates: Vec<f64>,
    tail: Option<Gamma<f64>>,
}

impl TotalWorkloadSampler {
    pub fn new(h: &HTSymmetric, n_terms: usize, gamma_tail: bool) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::InvalidParameter {
                name: "n_terms",
                value: 0.0,
                reason: "need at least one component",
            });
        }
        let inv_rates: Vec<f64> = (1..=n_terms).map(|n| 1.0 / h.rate(n)).collect();
        let tail = if gamma_tail {
            let mean = truncation_bias(h, n_terms);
            let var = tail_variance(h, n_terms);
            let shape = mean * mean / var;
            Some(Gamma::new(shape, var / mean).map_err(|e| Error::Numerical(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { inv_rates, tail })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let head: f64 = self.inv_rates.iter().map(|w| rng.sample::<f64, _>(Exp1) * w).sum();
        match &self.tail {
            Some(g) => head + g.sample(rng),
            None => head,
        }
    }
}

/// `sum_{n>N} 1/a_n^2`, using the closed form of the full sum.
fn tail_variance(h: &HTSymmetric, n_terms: usize) -> f64 {
    let g = h.ratio();
    let full = g * g / 16.0 * (PI * PI - 9.0) / 3.0;
    let head: f64 = (1..=n_terms).map(|n| h.rate(n).powi(-2)).sum();
    let direct = full - head;
    // Asymptotic tail when cancellation leaves nothing meaningful.
    let asym = g * g / 16.0 / (3.0 * (n_terms as f64 + 0.5).powi(3));
    if direct > 0.5 * asym {
        direct
    } else {
        asym
    }
}

/// Relative size of the shift used at removable kernel zeros.
const REMOVABLE_SHIFT: f64 = 1e-7;

fn joint_raw(h: &HTSymmetric, s1: Complex, s2: Complex) -> Complex {
    (s2 * total_lst_unchecked(h, s1) + s1 * total_lst_unchecked(h, s2)) / ht_kernel(h, s1, s2)
}

/// Joint transform of the scaled workloads,
/// `(s2 T(s1) + s1 T(s2)) / k*(s1, s2)` with `T` the total-workload transform.
pub fn ht_joint_lst(h: &HTSymmetric, s1: Complex, s2: Complex) -> Result<Complex> {
    h.check_strip(s1, "joint transform, first argument")?;
    h.check_strip(s2, "joint transform, second argument")?;
    Ok(joint_unchecked(h, s1, s2))
}

pub(crate) fn joint_unchecked(h: &HTSymmetric, s1: Complex, s2: Complex) -> Complex {
    let zero = c64(0.0, 0.0);
    if s1 == zero && s2 == zero {
        return c64(1.0, 0.0);
    }
    let k = ht_kernel(h, s1, s2);
    let scale = s1.norm() + s2.norm() + h.ratio() * (s1 - s2).norm_sqr();
    if k.norm() > 1e-9 * scale {
        return joint_raw(h, s1, s2);
    }
    removable_limit(|e| joint_raw(h, s1 + e, s2), (s1.norm() + s2.norm()).max(1.0 / h.ratio()))
}

/// Richardson-refined central average around a removable point.
pub(crate) fn removable_limit<F: Fn(Complex) -> Complex>(f: F, scale: f64) -> Complex {
    let eps = REMOVABLE_SHIFT * scale;
    let avg = |e: f64| 0.5 * (f(c64(e, 0.0)) + f(c64(-e, 0.0)));
    (4.0 * avg(eps / 2.0) - avg(eps)) / 3.0
}

/// Moments of the scaled stationary workloads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtMoments {
    pub mean: f64,
    pub second: f64,
    pub cross: f64,
    pub correlation: f64,
}

pub fn ht_moments(h: &HTSymmetric) -> HtMoments {
    let g = h.ratio();
    HtMoments {
        mean: g / 8.0,
        second: g * g / 32.0,
        cross: g * g / 32.0 * (PI * PI - 9.0) / 3.0,
        correlation: 2.0 * PI * PI / 3.0 - 7.0,
    }
}

/// Mean and variance of the scaled total workload.
pub fn total_mean_variance(h: &HTSymmetric) -> (f64, f64) {
    let g = h.ratio();
    (g / 4.0, g * g / 16.0 * (PI * PI - 9.0) / 3.0)
}

/// Poles `(c/mu)(1 - (2n+1)^2)`, `n = 1..=count`, of the total-workload transform.
pub fn total_lst_poles(h: &HTSymmetric, count: usize) -> Vec<f64> {
    (1..=count).map(|n| -h.rate(n)).collect()
}

/// Density of the hitting time of `{-1, 1}` by a standard Brownian motion
/// started at zero, whose transform is `1 / cosh(sqrt(2 s))`.
pub fn biane_density_c(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!("density needs x > 0, got {x}")));
    }
    let crossover = 4.0 / (PI * PI);
    let mut sum = 0.0;
    if x >= crossover {
        for n in 0..200 {
            let k = n as f64 + 0.5;
            let term = k * (-k * k * PI * PI * x / 2.0).exp();
            sum += if n % 2 == 0 { term } else { -term };
            if term < 1e-17 * sum.abs() {
                break;
            }
        }
        Ok(PI * sum)
    } else {
        for n in 0..200 {
            let k = 2.0 * n as f64 + 1.0;
            let term = k * (-k * k / (2.0 * x)).exp();
            sum += if n % 2 == 0 { term } else { -term };
            if term < 1e-17 * sum.abs() || term == 0.0 {
                break;
            }
        }
        Ok((2.0 / (PI * x.powi(3))).sqrt() * sum)
    }
}
