//! Transform-domain objects of the exact (pre-limit) model: the marginal
//! workload transform, the kernel of the two-dimensional functional equation,
//! its roots and branch points, and the ellipse on which the boundary value
//! problem lives.

use serde::{Deserialize, Serialize};

use crate::complex::{c64, principal_sqrt, Complex};
use crate::error::{Error, Result};
use crate::model::{AsymmetricParams, Queue, SymmetricParams};

/// Stationary marginal law of one queue: an atom at zero mixed with an
/// exponential, with transform `(1 + a s) / (1 + b s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalLaw {
    pub a: f64,
    pub b: f64,
}

impl MarginalLaw {
    pub fn new(p: &AsymmetricParams, q: Queue) -> Result<Self> {
        let (m1, m2) = p.margins();
        let margin = if q == Queue::One { m1 } else { m2 };
        if margin <= 0.0 {
            return Err(Error::Unstable(format!("queue {:?} has margin {margin}", q)));
        }
        let rho = p.rho(q);
        let own = p.c(q);
        let other = p.c(q.other());
        let work = rho * p.mu(q);
        let a = work / (own + other);
        let denom = other * (1.0 - (own / other) * rho / (1.0 - rho));
        if denom <= 0.0 {
            return Err(Error::Unstable(format!("queue {:?}: nonpositive denominator", q)));
        }
        Ok(Self { a, b: work / denom })
    }

    pub fn lst(&self, s: Complex) -> Complex {
        (1.0 + self.a * s) / (1.0 + self.b * s)
    }

    pub fn mean(&self) -> f64 {
        self.b - self.a
    }

    /// Probability of an empty queue; exactly one when there is no input.
    pub fn atom(&self) -> f64 {
        if self.b == 0.0 {
            1.0
        } else {
            self.a / self.b
        }
    }

    /// Rate of the exponential whose addition turns the law into `Exp(rate_sum)`.
    pub fn rate_added(&self) -> f64 {
        1.0 / self.a
    }

    /// Rate of the exponential obtained after adding `Exp(rate_added)`; it is
    /// also the rate of the non-atomic part.
    pub fn rate_sum(&self) -> f64 {
        1.0 / self.b
    }
}

pub fn marginal_lst(p: &AsymmetricParams, q: Queue, s: Complex) -> Result<Complex> {
    Ok(MarginalLaw::new(p, q)?.lst(s))
}

pub fn marginal_mean(p: &AsymmetricParams, q: Queue) -> Result<f64> {
    Ok(MarginalLaw::new(p, q)?.mean())
}

pub fn marginal_atom(p: &AsymmetricParams, q: Queue) -> Result<f64> {
    Ok(MarginalLaw::new(p, q)?.atom())
}

/// Mean of the exponential limit of `margin_q * V_q` as the margin vanishes.
pub fn ht_marginal_limit_mean(p: &AsymmetricParams, q: Queue) -> f64 {
    let (c1, c2) = (p.c(Queue::One), p.c(Queue::Two));
    c1 * c2 * p.mu(q) / (c1 + c2).powi(3)
}

/// `s1 lambda + c + s2 (lambda - mu)`.
pub fn f_bilinear(p: &SymmetricParams, s1: Complex, s2: Complex) -> Complex {
    s1 * p.lambda() + p.c() + s2 * (p.lambda() - p.mu())
}

pub fn kernel(p: &SymmetricParams, s1: Complex, s2: Complex) -> Complex {
    f_bilinear(p, s1, s2) * f_bilinear(p, s2, s1) - p.c() * p.c()
}

/// Magnitude of the individual terms of the kernel, for relative tolerances.
pub fn kernel_scale(p: &SymmetricParams, s1: Complex, s2: Complex) -> f64 {
    let rate = p.lambda() + p.mu();
    let t = p.c() + rate * (s1.norm() + s2.norm());
    t * t
}

/// Discriminant of the kernel equation in `s2`, normalised so that
/// `B^2 - 4 A C = ((mu - 2 lambda) mu)^2 * discriminant(s1)`.
pub fn discriminant(p: &SymmetricParams, s1: Complex) -> Complex {
    let g = p.c() / p.mu();
    s1 * s1 - s1 * (g / p.ht_scale()) + g * g
}

/// The two roots in `s2` of `kernel(s1, s2) = 0`, the one with the minus sign
/// in front of the principal square root first.
pub fn kernel_roots_s2(p: &SymmetricParams, s1: Complex) -> Result<(Complex, Complex)> {
    let (lam, mu, c) = (p.lambda(), p.mu(), p.c());
    if lam >= mu || lam == 0.0 {
        return Err(Error::Domain(format!(
            "kernel roots need 0 < lambda < mu, got lambda = {lam}, mu = {mu}"
        )));
    }
    let a = lam * (lam - mu);
    let b = c * (2.0 * lam - mu) + ((lam - mu).powi(2) + lam * lam) * s1;
    let delta = discriminant(p, s1);
    let g = c / mu;
    let scale = s1.norm_sqr().max(g * g);
    if delta.norm() < 1e-14 * scale {
        let mid = -b / (2.0 * a);
        return Ok((mid, mid));
    }
    let w = (mu - 2.0 * lam) * mu * principal_sqrt(delta);
    Ok(((-b - w) / (2.0 * a), (-b + w) / (2.0 * a)))
}

/// The two real zeros of the discriminant, ascending.
pub fn branch_points(p: &SymmetricParams) -> Result<(f64, f64)> {
    require_stable_interior(p)?;
    let h = p.ht_scale();
    let g = p.c() / p.mu();
    let root = (1.0 - 4.0 * h * h).sqrt();
    Ok((g * (1.0 - root) / (2.0 * h), g * (1.0 + root) / (2.0 * h)))
}

fn require_stable_interior(p: &SymmetricParams) -> Result<()> {
    let rho = p.rho();
    if rho > 0.0 && rho < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("need 0 < lambda < mu/2, got rho = {rho}")))
    }
}

/// Constants of the ellipse `v^2 + (u kappa - tau)^2 / xi^2 = r^2` traced by
/// the complex kernel roots for `s1` between the branch points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseGeometry {
    pub kappa: f64,
    pub tau: f64,
    pub xi: f64,
    pub r_sq: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl EllipseGeometry {
    pub fn residual(&self, u: f64, v: f64) -> f64 {
        v * v + (u * self.kappa - self.tau).powi(2) / (self.xi * self.xi) - self.r_sq
    }

    /// Boundary point at angle `phi`.
    pub fn point(&self, phi: f64) -> (f64, f64) {
        let r = self.r_sq.sqrt();
        ((self.tau + r * self.xi * phi.cos()) / self.kappa, r * phi.sin())
    }
}

pub fn ellipse_geometry(p: &SymmetricParams) -> Result<EllipseGeometry> {
    require_stable_interior(p)?;
    let (lam, mu, c) = (p.lambda(), p.mu(), p.c());
    let kappa = mu * (mu - 2.0 * lam);
    let tau = c * mu;
    let xi = 2.0 * lam * lam - 2.0 * lam * mu + mu * mu;
    let num = mu * mu * lam * (mu - lam) + (mu - 2.0 * lam).powi(2) * (lam * lam - lam * mu + mu * mu);
    let r_sq = c * c * num / (lam * (mu - lam) * xi * xi);
    let half = r_sq.sqrt() * xi;
    Ok(EllipseGeometry {
        kappa,
        tau,
        xi,
        r_sq,
        u_min: (tau - half) / kappa,
        u_max: (tau + half) / kappa,
    })
}

/// The `s1` whose kernel roots have real part `u`.
pub fn s1_from_u(p: &SymmetricParams, u: f64) -> f64 {
    let (lam, mu, c) = (p.lambda(), p.mu(), p.c());
    (c * (mu - 2.0 * lam) + 2.0 * lam * u * (mu - lam)) / (2.0 * lam * lam + mu * (mu - 2.0 * lam))
}

/// Real and imaginary parts of `-i f(s2, s1) / (c s2)` at `s2 = u + i v` on
/// the ellipse, with `s1` recovered from `u`.
pub fn boundary_ab(p: &SymmetricParams, u: f64, v: f64) -> Result<(f64, f64)> {
    let norm = u * u + v * v;
    if norm == 0.0 {
        return Err(Error::Domain("boundary data is singular at s2 = 0".into()));
    }
    let (lam, mu, c) = (p.lambda(), p.mu(), p.c());
    let xi = 2.0 * lam * lam - 2.0 * lam * mu + mu * mu;
    let den = c * xi * norm;
    let a = lam * v * (2.0 * u * (lam - mu).powi(2) - c * mu) / den;
    let b = -lam * (mu * u * (c + 2.0 * lam * u - mu * u) + v * v * xi) / den;
    Ok((a, b))
}

/// Direct complex evaluation of `-i f(s2, s1) / (c s2)`.
pub fn boundary_value(p: &SymmetricParams, s1: Complex, s2: Complex) -> Complex {
    -c64(0.0, 1.0) * f_bilinear(p, s2, s1) / (p.c() * s2)
}
