//! Euler simulation of two-dimensional reflected Brownian motion.
//!
//! Each coordinate is reflected on its own, `V_j <- max(0, V_j + dX_j)`.
//! Independent chains run in parallel and act as batches.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::complex::{c64, Complex};
use crate::error::{check_positive, Error, Result};
use crate::model::Queue;
use crate::par::map_indexed;
use crate::sim::replication_rng;
use crate::stats::BatchSummary;

use super::analytic::HTDrifts;

/// Brownian free process `X(t) = drift t + L B(t)` with `L L^T = cov`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeProcess {
    pub drift: [f64; 2],
    pub cov: [[f64; 2]; 2],
    chol: [[f64; 2]; 2],
}

impl FreeProcess {
    pub fn new(drift: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * (cov[0][0] + cov[1][1]).max(1.0) {
            return Err(Error::InvalidParameter {
                name: "cov",
                value: cov[0][1] - cov[1][0],
                reason: "covariance must be symmetric",
            });
        }
        let chol = psd_cholesky(cov)?;
        if drift.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "drift",
                value: f64::NAN,
                reason: "drift must be finite",
            });
        }
        Ok(Self { drift, cov, chol })
    }

    /// `X1 = -θ1 t - W`, `X2 = -θ2 t + W`.
    pub fn hatted(d: &HTDrifts) -> Self {
        Self {
            drift: [-d.theta(Queue::One), -d.theta(Queue::Two)],
            cov: [[1.0, -1.0], [-1.0, 1.0]],
            chol: [[1.0, 0.0], [-1.0, 0.0]],
        }
    }

    fn single_noise(&self) -> bool {
        self.chol[0][1] == 0.0 && self.chol[1][1] == 0.0
    }

    /// `log E[exp(-s X(1))]`.
    pub fn cumulant(&self, s1: f64, s2: f64) -> f64 {
        let [d1, d2] = self.drift;
        let c = self.cov;
        -(d1 * s1 + d2 * s2) + 0.5 * (c[0][0] * s1 * s1 + 2.0 * c[0][1] * s1 * s2 + c[1][1] * s2 * s2)
    }

    /// Free-process increment over `dt` as `(dX1, dX2)`.
    pub fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> (f64, f64) {
        let sq = dt.sqrt();
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = if self.single_noise() { 0.0 } else { StandardNormal.sample(rng) };
        let l = self.chol;
        (
            self.drift[0] * dt + sq * (l[0][0] * z1 + l[0][1] * z2),
            self.drift[1] * dt + sq * (l[1][0] * z1 + l[1][1] * z2),
        )
    }
}

/// Lower-triangular factor of a 2x2 positive semidefinite matrix.
fn psd_cholesky(c: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let tol = 1e-12 * (c[0][0].abs() + c[1][1].abs()).max(1.0);
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if c[0][0] < -tol || c[1][1] < -tol || det < -tol {
        return Err(Error::InvalidParameter {
            name: "cov",
            value: det,
            reason: "covariance must be positive semidefinite",
        });
    }
    let a = c[0][0].max(0.0).sqrt();
    if a <= tol {
        return Ok([[0.0, 0.0], [0.0, c[1][1].max(0.0).sqrt()]]);
    }
    let b = c[1][0] / a;
    let d = (c[1][1] - b * b).max(0.0).sqrt();
    Ok([[a, 0.0], [b, d]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    /// `max(0, V + dX)`.
    #[default]
    Clamp,
    /// Reflects against the minimum of a Brownian bridge per coordinate,
    /// which is exact for each marginal.
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmConfig {
    pub dt: f64,
    /// Total simulated time after warmup, split across the chains.
    pub horizon: f64,
    /// Warmup per chain.
    pub warmup: f64,
    pub chains: usize,
    pub seed: u64,
    pub reflection: Reflection,
    /// Points `(s1, s2)` at which the empirical transform is estimated.
    pub lst_grid: Vec<(Complex, Complex)>,
    /// Time between samples entering the transform estimate and path dump.
    pub sample_interval: f64,
    /// Number of leading samples kept from chain 0 as a path dump.
    pub keep_path: usize,
}

impl RbmConfig {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            dt,
            horizon,
            warmup: 0.0,
            chains: 50,
            seed,
            reflection: Reflection::Clamp,
            lst_grid: Vec::new(),
            sample_interval: 0.05,
            keep_path: 0,
        }
    }

    /// `dt = 1e-3 / max(θ_j^2, 1)` and a warmup of twenty relaxation times.
    pub fn for_drifts(d: &HTDrifts, horizon: f64, seed: u64) -> Self {
        let t_min = d.theta(Queue::One).min(d.theta(Queue::Two));
        let t_max = d.theta(Queue::One).max(d.theta(Queue::Two));
        let mut cfg = Self::new(1e-3 / (t_max * t_max).max(1.0), horizon, seed);
        cfg.warmup = 20.0 / (t_min * t_min);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("dt", self.dt)?;
        check_positive("horizon", self.horizon)?;
        check_positive("sample_interval", self.sample_interval)?;
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "warmup",
                value: self.warmup,
                reason: "must be finite and nonnegative",
            });
        }
        if self.chains < 2 {
            return Err(Error::InsufficientData("need at least 2 chains".into()));
        }
        if self.horizon / (self.chains as f64) < 10.0 * self.dt {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon,
                reason: "each chain must cover at least ten steps",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    fn from_batches(values: &[f64]) -> Result<Self> {
        let s = BatchSummary::from_values(values)?;
        Ok(Self { value: s.mean, std_err: s.std_err })
    }

    pub fn z_score(&self, target: f64) -> f64 {
        BatchSummary { mean: self.value, std_err: self.std_err, batches: 2 }.z_score(target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstEstimate {
    pub s1: Complex,
    pub s2: Complex,
    pub value: Complex,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmResult {
    pub mean1: Estimate,
    pub mean2: Estimate,
    pub second1: Estimate,
    pub second2: Estimate,
    pub var1: Estimate,
    pub var2: Estimate,
    pub cross: Estimate,
    pub correlation: Estimate,
    pub frac_zero1: f64,
    pub frac_zero2: f64,
    pub lst: Vec<LstEstimate>,
    /// `(t, v1, v2)` from chain 0.
    pub path: Vec<(f64, f64, f64)>,
    pub steps: u64,
    pub chains: usize,
}

#[derive(Debug, Clone, Default)]
struct ChainStats {
    time: f64,
    v1: f64,
    v2: f64,
    v1sq: f64,
    v2sq: f64,
    v1v2: f64,
    zero1: f64,
    zero2: f64,
    lst: Vec<Complex>,
    lst_samples: usize,
    path: Vec<(f64, f64, f64)>,
    steps: u64,
}

impl ChainStats {
    fn mean(&self, x: f64) -> f64 {
        x / self.time
    }
    fn var1(&self) -> f64 {
        self.mean(self.v1sq) - self.mean(self.v1).powi(2)
    }
    fn var2(&self) -> f64 {
        self.mean(self.v2sq) - self.mean(self.v2).powi(2)
    }
    fn cov(&self) -> f64 {
        self.mean(self.v1v2) - self.mean(self.v1) * self.mean(self.v2)
    }
}

/// Minimum over `[0, dt]` of a Brownian bridge from 0 to `dx` with variance
/// rate `var`.
fn bridge_min<R: Rng + ?Sized>(dx: f64, var: f64, dt: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    0.5 * (dx - (dx * dx - 2.0 * var * dt * u.ln()).sqrt())
}

fn reflect<R: Rng + ?Sized>(v: f64, dx: f64, var: f64, dt: f64, mode: Reflection, rng: &mut R) -> f64 {
    match mode {
        Reflection::Clamp => (v + dx).max(0.0),
        Reflection::Bridge => {
            let m = bridge_min(dx, var, dt, rng);
            // V(dt) = V + dx - min(0, V + m).
            v + dx - (v + m).min(0.0)
        }
    }
}

fn run_chain(proc_: &FreeProcess, cfg: &RbmConfig, chain: usize) -> ChainStats {
    let mut rng = replication_rng(cfg.seed, chain as u64);
    let dt = cfg.dt;
    let vars = [proc_.cov[0][0], proc_.cov[1][1]];
    // Start from the marginal means of the symmetric-noise stationary law.
    let start = |k: usize| {
        let d = -proc_.drift[k];
        if d > 0.0 {
            0.5 * vars[k] / d
        } else {
            0.0
        }
    };
    let (mut v1, mut v2) = (start(0), start(1));
    let warm_steps = (cfg.warmup / dt).ceil() as u64;
    for _ in 0..warm_steps {
        let (a, b) = proc_.increment(dt, &mut rng);
        v1 = reflect(v1, a, vars[0], dt, cfg.reflection, &mut rng);
        v2 = reflect(v2, b, vars[1], dt, cfg.reflection, &mut rng);
    }
    let steps = (cfg.horizon / cfg.chains as f64 / dt).ceil() as u64;
    let every = ((cfg.sample_interval / dt).round() as u64).max(1);
    let mut st = ChainStats { lst: vec![c64(0.0, 0.0); cfg.lst_grid.len()], ..Default::default() };
    for k in 0..steps {
        let (a, b) = proc_.increment(dt, &mut rng);
        v1 = reflect(v1, a, vars[0], dt, cfg.reflection, &mut rng);
        v2 = reflect(v2, b, vars[1], dt, cfg.reflection, &mut rng);
        st.v1 += v1;
        st.v2 += v2;
        st.v1sq += v1 * v1;
        st.v2sq += v2 * v2;
        st.v1v2 += v1 * v2;
        st.zero1 += f64::from(u8::from(v1 == 0.0));
        st.zero2 += f64::from(u8::from(v2 == 0.0));
        if k % every == every - 1 {
            for (acc, &(s1, s2)) in st.lst.iter_mut().zip(&cfg.lst_grid) {
                *acc += (-(s1 * v1) - s2 * v2).exp();
            }
            st.lst_samples += 1;
            if chain == 0 && st.path.len() < cfg.keep_path {
                st.path.push(((k + 1) as f64 * dt, v1, v2));
            }
        }
    }
    st.steps = warm_steps + steps;
    st.time = steps as f64;
    for acc in &mut st.lst {
        *acc /= st.lst_samples.max(1) as f64;
    }
    st
}

/// Simulates the reflection of a general Brownian free process.
pub fn rbm_simulate_process(proc_: &FreeProcess, cfg: &RbmConfig) -> Result<RbmResult> {
    cfg.validate()?;
    let chains = map_indexed(cfg.chains, |c| run_chain(proc_, cfg, c));
    let col = |f: &dyn Fn(&ChainStats) -> f64| -> Result<Estimate> {
        let v: Vec<f64> = chains.iter().map(f).collect();
        Estimate::from_batches(&v)
    };
    let lst = cfg
        .lst_grid
        .iter()
        .enumerate()
        .map(|(i, &(s1, s2))| {
            let re: Vec<f64> = chains.iter().map(|c| c.lst[i].re).collect();
            let im: Vec<f64> = chains.iter().map(|c| c.lst[i].im).collect();
            let (r, m) = (BatchSummary::from_values(&re)?, BatchSummary::from_values(&im)?);
            Ok(LstEstimate { s1, s2, value: c64(r.mean, m.mean), std_err: r.std_err.hypot(m.std_err) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RbmResult {
        mean1: col(&|c| c.mean(c.v1))?,
        mean2: col(&|c| c.mean(c.v2))?,
        second1: col(&|c| c.mean(c.v1sq))?,
        second2: col(&|c| c.mean(c.v2sq))?,
        var1: col(&|c| c.var1())?,
        var2: col(&|c| c.var2())?,
        cross: col(&|c| c.mean(c.v1v2))?,
        correlation: col(&|c| c.cov() / (c.var1() * c.var2()).sqrt())?,
        frac_zero1: chains.iter().map(|c| c.mean(c.zero1)).sum::<f64>() / chains.len() as f64,
        frac_zero2: chains.iter().map(|c| c.mean(c.zero2)).sum::<f64>() / chains.len() as f64,
        lst,
        path: chains[0].path.clone(),
        steps: chains.iter().map(|c| c.steps).sum(),
        chains: cfg.chains,
    })
}

/// Simulates the limit process driven by one Wiener stream with opposite signs.
pub fn rbm_simulate(d: &HTDrifts, cfg: &RbmConfig) -> Result<RbmResult> {
    rbm_simulate_process(&FreeProcess::hatted(d), cfg)
}

/// Monte Carlo estimate of `log E[exp(-s X(1))]` from `count` unit-time
/// Euler paths with step `dt`.
pub fn free_process_cumulant_mc(
    proc_: &FreeProcess,
    s1: f64,
    s2: f64,
    dt: f64,
    count: usize,
    seed: u64,
) -> Result<f64> {
    check_positive("dt", dt)?;
    let steps = (1.0 / dt).round().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let vals = map_indexed(count, |k| {
        let mut rng = replication_rng(seed, k as u64);
        let (mut x1, mut x2) = (0.0, 0.0);
        for _ in 0..steps {
            let (a, b) = proc_.increment(h, &mut rng);
            x1 += a;
            x2 += b;
        }
        (-s1 * x1 - s2 * x2).exp()
    });
    Ok((vals.iter().sum::<f64>() / count as f64).ln())
}
