//! Pre-limit polling system with Lévy input and renewal switching, observed
//! on the diffusion scale `n^{-1/2} V(n t)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::Queue;
use crate::par::map_indexed;
use crate::sim::replication_rng;
use crate::sim::{accumulate_paths, Averages, LinearPath, Moments};

use super::rbm::{Estimate, FreeProcess};
use super::subordinator::SubordinatorSpec;
use super::switching::{switching_bm_variance, SwitchLaw};

/// Service rates `μ_j = (λ_j + θ_j / sqrt(n)) / p_j`.
pub fn mu_sequence(sub: &SubordinatorSpec, sw: &SwitchLaw, theta: (f64, f64), n: f64) -> (f64, f64) {
    let r = n.sqrt();
    (
        (sub.rate(Queue::One) + theta.0 / r) / sw.visit_fraction(Queue::One),
        (sub.rate(Queue::Two) + theta.1 / r) / sw.visit_fraction(Queue::Two),
    )
}

/// Brownian limit of the scaled free processes: drift `-θ` and covariance
/// `Σ + σ² m m^T` with `m = (μ1, -μ2)` at the limiting rates `μ_j = λ_j / p_j`.
pub fn limit_process(sub: &SubordinatorSpec, sw: &SwitchLaw, theta: (f64, f64)) -> Result<FreeProcess> {
    sub.validate()?;
    sw.validate()?;
    let s2 = switching_bm_variance(sw);
    let m1 = sub.rate(Queue::One) / sw.visit_fraction(Queue::One);
    let m2 = sub.rate(Queue::Two) / sw.visit_fraction(Queue::Two);
    let c = sub.covariance();
    FreeProcess::new(
        [-theta.0, -theta.1],
        [
            [c[0][0] + s2 * m1 * m1, c[0][1] - s2 * m1 * m2],
            [c[1][0] - s2 * m1 * m2, c[1][1] + s2 * m2 * m2],
        ],
    )
}

/// Factor `p_j / (λ_j σ)` turning scaled workload into the normalised limit.
pub fn hat_scale(sub: &SubordinatorSpec, sw: &SwitchLaw, q: Queue) -> f64 {
    sw.visit_fraction(q) / (sub.rate(q) * switching_bm_variance(sw).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrelimitConfig {
    /// Observed time on the diffusion scale, split across chains.
    pub horizon: f64,
    /// Warmup per chain on the diffusion scale.
    pub warmup: f64,
    pub chains: usize,
    pub seed: u64,
    pub sample_interval: f64,
    pub keep_path: usize,
}

impl PrelimitConfig {
    pub fn new(horizon: f64, warmup: f64, seed: u64) -> Self {
        Self { horizon, warmup, chains: 50, seed, sample_interval: 0.05, keep_path: 0 }
    }

    pub fn validate(&self) -> Result<()> {
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
        Ok(())
    }
}

/// Moments of `n^{-1/2} V` in stationarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrelimitResult {
    pub n: f64,
    pub mu: (f64, f64),
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
    /// `(t, v1, v2)` on the diffusion scale, from chain 0.
    pub path: Vec<(f64, f64, f64)>,
    pub cycles: u64,
    pub jumps: u64,
}

struct Chain {
    moments: Moments,
    path: Vec<(f64, f64, f64)>,
    cycles: u64,
    jumps: u64,
}

fn run_chain(
    sub: &SubordinatorSpec,
    sw: &SwitchLaw,
    n: f64,
    mu: (f64, f64),
    cfg: &PrelimitConfig,
    chain: usize,
) -> Chain {
    let mut rng = replication_rng(cfg.seed, chain as u64);
    let warm = cfg.warmup * n;
    let end = warm + cfg.horizon / cfg.chains as f64 * n;
    let step = cfg.sample_interval * n;
    let root = n.sqrt();
    let keep = if chain == 0 { cfg.keep_path } else { 0 };

    let draw_jump = |rng: &mut _| -> f64 {
        if sub.has_jumps() {
            let e: f64 = Exp1.sample(rng);
            e / sub.jump_rate
        } else {
            f64::INFINITY
        }
    };
    let mut out = Chain { moments: Moments::default(), path: Vec::new(), cycles: 1, jumps: 0 };
    let (mut v1, mut v2) = (0.0f64, 0.0f64);
    let mut serving = Queue::One;
    let (first, mut pending) = sw.sample(&mut rng);
    let mut visit_end = first;
    let mut next_jump = draw_jump(&mut rng);
    let mut next_sample = warm + step;
    let mut t = 0.0f64;

    while t < end {
        let mut stop = visit_end.min(next_jump).min(end);
        if t < warm {
            stop = stop.min(warm);
        } else if out.path.len() < keep {
            stop = stop.min(next_sample);
        }
        let slope = |q: Queue, b: f64, m: f64| if q == serving { b - m } else { b };
        let a = LinearPath::new(v1, slope(Queue::One, sub.drift1, mu.0));
        let b = LinearPath::new(v2, slope(Queue::Two, sub.drift2, mu.1));
        let dt = stop - t;
        if t >= warm {
            accumulate_paths(a, b, dt, &mut out.moments);
        }
        if dt > 0.0 {
            v1 = a.at(dt);
            v2 = b.at(dt);
        }
        t = stop;
        if t >= warm && out.path.len() < keep && t >= next_sample {
            out.path.push(((t - warm) / n, v1 / root, v2 / root));
            next_sample += step;
        }
        if t >= next_jump {
            let (x, y) = sub.jumps.sample(&mut rng);
            v1 += x;
            v2 += y;
            out.jumps += 1;
            next_jump = t + draw_jump(&mut rng);
        }
        if t >= visit_end {
            match serving {
                Queue::One => {
                    serving = Queue::Two;
                    visit_end = t + pending;
                }
                Queue::Two => {
                    let (t1, t2) = sw.sample(&mut rng);
                    pending = t2;
                    serving = Queue::One;
                    visit_end = t + t1;
                    out.cycles += 1;
                }
            }
        }
    }
    out
}

/// Simulates the pre-limit system at scale `n` with service rates `mu`.
pub fn prelimit_simulate(
    sub: &SubordinatorSpec,
    sw: &SwitchLaw,
    n: f64,
    mu: (f64, f64),
    cfg: &PrelimitConfig,
) -> Result<PrelimitResult> {
    sub.validate()?;
    sw.validate()?;
    cfg.validate()?;
    check_positive("n", n)?;
    check_positive("mu1", mu.0)?;
    check_positive("mu2", mu.1)?;
    for (q, m) in [(Queue::One, mu.0), (Queue::Two, mu.1)] {
        if sw.visit_fraction(q) * m <= sub.rate(q) {
            return Err(Error::Unstable(format!(
                "queue {q:?}: capacity {} does not exceed input rate {}",
                sw.visit_fraction(q) * m,
                sub.rate(q)
            )));
        }
    }
    let chains = map_indexed(cfg.chains, |c| run_chain(sub, sw, n, mu, cfg, c));
    let per: Vec<_> = chains.iter().map(|c| c.moments.averages()).collect();
    let col = |f: &dyn Fn(&Averages) -> f64| -> Result<Estimate> {
        let v: Vec<f64> = per.iter().map(f).collect();
        let s = crate::stats::BatchSummary::from_values(&v)?;
        Ok(Estimate { value: s.mean, std_err: s.std_err })
    };
    let (r, nn) = (n.sqrt(), n);
    Ok(PrelimitResult {
        n,
        mu,
        mean1: col(&|a| a.mean_v1 / r)?,
        mean2: col(&|a| a.mean_v2 / r)?,
        second1: col(&|a| a.mean_v1sq / nn)?,
        second2: col(&|a| a.mean_v2sq / nn)?,
        var1: col(&|a| (a.mean_v1sq - a.mean_v1 * a.mean_v1) / nn)?,
        var2: col(&|a| (a.mean_v2sq - a.mean_v2 * a.mean_v2) / nn)?,
        cross: col(&|a| a.mean_v1v2 / nn)?,
        correlation: col(&|a| a.correlation())?,
        frac_zero1: per.iter().map(|a| a.frac_zero1).sum::<f64>() / per.len() as f64,
        frac_zero2: per.iter().map(|a| a.frac_zero2).sum::<f64>() / per.len() as f64,
        path: chains[0].path.clone(),
        cycles: chains.iter().map(|c| c.cycles).sum(),
        jumps: chains.iter().map(|c| c.jumps).sum(),
    })
}

/// Convenience: one random draw of the scaled free-process increment, used
/// to check the limit covariance.
pub fn scaled_free_increment<R: Rng + ?Sized>(
    sub: &SubordinatorSpec,
    sw: &SwitchLaw,
    n: f64,
    mu: (f64, f64),
    t: f64,
    rng: &mut R,
) -> (f64, f64) {
    let horizon = n * t;
    let (j1, j2) = sub.increment(horizon, rng);
    let mut clock = 0.0;
    let mut at_one = 0.0;
    while clock < horizon {
        let (t1, t2) = sw.sample(rng);
        at_one += t1.min(horizon - clock);
        clock += t1 + t2;
    }
    let r = n.sqrt();
    ((j1 - mu.0 * at_one) / r, (j2 - mu.1 * (horizon - at_one)) / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::subordinator::JumpLaw;
    use crate::model::AsymmetricParams;
    use crate::sim::{simulate, SimConfig};

    #[test]
    fn rates_and_limit_covariance() {
        let sub = SubordinatorSpec::new(0.5, 0.5, 1.0, JumpLaw::Shared { mean: 0.5 }).unwrap();
        let sw = SwitchLaw::exponential_rates(1.0, 1.0).unwrap();
        let mu = mu_sequence(&sub, &sw, (2.0, 2.0), 1e4);
        assert!((mu.0 - 2.04).abs() < 1e-12);
        let lim = limit_process(&sub, &sw, (2.0, 2.0)).unwrap();
        let want = [[1.5, -0.5], [-0.5, 1.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((lim.cov[i][j] - want[i][j]).abs() < 1e-14);
            }
        }
        let fluid = SubordinatorSpec::fluid(1.0, 1.0).unwrap();
        assert!((hat_scale(&fluid, &sw, Queue::One) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_increments_match_limit_covariance() {
        let sub = SubordinatorSpec::new(0.5, 0.5, 1.0, JumpLaw::Shared { mean: 0.5 }).unwrap();
        let sw = SwitchLaw::exponential_rates(1.0, 1.0).unwrap();
        let n = 400.0;
        let mu = mu_sequence(&sub, &sw, (2.0, 2.0), n);
        let lim = limit_process(&sub, &sw, (2.0, 2.0)).unwrap();
        let xs: Vec<(f64, f64)> = (0..20_000)
            .map(|k| scaled_free_increment(&sub, &sw, n, mu, 1.0, &mut replication_rng(8, k)))
            .collect();
        let m = xs.len() as f64;
        let (a, b) = xs.iter().fold((0.0, 0.0), |s, x| (s.0 + x.0, s.1 + x.1));
        let (a, b) = (a / m, b / m);
        let c11 = xs.iter().map(|x| (x.0 - a).powi(2)).sum::<f64>() / m;
        let c12 = xs.iter().map(|x| (x.0 - a) * (x.1 - b)).sum::<f64>() / m;
        assert!((a + 2.0).abs() < 0.05 && (b + 2.0).abs() < 0.05, "{a} {b}");
        // Finite-n covariance uses the actual service rates.
        let s2 = switching_bm_variance(&sw);
        let c = sub.covariance();
        assert!((c11 - c[0][0] - s2 * mu.0 * mu.0).abs() < 0.06, "{c11}");
        assert!((c12 - c[0][1] + s2 * mu.0 * mu.1).abs() < 0.06, "{c12}");
        assert!(lim.cov[0][0] < c11);
    }

    #[test]
    fn fluid_subclass_matches_polling_simulator() {
        let sub = SubordinatorSpec::fluid(1.0, 0.6).unwrap();
        let sw = SwitchLaw::exponential_rates(0.5, 2.0).unwrap();
        let mu = (2.5, 4.0);
        let mut cfg = PrelimitConfig::new(40_000.0, 100.0, 21);
        cfg.chains = 40;
        let pre = prelimit_simulate(&sub, &sw, 1.0, mu, &cfg).unwrap();
        let p = AsymmetricParams::new(1.0, 0.6, 2.5, 4.0, 0.5, 2.0).unwrap();
        let sim = simulate(&p, &SimConfig::new(3, 400_000.0, 1000.0, 40).unwrap()).unwrap();
        let z1 = (pre.mean1.value - sim.mean_v1) / pre.mean1.std_err.hypot(sim.std_err.mean_v1);
        let z2 = (pre.mean2.value - sim.mean_v2) / pre.mean2.std_err.hypot(sim.std_err.mean_v2);
        assert!(z1.abs() < 4.0 && z2.abs() < 4.0, "{z1} {z2}");
        let exact = crate::exact::marginal_mean(&p, Queue::One).unwrap();
        assert!(pre.mean1.z_score(exact).abs() < 4.0, "{:?} vs {exact}", pre.mean1);
    }

    #[test]
    fn rejects_unstable_and_records_path() {
        let sub = SubordinatorSpec::fluid(1.0, 1.0).unwrap();
        let sw = SwitchLaw::exponential_rates(1.0, 1.0).unwrap();
        let cfg = PrelimitConfig::new(10.0, 1.0, 0);
        assert!(matches!(
            prelimit_simulate(&sub, &sw, 100.0, (2.0, 2.5), &cfg),
            Err(Error::Unstable(_))
        ));
        let mut cfg = PrelimitConfig::new(20.0, 1.0, 0);
        cfg.chains = 2;
        cfg.keep_path = 30;
        let r = prelimit_simulate(&sub, &sw, 100.0, mu_sequence(&sub, &sw, (1.0, 1.0), 100.0), &cfg).unwrap();
        assert_eq!(r.path.len(), 30);
        assert!(r.path.windows(2).all(|w| w[1].0 > w[0].0));
        assert!(r.path.iter().all(|p| p.1 >= 0.0 && p.2 >= 0.0));
    }
}
