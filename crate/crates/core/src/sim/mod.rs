//! Exact event-driven simulation of the fluid polling model.
//!
//! Between switching epochs every workload is linear (floored at zero for the
//! served queue), so all time averages are integrated in closed form.

mod segment;

pub use segment::{accumulate_paths, fluid_paths, segment_accumulate, Averages, LinearPath, Moments};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::ecdf::Ecdf;
use crate::error::{check_nonnegative, check_positive, Error, Result};
use crate::model::{AsymmetricParams, Queue, WorkloadState};
use crate::par;
use crate::stats::{batch_ci, BatchSummary};

/// Generator for replication `stream` of the run seeded by `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Where the server starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialServer {
    /// Queue 1 with its long-run visit fraction `c2 / (c1 + c2)`.
    Stationary,
    Fixed(Queue),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub total_time: f64,
    pub warmup_time: f64,
    pub batch_count: usize,
    /// Sampling interval for the scaled total workload; `None` disables the ECDF.
    pub ecdf_interval: Option<f64>,
    pub initial: InitialServer,
    pub level: f64,
}

impl SimConfig {
    pub fn new(seed: u64, total_time: f64, warmup_time: f64, batch_count: usize) -> Result<Self> {
        let cfg = Self {
            seed,
            total_time,
            warmup_time,
            batch_count,
            ecdf_interval: Some(1.0),
            initial: InitialServer::Stationary,
            level: 0.95,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_ecdf_interval(mut self, interval: Option<f64>) -> Result<Self> {
        self.ecdf_interval = interval;
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial(mut self, initial: InitialServer) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("total_time", self.total_time)?;
        check_nonnegative("warmup_time", self.warmup_time)?;
        if self.warmup_time >= self.total_time {
            return Err(Error::InvalidParameter {
                name: "warmup_time",
                value: self.warmup_time,
                reason: "must be smaller than total_time",
            });
        }
        if self.batch_count < 2 {
            return Err(Error::InvalidParameter {
                name: "batch_count",
                value: self.batch_count as f64,
                reason: "at least 2 batches are needed for a confidence interval",
            });
        }
        if let Some(dt) = self.ecdf_interval {
            check_positive("ecdf_interval", dt)?;
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter {
                name: "level",
                value: self.level,
                reason: "confidence level must lie in (0, 1)",
            });
        }
        Ok(())
    }

    fn batch_len(&self) -> f64 {
        (self.total_time - self.warmup_time) / self.batch_count as f64
    }
}

/// Batch standard errors of the headline statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub mean_v1: f64,
    pub mean_v2: f64,
    pub frac_zero1: f64,
    pub frac_zero2: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_v1: f64,
    pub mean_v2: f64,
    pub mean_v1sq: f64,
    pub mean_v2sq: f64,
    pub mean_v1v2: f64,
    pub frac_zero1: f64,
    pub frac_zero2: f64,
    pub correlation: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: StdErrors,
    pub batches: usize,
    pub stable: bool,
    pub observed_time: f64,
    #[serde(skip)]
    pub ecdf_total: Ecdf,
}

/// Raw output of one run: per-batch integrals and scaled-total samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub batches: Vec<Moments>,
    pub samples: Vec<f64>,
}

/// Scale factor applied to the total workload before it enters the ECDF.
pub fn ecdf_scale(p: &AsymmetricParams) -> f64 {
    0.5 - 0.5 * (p.rho(Queue::One) + p.rho(Queue::Two))
}

/// Runs one replication on the given generator.
pub fn run<R: Rng>(p: &AsymmetricParams, cfg: &SimConfig, rng: &mut R) -> RunOutput {
    let serving = match cfg.initial {
        InitialServer::Fixed(q) => q,
        InitialServer::Stationary => {
            let u: f64 = rng.random();
            if u < p.visit_fraction(Queue::One) {
                Queue::One
            } else {
                Queue::Two
            }
        }
    };
    let mut state = WorkloadState::empty(serving);
    let mut batches = vec![Moments::default(); cfg.batch_count];
    let mut samples = Vec::new();
    if let Some(dt) = cfg.ecdf_interval {
        let expected = ((cfg.total_time - cfg.warmup_time) / dt).ceil() as usize;
        samples.reserve(expected.min(50_000_000));
    }
    let scale = ecdf_scale(p);
    let batch_len = cfg.batch_len();
    let mut batch = 0usize;
    let mut next_batch_end = cfg.warmup_time + batch_len;
    let mut next_sample = cfg.ecdf_interval.map(|dt| cfg.warmup_time + dt);
    let mut t = 0.0f64;

    while t < cfg.total_time {
        let visit: f64 = rng.sample::<f64, _>(Exp1) / p.c(state.serving);
        let visit_end = t + visit;
        while t < visit_end && t < cfg.total_time {
            let mut stop = visit_end.min(cfg.total_time);
            if t < cfg.warmup_time {
                stop = stop.min(cfg.warmup_time);
            } else {
                stop = stop.min(next_batch_end);
                if let Some(ns) = next_sample {
                    stop = stop.min(ns);
                }
            }
            let dt = stop - t;
            let (a, b) = fluid_paths(p, &state);
            if t >= cfg.warmup_time {
                accumulate_paths(a, b, dt, &mut batches[batch]);
            }
            segment::advance(&mut state, a, b, dt);
            t = stop;
            if t >= cfg.warmup_time {
                if let (Some(ns), Some(step)) = (next_sample, cfg.ecdf_interval) {
                    if t >= ns {
                        samples.push(scale * state.total());
                        next_sample = Some(ns + step);
                    }
                }
                if t >= next_batch_end && batch + 1 < cfg.batch_count {
                    batch += 1;
                    next_batch_end = cfg.warmup_time + (batch + 1) as f64 * batch_len;
                }
            }
        }
        state.serving = state.serving.other();
    }
    RunOutput { batches, samples }
}

fn summarize(
    p: &AsymmetricParams,
    level: f64,
    batches: &[Moments],
    samples: Vec<f64>,
) -> Result<SimResult> {
    let pooled = batches.iter().fold(Moments::default(), |acc, m| acc + *m);
    let avg = pooled.averages();
    let per: Vec<Averages> = batches.iter().map(Moments::averages).collect();
    let col = |f: fn(&Averages) -> f64| -> Vec<f64> { per.iter().map(f).collect() };
    let se = |f: fn(&Averages) -> f64| BatchSummary::from_values(&col(f)).map(|s| s.std_err);

    let corr = avg.correlation();
    let (lo, hi) = batch_ci(&col(Averages::correlation), level)?;
    let half = 0.5 * (hi - lo);
    Ok(SimResult {
        mean_v1: avg.mean_v1,
        mean_v2: avg.mean_v2,
        mean_v1sq: avg.mean_v1sq,
        mean_v2sq: avg.mean_v2sq,
        mean_v1v2: avg.mean_v1v2,
        frac_zero1: avg.frac_zero1,
        frac_zero2: avg.frac_zero2,
        correlation: corr,
        ci_low: corr - half,
        ci_high: corr + half,
        std_err: StdErrors {
            mean_v1: se(|a| a.mean_v1)?,
            mean_v2: se(|a| a.mean_v2)?,
            frac_zero1: se(|a| a.frac_zero1)?,
            frac_zero2: se(|a| a.frac_zero2)?,
            correlation: se(Averages::correlation)?,
        },
        batches: batches.len(),
        stable: p.is_stable(),
        observed_time: pooled.time,
        ecdf_total: Ecdf::from_samples(samples)?,
    })
}

/// Single run; confidence intervals come from `batch_count` equal-length
/// batches after warmup.
pub fn simulate(p: &AsymmetricParams, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut rng = replication_rng(cfg.seed, 0);
    let out = run(p, cfg, &mut rng);
    summarize(p, cfg.level, &out.batches, out.samples)
}

/// `replications` independent runs of `cfg`, one generator stream each; every
/// run contributes a single batch (its whole post-warmup window).
pub fn replicate(p: &AsymmetricParams, cfg: &SimConfig, replications: usize) -> Result<SimResult> {
    cfg.validate()?;
    if replications < 2 {
        return Err(Error::InvalidParameter {
            name: "replications",
            value: replications as f64,
            reason: "at least 2 replications are needed for a confidence interval",
        });
    }
    let outs = par::map_indexed(replications, |i| {
        let mut rng = replication_rng(cfg.seed, i as u64);
        run(p, cfg, &mut rng)
    });
    let mut batches = Vec::with_capacity(replications);
    let mut samples = Vec::new();
    for out in outs {
        batches.push(out.batches.iter().fold(Moments::default(), |acc, m| acc + *m));
        samples.extend(out.samples);
    }
    summarize(p, cfg.level, &batches, samples)
}
