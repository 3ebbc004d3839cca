use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fluidpoll::heavy::HTSymmetric;
use fluidpoll::levy::HTDrifts;
use fluidpoll::{AsymmetricParams, Queue};

#[derive(Debug, Parser)]
#[command(name = "fluidpoll", version, about = "Two-queue fluid polling model: transforms, limits and simulation")]
pub struct Cli {
    /// Directory for output files; stdout when unset.
    #[arg(long, global = true, env = "FLUIDPOLL_OUT_DIR")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads for replications (default: number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Budget {
    Desk,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report stability margins; exit 1 when unstable.
    Stability(ModelArgs),
    /// Exact marginal workload transform on a real grid.
    MarginalLst {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1)]
        queue: u8,
        #[arg(long, default_value = "0:2:21", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Heavy-traffic total workload transform.
    HtLst {
        #[command(flatten)]
        ht: HtArgs,
        #[arg(long, default_value = "0:5:51", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Heavy-traffic total workload density.
    HtDensity {
        #[command(flatten)]
        ht: HtArgs,
        #[arg(long, default_value = "0.5:100:200", allow_hyphen_values = true)]
        grid: Grid,
    },
    /// Heavy-traffic moments and correlation.
    HtMoments(HtArgs),
    /// Discrete-event simulation of the fluid model.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Independent replications; each forms one batch.
        #[arg(long)]
        replications: Option<usize>,
        /// Points of the scaled-total ECDF to emit (CSV only).
        #[arg(long, default_value_t = 0)]
        ecdf_points: usize,
    },
    /// Reflected Brownian motion of the process limit.
    Rbm(RbmArgs),
    /// Pre-limit system on the diffusion scale.
    Prelimit(PrelimitArgs),
    /// Correlation table at c = 0.1, mu = 1.
    VerifyTable1 {
        #[arg(long, value_enum, default_value_t = Budget::Desk)]
        budget: Budget,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Overrides for the budget.
        #[arg(long)]
        total_time: Option<f64>,
        #[arg(long)]
        batches: Option<usize>,
    },
    /// Scaled-total ECDF against the inverted heavy-traffic law.
    VerifyEcdf {
        #[arg(long, value_enum, default_value_t = Budget::Desk)]
        budget: Budget,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        total_time: Option<f64>,
        #[arg(long)]
        warmup: Option<f64>,
        /// KS threshold at rho = 0.49.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Symmetric Lévy-limit transform against the fluid heavy-traffic transform.
    VerifyCommute {
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        theta1: Option<f64>,
        #[arg(long)]
        theta2: Option<f64>,
        #[arg(long, default_value_t = 20)]
        grid_size: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Input rate of queue 1 (and queue 2 unless --lambda2 is given).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Load per queue; sets lambda = rho * mu.
    #[arg(long, conflicts_with = "lambda")]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
}

impl ModelArgs {
    pub fn params(&self) -> Result<AsymmetricParams> {
        let mu2 = self.mu2.unwrap_or(self.mu);
        let (l1, l2) = match (self.lambda, self.rho) {
            (Some(l), None) => (l, self.lambda2.unwrap_or(l)),
            (None, Some(r)) => (r * self.mu, self.lambda2.unwrap_or(r * mu2)),
            _ => bail!("one of --lambda or --rho is required"),
        };
        Ok(AsymmetricParams::new(l1, l2, self.mu, mu2, self.c, self.c2.unwrap_or(self.c))?)
    }

    pub fn describe(&self) -> Result<String> {
        let p = self.params()?;
        Ok(format!(
            "lambda=({}, {}) mu=({}, {}) c=({}, {})",
            p.lambda(Queue::One),
            p.lambda(Queue::Two),
            p.mu(Queue::One),
            p.mu(Queue::Two),
            p.c(Queue::One),
            p.c(Queue::Two)
        ))
    }
}

#[derive(Debug, Clone, Args)]
pub struct HtArgs {
    #[arg(long)]
    pub mu: f64,
    #[arg(long)]
    pub c: f64,
}

impl HtArgs {
    pub fn params(&self) -> Result<HTSymmetric> {
        Ok(HTSymmetric::new(self.mu, self.c)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e6)]
    pub total_time: f64,
    #[arg(long, default_value_t = 1e4)]
    pub warmup: f64,
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RbmArgs {
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Symmetric drifts 4c/mu from the fluid model.
    #[arg(long, conflicts_with_all = ["theta1", "theta2"], requires = "c")]
    pub mu: Option<f64>,
    #[arg(long, requires = "mu")]
    pub c: Option<f64>,
    /// Time step; defaults to 1e-3 / max(theta^2, 1).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1e4)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub batches: usize,
    /// Clamp (default) or marginally exact bridge reflection.
    #[arg(long)]
    pub bridge: bool,
    /// Number of path samples to emit.
    #[arg(long, default_value_t = 0)]
    pub path_points: usize,
}

impl RbmArgs {
    pub fn drifts(&self) -> Result<HTDrifts> {
        match (self.theta1, self.theta2, self.mu, self.c) {
            (Some(a), b, None, None) => Ok(HTDrifts::new(a, b.unwrap_or(a))?),
            (None, None, Some(mu), Some(c)) => Ok(HTDrifts::from_symmetric(&HTSymmetric::new(mu, c)?)),
            _ => bail!("give --theta1 [--theta2] or --mu with --c"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PrelimitArgs {
    /// Diffusion scale parameter.
    #[arg(long, default_value_t = 1e3)]
    pub n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Switch-out rates of the exponential visits.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Rate of shared exponential jumps; the remaining input is drift.
    #[arg(long, default_value_t = 0.0)]
    pub jump_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub jump_mean: f64,
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 5.0)]
    pub warmup: f64,
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub path_points: usize,
}

/// Linear grid `start:end:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("grid must look like start:end:count, got `{s}`");
        }
        let start: f64 = parts[0].trim().parse().context("grid start")?;
        let end: f64 = parts[1].trim().parse().context("grid end")?;
        let count: usize = parts[2].trim().parse().context("grid count")?;
        if !(start.is_finite() && end.is_finite()) || count == 0 {
            bail!("grid needs finite bounds and at least one point");
        }
        Ok(Self { start, end, count })
    }
}
