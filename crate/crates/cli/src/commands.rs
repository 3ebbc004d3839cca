use anyhow::{bail, Result};
use fluidpoll::complex::c64;
use fluidpoll::exact::MarginalLaw;
use fluidpoll::heavy::{
    ht_joint_lst, ht_moments, ht_total_density, ht_total_lst, total_lst_evaluator, total_mean_variance,
    HTSymmetric,
};
use fluidpoll::inversion::{ks_distance, TabulatedCdf, DEFAULT_NODES};
use fluidpoll::levy::prelimit::{limit_process, mu_sequence, prelimit_simulate, PrelimitConfig};
use fluidpoll::levy::rbm::{rbm_simulate, RbmConfig, Reflection};
use fluidpoll::levy::subordinator::{JumpLaw, SubordinatorSpec};
use fluidpoll::levy::switching::{switching_bm_variance, SwitchLaw};
use fluidpoll::levy::{levy_joint_lst, HTDrifts};
use fluidpoll::output::CsvTable;
use fluidpoll::sim::{replicate, simulate, SimConfig, SimResult};
use fluidpoll::{AsymmetricParams, Queue, SymmetricParams};
use serde::Serialize;

use crate::args::{Budget, Command, Grid, HtArgs, ModelArgs, PrelimitArgs, RbmArgs, SimArgs};
use crate::emit::Emitter;
use crate::Status;

pub fn run(cmd: &Command, em: &Emitter) -> Result<Status> {
    match cmd {
        Command::Stability(m) => stability(m, em),
        Command::MarginalLst { model, queue, grid } => marginal_lst(model, *queue, grid, em),
        Command::HtLst { ht, grid } => ht_lst(ht, grid, em),
        Command::HtDensity { ht, grid } => ht_density(ht, grid, em),
        Command::HtMoments(ht) => ht_moments_cmd(ht, em),
        Command::Simulate { model, sim, replications, ecdf_points } => {
            simulate_cmd(model, sim, *replications, *ecdf_points, em)
        }
        Command::Rbm(a) => rbm(a, em),
        Command::Prelimit(a) => prelimit(a, em),
        Command::VerifyTable1 { budget, seed, total_time, batches } => {
            verify_table1(*budget, *seed, *total_time, *batches, em)
        }
        Command::VerifyEcdf { budget, seed, total_time, warmup, threshold } => {
            verify_ecdf(*budget, *seed, *total_time, *warmup, *threshold, em)
        }
        Command::VerifyCommute { mu, c, theta1, theta2, grid_size } => {
            verify_commute(*mu, *c, *theta1, *theta2, *grid_size, em)
        }
    }
}

#[derive(Serialize)]
struct QueueMargin {
    queue: u8,
    lambda: f64,
    mu: f64,
    c: f64,
    rho: f64,
    visit_fraction: f64,
    margin: f64,
}

#[derive(Serialize)]
struct StabilityReport {
    params: AsymmetricParams,
    stable: bool,
    queues: Vec<QueueMargin>,
}

fn stability(m: &ModelArgs, em: &Emitter) -> Result<Status> {
    let p = m.params()?;
    let (m1, m2) = p.margins();
    let queues: Vec<QueueMargin> = Queue::BOTH
        .iter()
        .zip([m1, m2])
        .map(|(&q, margin)| QueueMargin {
            queue: q.idx() as u8 + 1,
            lambda: p.lambda(q),
            mu: p.mu(q),
            c: p.c(q),
            rho: p.rho(q),
            visit_fraction: p.visit_fraction(q),
            margin,
        })
        .collect();
    let mut t = CsvTable::new(
        format!("stability {}", m.describe()?),
        &["queue", "lambda", "mu", "c", "rho", "visit_fraction", "margin"],
    );
    for q in &queues {
        t.push(vec![q.queue as f64, q.lambda, q.mu, q.c, q.rho, q.visit_fraction, q.margin]);
    }
    let stable = p.is_stable();
    eprintln!("margins {m1:.6} {m2:.6}: {}", if stable { "stable" } else { "unstable" });
    em.emit("stability", "stability", StabilityReport { params: p, stable, queues }, &t)?;
    Ok(if stable { Status::Pass } else { Status::Fail })
}

#[derive(Serialize)]
struct Point {
    x: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct MarginalReport {
    params: AsymmetricParams,
    queue: u8,
    mean: f64,
    atom: f64,
    rate_added: f64,
    rate_sum: f64,
    points: Vec<Point>,
}

fn marginal_lst(m: &ModelArgs, queue: u8, grid: &Grid, em: &Emitter) -> Result<Status> {
    let p = m.params()?;
    let q = Queue::from_label(queue)?;
    let law = MarginalLaw::new(&p, q)?;
    let points: Vec<Point> = grid
        .points()
        .into_iter()
        .map(|s| {
            let v = law.lst(c64(s, 0.0));
            Point { x: s, re: v.re, im: v.im }
        })
        .collect();
    let mut t = CsvTable::new(
        format!("marginal-lst queue={queue} {} mean={} atom={}", m.describe()?, law.mean(), law.atom()),
        &["s", "lst"],
    );
    for pt in &points {
        t.push(vec![pt.x, pt.re]);
    }
    let report = MarginalReport {
        params: p,
        queue,
        mean: law.mean(),
        atom: law.atom(),
        rate_added: law.rate_added(),
        rate_sum: law.rate_sum(),
        points,
    };
    em.emit("marginal_lst", "marginal_lst", report, &t)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct HtCurve {
    mu: f64,
    c: f64,
    points: Vec<Point>,
}

fn ht_lst(a: &HtArgs, grid: &Grid, em: &Emitter) -> Result<Status> {
    let h = a.params()?;
    let points = grid
        .points()
        .into_iter()
        .map(|s| {
            let v = ht_total_lst(&h, c64(s, 0.0))?;
            Ok(Point { x: s, re: v.re, im: v.im })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = CsvTable::new(format!("ht-lst mu={} c={}", a.mu, a.c), &["s", "lst"]);
    for pt in &points {
        t.push(vec![pt.x, pt.re]);
    }
    em.emit("ht_lst", "ht_total_lst", HtCurve { mu: a.mu, c: a.c, points }, &t)?;
    Ok(Status::Pass)
}

fn ht_density(a: &HtArgs, grid: &Grid, em: &Emitter) -> Result<Status> {
    let h = a.params()?;
    let mut t = CsvTable::new(format!("ht-density mu={} c={}", a.mu, a.c), &["x", "density"]);
    let mut points = Vec::new();
    for x in grid.points() {
        let d = ht_total_density(&h, x)?;
        t.push(vec![x, d]);
        points.push(Point { x, re: d, im: 0.0 });
    }
    em.emit("ht_density", "ht_total_density", HtCurve { mu: a.mu, c: a.c, points }, &t)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct MomentsReport {
    mu: f64,
    c: f64,
    mean: f64,
    second: f64,
    cross: f64,
    correlation: f64,
    total_mean: f64,
    total_variance: f64,
}

fn ht_moments_cmd(a: &HtArgs, em: &Emitter) -> Result<Status> {
    let h = a.params()?;
    let m = ht_moments(&h);
    let (tm, tv) = total_mean_variance(&h);
    let mut t = CsvTable::new(
        format!("ht-moments mu={} c={}", a.mu, a.c),
        &["mean", "second", "cross", "correlation", "total_mean", "total_variance"],
    );
    t.push(vec![m.mean, m.second, m.cross, m.correlation, tm, tv]);
    let report = MomentsReport {
        mu: a.mu,
        c: a.c,
        mean: m.mean,
        second: m.second,
        cross: m.cross,
        correlation: m.correlation,
        total_mean: tm,
        total_variance: tv,
    };
    em.emit("ht_moments", "ht_moments", report, &t)?;
    Ok(Status::Pass)
}

const SIM_COLUMNS: [&str; 11] = [
    "mean_v1",
    "mean_v2",
    "frac_zero1",
    "frac_zero2",
    "correlation",
    "ci_low",
    "ci_high",
    "se_mean_v1",
    "se_mean_v2",
    "se_correlation",
    "observed_time",
];

fn sim_row(r: &SimResult) -> Vec<f64> {
    vec![
        r.mean_v1,
        r.mean_v2,
        r.frac_zero1,
        r.frac_zero2,
        r.correlation,
        r.ci_low,
        r.ci_high,
        r.std_err.mean_v1,
        r.std_err.mean_v2,
        r.std_err.correlation,
        r.observed_time,
    ]
}

#[derive(Serialize)]
struct SimReport<'a> {
    params: AsymmetricParams,
    config: &'a SimConfig,
    replications: Option<usize>,
    result: &'a SimResult,
}

fn simulate_cmd(
    m: &ModelArgs,
    s: &SimArgs,
    replications: Option<usize>,
    ecdf_points: usize,
    em: &Emitter,
) -> Result<Status> {
    let p = m.params()?;
    let mut cfg = SimConfig::new(s.seed, s.total_time, s.warmup, s.batches)?;
    if ecdf_points == 0 {
        cfg = cfg.with_ecdf_interval(None)?;
    }
    let r = match replications {
        Some(n) => replicate(&p, &cfg, n)?,
        None => simulate(&p, &cfg)?,
    };
    let comment = format!(
        "simulate {} seed={} total_time={} warmup={} batches={} replications={}",
        m.describe()?,
        s.seed,
        s.total_time,
        s.warmup,
        s.batches,
        replications.unwrap_or(1)
    );
    let mut t = CsvTable::new(comment.clone(), &SIM_COLUMNS);
    t.push(sim_row(&r));
    em.emit("simulate", "simulation", SimReport { params: p, config: &cfg, replications, result: &r }, &t)?;
    if ecdf_points > 0 {
        let mut e = CsvTable::new(comment, &["scaled_total", "ecdf"]);
        for (x, f) in r.ecdf_total.thinned_steps(ecdf_points) {
            e.push(vec![x, f]);
        }
        em.table("simulate_ecdf", &e)?;
    }
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct RbmReport<'a> {
    drifts: HTDrifts,
    config: &'a RbmConfig,
    result: &'a fluidpoll::levy::rbm::RbmResult,
}

fn rbm(a: &RbmArgs, em: &Emitter) -> Result<Status> {
    let d = a.drifts()?;
    let mut cfg = RbmConfig::for_drifts(&d, a.horizon, a.seed);
    if let Some(dt) = a.dt {
        cfg.dt = dt;
    }
    cfg.chains = a.batches;
    cfg.keep_path = a.path_points;
    if a.bridge {
        cfg.reflection = Reflection::Bridge;
    }
    let r = rbm_simulate(&d, &cfg)?;
    let comment = format!(
        "rbm theta=({}, {}) dt={} horizon={} batches={} seed={} reflection={:?}",
        d.theta(Queue::One),
        d.theta(Queue::Two),
        cfg.dt,
        cfg.horizon,
        cfg.chains,
        cfg.seed,
        cfg.reflection
    );
    let mut t = CsvTable::new(
        comment.clone(),
        &["mean1", "mean2", "var1", "var2", "correlation", "se_mean1", "se_mean2", "se_correlation"],
    );
    t.push(vec![
        r.mean1.value,
        r.mean2.value,
        r.var1.value,
        r.var2.value,
        r.correlation.value,
        r.mean1.std_err,
        r.mean2.std_err,
        r.correlation.std_err,
    ]);
    em.emit("rbm", "rbm", RbmReport { drifts: d, config: &cfg, result: &r }, &t)?;
    if a.path_points > 0 {
        em.table("rbm_path", &path_table(comment, &r.path))?;
    }
    Ok(Status::Pass)
}

fn path_table(comment: String, path: &[(f64, f64, f64)]) -> CsvTable {
    let mut t = CsvTable::new(comment, &["t", "v1", "v2"]);
    for &(s, a, b) in path {
        t.push(vec![s, a, b]);
    }
    t
}

#[derive(Serialize)]
struct PrelimitReport<'a> {
    subordinator: SubordinatorSpec,
    switching: SwitchLaw,
    switching_variance: f64,
    limit_drift: [f64; 2],
    limit_covariance: [[f64; 2]; 2],
    config: &'a PrelimitConfig,
    result: &'a fluidpoll::levy::prelimit::PrelimitResult,
}

fn prelimit(a: &PrelimitArgs, em: &Emitter) -> Result<Status> {
    let l2 = a.lambda2.unwrap_or(a.lambda);
    let sub = if a.jump_rate > 0.0 {
        let jump = a.jump_rate * a.jump_mean;
        if jump > a.lambda.min(l2) {
            bail!("jump input {jump} exceeds the input rate");
        }
        SubordinatorSpec::new(a.lambda - jump, l2 - jump, a.jump_rate, JumpLaw::Shared { mean: a.jump_mean })?
    } else {
        SubordinatorSpec::fluid(a.lambda, l2)?
    };
    let sw = SwitchLaw::exponential_rates(a.c, a.c2.unwrap_or(a.c))?;
    let theta = (a.theta, a.theta2.unwrap_or(a.theta));
    let mu = mu_sequence(&sub, &sw, theta, a.n);
    let mut cfg = PrelimitConfig::new(a.horizon, a.warmup, a.seed);
    cfg.chains = a.batches;
    cfg.keep_path = a.path_points;
    let r = prelimit_simulate(&sub, &sw, a.n, mu, &cfg)?;
    let limit = limit_process(&sub, &sw, theta)?;
    let comment = format!(
        "prelimit n={} lambda=({}, {}) c=({}, {}) theta=({}, {}) jump_rate={} jump_mean={} horizon={} batches={} seed={}",
        a.n,
        a.lambda,
        l2,
        a.c,
        a.c2.unwrap_or(a.c),
        theta.0,
        theta.1,
        a.jump_rate,
        a.jump_mean,
        a.horizon,
        a.batches,
        a.seed
    );
    let mut t = CsvTable::new(
        comment.clone(),
        &["n", "mu1", "mu2", "mean1", "mean2", "second1", "second2", "cross", "correlation"],
    );
    t.push(vec![
        a.n,
        mu.0,
        mu.1,
        r.mean1.value,
        r.mean2.value,
        r.second1.value,
        r.second2.value,
        r.cross.value,
        r.correlation.value,
    ]);
    let report = PrelimitReport {
        subordinator: sub,
        switching: sw,
        switching_variance: switching_bm_variance(&sw),
        limit_drift: limit.drift,
        limit_covariance: limit.cov,
        config: &cfg,
        result: &r,
    };
    em.emit("prelimit", "prelimit", report, &t)?;
    if a.path_points > 0 {
        em.table("prelimit_path", &path_table(comment, &r.path))?;
    }
    Ok(Status::Pass)
}

const THEORY_CORRELATION: f64 = -0.4203;

/// `(rho, published simulated correlation, acceptance half-width)`.
const TABLE1: [(f64, f64, Option<(f64, f64)>); 4] = [
    (0.2, -0.3954, Some((-0.395, 0.01))),
    (0.4, -0.4184, Some((-0.418, 0.01))),
    (0.47, -0.4200, None),
    (0.49, -0.4208, Some((-0.421, 0.015))),
];

#[derive(Serialize)]
struct Table1Row {
    rho: f64,
    correlation: f64,
    ci_low: f64,
    ci_high: f64,
    published: f64,
    theory: f64,
    band: Option<(f64, f64)>,
    within_band: Option<bool>,
}

fn verify_table1(
    budget: Budget,
    seed: u64,
    total_time: Option<f64>,
    batches: Option<usize>,
    em: &Emitter,
) -> Result<Status> {
    let (default_time, default_reps) = match budget {
        Budget::Desk => (2e6, 100),
        Budget::Full => (2e7, 1000),
    };
    let total = total_time.unwrap_or(default_time);
    let reps = batches.unwrap_or(default_reps);
    if reps < 2 {
        bail!("budget must allow at least 2 batches, got {reps}");
    }
    let mut rows = Vec::new();
    for (k, &(rho, published, band)) in TABLE1.iter().enumerate() {
        let p: AsymmetricParams = SymmetricParams::from_load(rho, 1.0, 0.1)?.into();
        let cfg = SimConfig::new(seed.wrapping_add(k as u64 * 1_000_003), total, 0.01 * total, 2)?
            .with_ecdf_interval(None)?;
        let r = replicate(&p, &cfg, reps)?;
        let within_band = band.map(|(t, w)| (r.correlation - t).abs() <= w);
        eprintln!(
            "rho={rho}: {:.4} [{:.4}, {:.4}] published {published}{}",
            r.correlation,
            r.ci_low,
            r.ci_high,
            match within_band {
                Some(true) => " ok",
                Some(false) => " OUT OF BAND",
                None => "",
            }
        );
        rows.push(Table1Row {
            rho,
            correlation: r.correlation,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            published,
            theory: THEORY_CORRELATION,
            band,
            within_band,
        });
    }
    let mut t = CsvTable::new(
        format!("verify-table1 mu=1 c=0.1 total_time={total} batches={reps} seed={seed}"),
        &["rho", "correlation", "ci_low", "ci_high", "published", "theory"],
    );
    for r in &rows {
        t.push(vec![r.rho, r.correlation, r.ci_low, r.ci_high, r.published, r.theory]);
    }
    let pass = rows.iter().all(|r| r.within_band != Some(false));
    em.emit("verify_table1", "verify_table1", &rows, &t)?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Serialize)]
struct EcdfRow {
    rho: f64,
    ks: f64,
    samples: usize,
}

fn verify_ecdf(
    budget: Budget,
    seed: u64,
    total_time: Option<f64>,
    warmup: Option<f64>,
    threshold: f64,
    em: &Emitter,
) -> Result<Status> {
    let (default_time, default_warmup) = match budget {
        Budget::Desk => (1e7, 1e5),
        Budget::Full => (1e8, 1e6),
    };
    let total = total_time.unwrap_or(default_time);
    let warm = warmup.unwrap_or(default_warmup);
    let h = HTSymmetric::new(1.0, 0.1)?;
    let cdf = TabulatedCdf::from_lst(&total_lst_evaluator(&h), 12.0 * h.ratio(), 2000, 0.0, DEFAULT_NODES)?;
    let mut rows = Vec::new();
    for (k, rho) in [0.49, 0.2].into_iter().enumerate() {
        let p: AsymmetricParams = SymmetricParams::from_load(rho, 1.0, 0.1)?.into();
        let cfg = SimConfig::new(seed.wrapping_add(k as u64), total, warm, 20)?;
        let r = simulate(&p, &cfg)?;
        let ks = ks_distance(&r.ecdf_total, |x| cdf.eval(x))?;
        eprintln!("rho={rho}: KS {ks:.4} over {} samples", r.ecdf_total.len());
        let mut curve = CsvTable::new(
            format!("verify-ecdf rho={rho} mu=1 c=0.1 total_time={total} warmup={warm} seed={}", cfg.seed),
            &["scaled_total", "ecdf", "model_cdf"],
        );
        for (x, f) in r.ecdf_total.thinned_steps(500) {
            curve.push(vec![x, f, cdf.eval(x)]);
        }
        em.table(&format!("verify_ecdf_rho{}", (rho * 100.0).round() as u32), &curve)?;
        rows.push(EcdfRow { rho, ks, samples: r.ecdf_total.len() });
    }
    let mut t = CsvTable::new(
        format!("verify-ecdf total_time={total} warmup={warm} seed={seed} threshold={threshold}"),
        &["rho", "ks", "samples"],
    );
    for r in &rows {
        t.push(vec![r.rho, r.ks, r.samples as f64]);
    }
    let pass = rows[0].ks <= threshold && rows[0].ks < rows[1].ks;
    em.emit("verify_ecdf", "verify_ecdf", &rows, &t)?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}

#[derive(Serialize)]
struct CommuteRow {
    mu: f64,
    c: f64,
    theta_hat: f64,
    max_deviation: f64,
}

fn verify_commute(
    mu: Option<f64>,
    c: Option<f64>,
    theta1: Option<f64>,
    theta2: Option<f64>,
    grid_size: usize,
    em: &Emitter,
) -> Result<Status> {
    let cases: Vec<(f64, f64)> = match (mu, c, theta1, theta2) {
        (None, None, None, None) => vec![(1.0, 0.1), (2.0, 0.3)],
        (Some(m), Some(c), None, None) => vec![(m, c)],
        (None, None, Some(a), b) => {
            let b = b.unwrap_or(a);
            if a != b {
                bail!("the commuting-limits check needs symmetric drifts, got {a} and {b}");
            }
            vec![(1.0, a / 4.0)]
        }
        _ => bail!("give --mu with --c, or --theta1 [--theta2]"),
    };
    if grid_size < 2 {
        bail!("--grid-size must be at least 2");
    }
    let mut rows = Vec::new();
    for (mu, c) in cases {
        let h = HTSymmetric::new(mu, c)?;
        let d = HTDrifts::from_symmetric(&h);
        let last = (grid_size - 1) as f64;
        let mut worst = 0.0f64;
        for i in 0..grid_size {
            for j in 0..grid_size {
                let (x, y) = (i as f64 / last, j as f64 / last);
                let s1 = c64(3.0 * x, -2.0 + 4.0 * y);
                let s2 = c64(3.0 * y, 2.0 - 4.0 * x);
                let dev = (levy_joint_lst(&d, s1, s2)? - ht_joint_lst(&h, s1, s2)?).norm();
                worst = worst.max(dev);
            }
        }
        eprintln!("mu={mu} c={c}: max deviation {worst:.3e}");
        rows.push(CommuteRow { mu, c, theta_hat: d.theta(Queue::One), max_deviation: worst });
    }
    let mut t = CsvTable::new(
        format!("verify-commute grid={grid_size}x{grid_size}"),
        &["mu", "c", "theta_hat", "max_deviation"],
    );
    for r in &rows {
        t.push(vec![r.mu, r.c, r.theta_hat, r.max_deviation]);
    }
    let pass = rows.iter().all(|r| r.max_deviation < 1e-8);
    em.emit("verify_commute", "verify_commute", &rows, &t)?;
    Ok(if pass { Status::Pass } else { Status::Fail })
}
