//! End-to-end acceptance checks, one line per criterion. Exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fluidpoll::complex::{c64, Complex};
use fluidpoll::exact::{
    ellipse_geometry, kernel, kernel_roots_s2, kernel_scale, marginal_atom, marginal_lst,
    marginal_mean, MarginalLaw,
};
use fluidpoll::heavy::{
    conformal_psi, ht_joint_lst, ht_kernel, ht_kernel_roots, ht_moments, ht_total_density,
    ht_total_lst, ht_total_lst_product, ht_total_lst_product_with_tail, parabola,
    total_lst_evaluator, total_lst_poles, truncation_bias, HTSymmetric, TotalWorkloadSampler,
};
use fluidpoll::inversion::{talbot_invert_pdf, ks_distance, TabulatedCdf, DEFAULT_NODES};
use fluidpoll::levy::prelimit::{limit_process, mu_sequence, prelimit_simulate, PrelimitConfig};
use fluidpoll::levy::rbm::{rbm_simulate, rbm_simulate_process, FreeProcess, RbmConfig, Reflection};
use fluidpoll::levy::subordinator::{JumpLaw, SubordinatorSpec};
use fluidpoll::levy::switching::{switching_bm_variance, switching_variance_mc, SwitchLaw};
use fluidpoll::levy::{
    boundary_condition_residual, f_hat, f_hat_poles, functional_equation_residual, levy_branch_point,
    levy_conformal, levy_ht_kernel, levy_joint_lst, levy_kernel_roots, levy_parabola,
    printed_pole_families, HTDrifts,
};
use fluidpoll::par::map_indexed;
use fluidpoll::sim::{replicate, replication_rng, simulate, SimConfig};
use fluidpoll::{AsymmetricParams, Ecdf, Queue, SymmetricParams};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, Box<dyn std::error::Error>>;

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome, Box<dyn std::error::Error>> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn base() -> HTSymmetric {
    HTSymmetric::new(1.0, 0.1).unwrap()
}

fn table1_correlation() -> Result<Outcome, Box<dyn std::error::Error>> {
    let bands = [(0.2, -0.395, 0.01), (0.4, -0.418, 0.01), (0.47, f64::NAN, f64::NAN), (0.49, -0.421, 0.015)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (rho, target, band) in bands {
        let p: AsymmetricParams = SymmetricParams::from_load(rho, 1.0, 0.1)?.into();
        let cfg = SimConfig::new(1000 + (rho * 100.0) as u64, 2e6, 2e4, 2)?.with_ecdf_interval(None)?;
        let r = replicate(&p, &cfg, 100)?;
        if band.is_finite() {
            pass &= (r.correlation - target).abs() <= band;
            parts.push(format!("rho={rho}: {:.4} (target {target} ± {band})", r.correlation));
        } else {
            parts.push(format!("rho={rho}: {:.4}", r.correlation));
        }
    }
    outcome(pass, parts.join(", "))
}

fn theoretical_correlation() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let m = ht_moments(&h);
    let exact = 2.0 * PI * PI / 3.0 - 7.0;
    let f = |a: f64, b: f64| ht_joint_lst(&h, c64(a, 0.0), c64(b, 0.0)).unwrap().re;
    let cross = fluidpoll::numdiff::mixed_partial_at_zero(f, 1e-2 * h.ratio().recip());
    let rel = (cross - m.cross).abs() / m.cross;
    outcome(
        m.correlation == exact && rel < 1e-6,
        format!("corr {:.6}, numeric cross moment rel err {rel:.2e}", m.correlation),
    )
}

fn closed_form_vs_product() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let n = 10_000;
    let (mut plain, mut tailed) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let s = c64(50.0 / h.ratio() * k as f64 / 99.0, 0.0);
        let closed = ht_total_lst(&h, s)?;
        plain = plain.max((closed - ht_total_lst_product(&h, s, n)?).norm());
        tailed = tailed.max((closed - ht_total_lst_product_with_tail(&h, s, n)?).norm());
    }
    outcome(
        tailed < 1e-8,
        format!(
            "tail-corrected product max err {tailed:.2e}; plain product {plain:.2e} (tail mean {:.2e})",
            truncation_bias(&h, n)
        ),
    )
}

fn density_consistency() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let ev = total_lst_evaluator(&h);
    let g = h.ratio();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let x = g * (0.1 + 9.9 * k as f64 / 49.0);
        let a = ht_total_density(&h, x)?;
        let b = talbot_invert_pdf(&ev, x, DEFAULT_NODES)?;
        worst = worst.max((a - b).abs());
    }
    let f = |x: f64| ht_total_density(&h, x).unwrap_or(f64::NAN);
    let mass: f64 = [(0.0, 0.5), (0.5, 2.0), (2.0, 40.0)]
        .iter()
        .map(|&(a, b)| quadrature::double_exponential::integrate(f, a * g, b * g, 1e-12).integral)
        .sum();
    outcome(
        worst < 1e-6 && (mass - 1.0).abs() < 1e-6,
        format!("max |series - Talbot| {worst:.2e}, mass - 1 = {:.2e}", mass - 1.0),
    )
}

fn sampler_law() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let sampler = TotalWorkloadSampler::new(&h, 200, true)?;
    let chunks = 100;
    let per = 10_000;
    let draws: Vec<f64> = map_indexed(chunks, |c| {
        let mut rng = replication_rng(77, c as u64);
        (0..per).map(|_| sampler.sample(&mut rng)).collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z = (mean - h.ratio() / 4.0) / (sd / n.sqrt());
    let cdf = TabulatedCdf::from_lst(&total_lst_evaluator(&h), 12.0 * h.ratio(), 2000, 0.0, DEFAULT_NODES)?;
    let ks = ks_distance(&Ecdf::from_samples(draws)?, |x| cdf.eval(x))?;
    outcome(ks < 0.005 && z.abs() < 4.0, format!("KS {ks:.4}, mean z-score {z:.2}"))
}

fn ecdf_ks(rho: f64, seed: u64) -> fluidpoll::Result<f64> {
    let p: AsymmetricParams = SymmetricParams::from_load(rho, 1.0, 0.1)?.into();
    let cfg = SimConfig::new(seed, 1e7, 1e5, 20)?;
    let r = simulate(&p, &cfg)?;
    let h = base();
    let cdf = TabulatedCdf::from_lst(&total_lst_evaluator(&h), 12.0 * h.ratio(), 2000, 0.0, DEFAULT_NODES)?;
    ks_distance(&r.ecdf_total, |x| cdf.eval(x))
}

fn ecdf_experiment() -> Result<Outcome, Box<dyn std::error::Error>> {
    let ks: Vec<f64> = map_indexed(2, |i| ecdf_ks([0.49, 0.2][i], 60 + i as u64))
        .into_iter()
        .collect::<fluidpoll::Result<_>>()?;
    outcome(
        ks[0] <= 0.05 && ks[0] < ks[1],
        format!("KS(0.49) = {:.4}, KS(0.2) = {:.4}", ks[0], ks[1]),
    )
}

fn marginal_checks() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, rho) in [0.3, 0.45].into_iter().enumerate() {
        let p: AsymmetricParams = SymmetricParams::from_load(rho, 1.0, 0.1)?.into();
        let cfg = SimConfig::new(300 + k as u64, 2e6, 2e4, 2)?.with_ecdf_interval(None)?;
        let r = replicate(&p, &cfg, 40)?;
        let zm = (r.mean_v1 - marginal_mean(&p, Queue::One)?) / r.std_err.mean_v1;
        let za = (r.frac_zero1 - marginal_atom(&p, Queue::One)?) / r.std_err.frac_zero1;
        pass &= zm.abs() < 3.0 && za.abs() < 3.0;
        parts.push(format!("rho={rho}: mean z {zm:.2}, atom z {za:.2}"));

        let law = MarginalLaw::new(&p, Queue::One)?;
        let (t1, t2) = (law.rate_added(), law.rate_sum());
        let mut worst = 0.0f64;
        for i in 0..50 {
            let s = c64(0.05 * i as f64, 0.3 * (i % 7) as f64);
            let lhs = marginal_lst(&p, Queue::One, s)? * t1 / (t1 + s);
            worst = worst.max((lhs - t2 / (t2 + s)).norm());
        }
        pass &= worst < 1e-12;
        parts.push(format!("identity err {worst:.1e}"));
    }
    outcome(pass, parts.join(", "))
}

fn kernel_geometry() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut worst = [0.0f64; 6];
    let p = SymmetricParams::from_load(0.3, 1.0, 0.2)?;
    for i in 0..40 {
        let s1 = c64(-0.5 + 0.1 * i as f64, 0.7 * ((i % 5) as f64 - 2.0));
        let (a, b) = kernel_roots_s2(&p, s1)?;
        for r in [a, b] {
            worst[0] = worst[0].max(kernel(&p, s1, r).norm() / kernel_scale(&p, s1, r));
        }
    }
    let e = ellipse_geometry(&p)?;
    for i in 0..=100 {
        let u = e.u_min + (e.u_max - e.u_min) * i as f64 / 100.0;
        let s1 = fluidpoll::exact::s1_from_u(&p, u);
        let (r, _) = kernel_roots_s2(&p, c64(s1, 0.0))?;
        worst[1] = worst[1].max(e.residual(r.re, r.im).abs());
    }
    let h = base();
    let par = parabola(&h);
    for k in 1..50 {
        let s1 = c64(h.ratio().recip() * (1.0 + 0.4 * k as f64), 0.0);
        let (r, _) = ht_kernel_roots(&h, s1);
        worst[0] = worst[0].max(ht_kernel(&h, s1, r).norm() / (1.0 + s1.norm_sqr()));
        worst[2] = worst[2].max(par.residual(r.re, r.im).abs() / (1.0 + r.norm_sqr()));
    }
    let d = HTDrifts::new(0.7, 1.9)?;
    let lp = levy_parabola(&d, Queue::One);
    let bp = levy_branch_point(&d);
    for k in 1..50 {
        let s1 = c64(bp * (1.0 + 0.4 * k as f64), 0.0);
        let (r, _) = levy_kernel_roots(&d, s1);
        worst[0] = worst[0].max(levy_ht_kernel(&d, s1, r).norm() / (1.0 + s1.norm_sqr()));
        worst[2] = worst[2].max(lp.residual(r.re, r.im).abs() / (1.0 + r.norm_sqr()));
    }
    for k in 0..50 {
        let v = -20.0 + 40.0 * k as f64 / 49.0;
        worst[3] = worst[3].max((conformal_psi(&h, par.point(v))?.norm() - 1.0).abs());
        for q in Queue::BOTH {
            let z = levy_parabola(&d, q).point(v);
            worst[3] = worst[3].max((levy_conformal(&d, q, z)?.norm() - 1.0).abs());
        }
    }
    worst[4] = conformal_psi(&h, c64(0.0, 0.0))?.norm();
    worst[5] = (conformal_psi(&h, c64(h.strip_edge(), 0.0))? - 1.0).norm();
    let pass = worst[..4].iter().all(|&w| w < 1e-10) && worst[4] < 1e-12 && worst[5] < 1e-12;
    outcome(
        pass,
        format!(
            "roots {:.1e}, ellipse {:.1e}, parabolas {:.1e}, |psi|-1 {:.1e}, psi(0) {:.1e}, psi(vertex)-1 {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    )
}

fn analyticity_strips() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let mut pass = total_lst_poles(&h, 50).iter().all(|&s| s < h.strip_edge());
    let mut rng = replication_rng(9, 0);
    for _ in 0..20 {
        let d = HTDrifts::new(rng.random_range(0.01..5.0), rng.random_range(0.01..5.0))?;
        for q in Queue::BOTH {
            let edge = d.strip_edge(q);
            let (a, b) = printed_pole_families(&d, q, 20);
            // Both queue labellings of the strip edge.
            let other_edge = d.strip_edge(q.other());
            pass &= a.iter().chain(&b).all(|&s| s < edge && s < other_edge);
            pass &= f_hat_poles(&d, q, 20).iter().all(|&s| s < edge);
        }
    }
    outcome(pass, "fluid poles, printed families and boundary-function poles checked on 20 drift pairs")
}

fn levy_boundary() -> Result<Outcome, Box<dyn std::error::Error>> {
    let d = HTDrifts::new(0.7, 1.9)?;
    let mut w = [0.0f64; 3];
    for q in Queue::BOTH {
        w[0] = w[0].max((f_hat(&d, q, c64(0.0, 0.0))? - d.theta(q)).norm());
    }
    let bp = levy_branch_point(&d);
    for k in 1..60 {
        let (a, b) = levy_kernel_roots(&d, c64(bp * (1.0 + 0.3 * k as f64), 0.0));
        w[1] = w[1].max(boundary_condition_residual(&d, a).abs()).max(boundary_condition_residual(&d, b).abs());
    }
    for i in 0..20 {
        for j in 0..20 {
            let s1 = c64(0.25 * i as f64 / 19.0 * 20.0, -3.0 + 6.0 * j as f64 / 19.0);
            let s2 = c64(5.0 - 0.25 * j as f64, 3.0 - 0.3 * i as f64);
            let r = functional_equation_residual(&d, s1, s2).norm();
            w[2] = w[2].max(r / (1.0 + levy_ht_kernel(&d, s1, s2).norm()));
        }
    }
    outcome(
        w.iter().all(|&x| x < 1e-10),
        format!("f_hat(0) err {:.1e}, boundary {:.1e}, residual {:.1e}", w[0], w[1], w[2]),
    )
}

fn commuting_limits() -> Result<Outcome, Box<dyn std::error::Error>> {
    let mut worst = 0.0f64;
    for (mu, c) in [(1.0, 0.1), (2.0, 0.3)] {
        let h = HTSymmetric::new(mu, c)?;
        let d = HTDrifts::from_symmetric(&h);
        for i in 0..20 {
            for j in 0..20 {
                let s1 = c64(3.0 * i as f64 / 19.0, -2.0 + 4.0 * j as f64 / 19.0);
                let s2 = c64(3.0 * j as f64 / 19.0, 2.0 - 4.0 * i as f64 / 19.0);
                let a: Complex = levy_joint_lst(&d, s1, s2)?;
                worst = worst.max((a - ht_joint_lst(&h, s1, s2)?).norm());
            }
        }
    }
    outcome(worst < 1e-8, format!("max deviation {worst:.2e}"))
}

fn rbm_stationarity() -> Result<Outcome, Box<dyn std::error::Error>> {
    let h = base();
    let d = HTDrifts::from_symmetric(&h);
    let mut cfg = RbmConfig::for_drifts(&d, 1e5, 12);
    cfg.dt = 1e-3;
    let r = rbm_simulate(&d, &cfg)?;
    let m = ht_moments(&h);
    let var = m.second - m.mean * m.mean;
    let z = [
        r.mean1.z_score(m.mean),
        r.mean2.z_score(m.mean),
        r.var1.z_score(var),
        r.var2.z_score(var),
        r.correlation.z_score(m.correlation),
    ];
    let pass = z.iter().all(|v| v.abs() < 4.0) && (r.correlation.value - m.correlation).abs() < 0.02;
    outcome(
        pass,
        format!(
            "mean {:.4}/{:.4} (exact {:.4}), var {:.4}/{:.4} (exact {var:.4}), corr {:.4}; max |z| {:.2}",
            r.mean1.value,
            r.mean2.value,
            m.mean,
            r.var1.value,
            r.var2.value,
            r.correlation.value,
            z.iter().fold(0.0f64, |a, b| a.max(b.abs()))
        ),
    )
}

fn within(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

fn prelimit_convergence() -> Result<Outcome, Box<dyn std::error::Error>> {
    let sw = SwitchLaw::exponential_rates(1.0, 1.0)?;
    // Scaled noise at finite n is inflated by (1 + θ/(λ sqrt n))^2, so θ/λ is kept small.
    let theta = (1.0, 1.0);
    let n = 1e4;
    let specs = [
        ("fluid", SubordinatorSpec::fluid(1.0, 1.0)?),
        ("compound Poisson", SubordinatorSpec::new(0.5, 0.5, 1.0, JumpLaw::Shared { mean: 0.5 })?),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (name, sub)) in specs.iter().enumerate() {
        let mut cfg = PrelimitConfig::new(40_000.0, 5.0, 40 + k as u64);
        cfg.chains = 50;
        let pre = prelimit_simulate(sub, &sw, n, mu_sequence(sub, &sw, theta, n), &cfg)?;
        let limit: FreeProcess = limit_process(sub, &sw, theta)?;
        let mut rc = RbmConfig::new(1e-3, 100_000.0, 50 + k as u64);
        rc.warmup = 5.0;
        rc.reflection = Reflection::Bridge;
        let rbm = rbm_simulate_process(&limit, &rc)?;
        let pairs = [
            (pre.mean1.value, rbm.mean1.value),
            (pre.mean2.value, rbm.mean2.value),
            (pre.second1.value, rbm.second1.value),
            (pre.second2.value, rbm.second2.value),
            (pre.cross.value, rbm.cross.value),
        ];
        let ok = pairs.iter().all(|&(a, b)| within(a, b, 0.1));
        pass &= ok;
        let worst = pairs.iter().map(|&(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max);
        parts.push(format!("{name}: mean {:.4} vs {:.4}, max rel dev {worst:.3}", pre.mean1.value, rbm.mean1.value));
    }
    for (k, law) in [sw, SwitchLaw::Gamma { mean1: 1.0, mean2: 2.0, shape1: 2.0, shape2: 0.5 }]
        .iter()
        .enumerate()
    {
        let est = switching_variance_mc(law, 400.0, 4000, 70 + k as u64)?;
        let z = est.z_score(switching_bm_variance(law));
        pass &= z.abs() < 4.0;
        parts.push(format!("switching variance z {z:.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 13] = [
        ("correlation table", table1_correlation),
        ("theoretical correlation", theoretical_correlation),
        ("closed form vs product", closed_form_vs_product),
        ("density consistency", density_consistency),
        ("sampler law", sampler_law),
        ("ECDF experiment", ecdf_experiment),
        ("marginal checks", marginal_checks),
        ("kernel and geometry", kernel_geometry),
        ("analyticity strips", analyticity_strips),
        ("boundary and functional equation", levy_boundary),
        ("commuting limits", commuting_limits),
        ("RBM stationarity", rbm_stationarity),
        ("pre-limit convergence", prelimit_convergence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| f == &id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
