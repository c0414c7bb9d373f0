//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use apfront::decay::{self, DecayOptions, Lambda1Ref};
use apfront::eigen::{self, BoundedVerdict, Lambda1Config};
use apfront::frontsim::{self, FrontConfig, FrontState, SpreadConfig};
use apfront::speed::{self, SpeedConfig};
use apfront::CoefficientField;
use common::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: apfront::Error) -> String {
    e.to_string()
}

fn all_fields() -> Vec<(&'static str, CoefficientField)> {
    vec![
        ("const(1,1)", constant(1.0, 1.0)),
        ("const(4,1)", constant(4.0, 1.0)),
        ("const(1,4)", constant(1.0, 4.0)),
        ("const(2,0.5)", constant(2.0, 0.5)),
        ("periodic", periodic()),
        ("quasiperiodic", quasiperiodic()),
    ]
}

fn report(field: &CoefficientField) -> Result<speed::SpeedReport, String> {
    speed::speed_report(field, &SpeedConfig::default()).map_err(err)
}

fn criterion_1() -> Check {
    let mut worst = 0.0_f64;
    for (a, c) in [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0), (2.0, 0.5)] {
        let t = Instant::now();
        let r = report(&constant(a, c))?;
        let exact = 2.0 * f64::sqrt(a * c);
        let rel = (r.w_star - exact).abs() / exact;
        worst = worst.max(rel);
        ensure(rel <= 5e-3, format!("(a,c)=({a},{c}): w*={} vs {exact}", r.w_star))?;
        ensure(t.elapsed() < Duration::from_secs(10), format!("(a,c)=({a},{c}) took {:?}", t.elapsed()))?;
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn criterion_2() -> Check {
    let cfg = Lambda1Config::default();
    let slack = 10.0 * cfg.h * cfg.h;
    let mut lines = Vec::new();
    for (name, f) in all_fields() {
        let est = eigen::lambda1(&f, &cfg).map_err(err)?;
        let drops = est.samples.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0_f64, f64::max);
        ensure(drops <= slack, format!("{name}: table decreases by {drops}"))?;
        let c_min = f.bounds().c_min;
        ensure(est.lambda1 >= c_min - 1e-3, format!("{name}: λ₁ = {} < inf c = {c_min}", est.lambda1))?;
        lines.push(format!("{name} λ₁={:.5}", est.lambda1));
    }
    Ok(lines.join(", "))
}

fn criterion_3() -> Check {
    let opts = DecayOptions::default();
    let mut total = 0;
    for (name, f) in all_fields() {
        let est = eigen::lambda1(&f, &Lambda1Config::default()).map_err(err)?;
        let lam = Lambda1Ref::from(&est);
        let mut gammas = decay::default_gamma_grid(lam);
        gammas.extend([lam.value + 6.0, lam.value + 12.0]);
        let curve = decay::mu_curve(&f, &gammas, lam, &opts).map_err(err)?;
        ensure(curve.is_clean(), format!("{name}: {:?}", curve.warnings))?;
        for p in &curve.points {
            // Lower bound √((γ−λ₁)/sup a) with λ₁ tolerance and the grid slack.
            let tol = lam.tol / (2.0 * (p.gamma - lam.value).sqrt()) + p.mu.uncertainty + p.mu.value.powi(3) * opts.h * opts.h / 12.0;
            ensure(p.mu.value >= p.lo_bound - tol, format!("{name}: μ({}) = {} below {}", p.gamma, p.mu.value, p.lo_bound))?;
        }
        if f.has_constant_c() {
            let b = f.bounds();
            for p in &curve.points {
                let prof = decay::mu_profile(&f, p.gamma, lam, &opts).map_err(err)?;
                let bound = (p.gamma - b.c_min).sqrt() * b.a_max.sqrt() / b.a_min;
                let layer = 2.0 * prof.mu.value * (-2.0 * prof.mu.value * (prof.r_used - prof.core.1)).exp();
                ensure(
                    prof.sigma_sup() <= bound + layer + 1e-9,
                    format!("{name}: sup |σ| = {} > {bound} at γ = {}", prof.sigma_sup(), p.gamma),
                )?;
            }
        }
        total += curve.points.len();
    }
    Ok(format!("{total} γ values on 6 fields, no structural flags"))
}

fn criterion_4() -> Check {
    let mut lines = Vec::new();
    for (name, f) in [("const(1,1)", constant(1.0, 1.0)), ("periodic", periodic()), ("quasiperiodic", quasiperiodic())] {
        let r = report(&f)?;
        let kp = r.kp_cross_check.as_ref().ok_or("no k_p cross-check")?;
        ensure(kp.discrepancy <= 1e-2, format!("{name}: w*={} min k_p/p={}", r.w_star, kp.w_kp))?;
        lines.push(format!("{name} {:.2e}", kp.discrepancy));
        if name == "periodic" {
            let oracle = floquet_w_star();
            let rel = (r.w_star - oracle).abs() / oracle;
            ensure(rel <= 1e-2, format!("periodic w*={} vs Floquet {oracle}", r.w_star))?;
            lines.push(format!("Floquet oracle {rel:.2e}"));
        }
    }
    Ok(lines.join(", "))
}

fn criterion_5() -> Check {
    let mut lines = Vec::new();
    for (name, f) in [("const(1,1)", constant(1.0, 1.0)), ("periodic", periodic())] {
        let lam = eigen::lambda1(&f, &Lambda1Config::default()).map_err(err)?.lambda1;
        let gammas = [lam + 0.2, lam + 1.0, lam + 4.0];
        let cfg = SpeedConfig { kp_cross_check: false, ..SpeedConfig::default() };
        let rep = speed::shift_check(&f, &[1.0, 5.0, 20.0], &gammas, &cfg).map_err(err)?;
        let mut worst = 0.0_f64;
        for row in &rep.rows {
            for &(g, m, ms, diff, unc) in &row.mu_pairs {
                ensure(diff <= unc + 1e-9 * m.max(1.0), format!("{name}: c₀={} γ={g}: {m} vs {ms}", row.c0))?;
                worst = worst.max(diff);
            }
        }
        ensure(rep.rows.iter().any(|r| r.window_nonempty), format!("{name}: window never nonempty"))?;
        lines.push(format!("{name} max |Δμ|={worst:.1e} threshold c₀={:?}", rep.threshold_c0));
    }
    Ok(lines.join(", "))
}

/// Runs from `−n` and `−2n` on one sandwich; checks the per-run invariants and
/// `u_n(t) ≥ u_{2n}(t − s) − tol` for lags `s ∈ (0, 1)`.
fn sandwich_case(name: &str, f: &CoefficientField, speed: impl Fn(&speed::SpeedReport) -> f64) -> Check {
    let r = report(f)?;
    let w = speed(&r);
    let cfg = FrontConfig::default();
    let far = 2.0 * cfg.t_start;
    let sw = frontsim::build_sandwich(f, &r, w, (far, cfg.t_end), &cfg).map_err(err)?;
    ensure(sw.kappa > 0.0 && sw.kappa < sw.epsilon * sw.gamma, format!("{name}: κ = {} outside (0, εγ)", sw.kappa))?;
    ensure(
        sw.theta_build.certificate_min >= sw.delta,
        format!("{name}: certificate {} < δ = {}", sw.theta_build.certificate_min, sw.delta),
    )?;
    let near = frontsim::march_front(f, &sw, &cfg).map_err(err)?;
    let far_run = frontsim::march_front(f, &sw, &FrontConfig { t_start: far, ..cfg.clone() }).map_err(err)?;
    for run in [&near, &far_run] {
        ensure(run.sandwich_violation <= cfg.sandwich_tol, format!("{name}: sandwich off by {}", run.sandwich_violation))?;
        ensure(run.late_decrease <= cfg.monotone_tol, format!("{name}: decrease {}", run.late_decrease))?;
    }
    let (lag_worst, pairs) = cross_run_monotonicity(&near, &far_run, cfg.snapshot_every);
    ensure(pairs > 1000, format!("{name}: only {pairs} lagged snapshot pairs"))?;
    ensure(lag_worst <= cfg.monotone_tol, format!("{name}: u_n(t) < u_2n(t − s) by {lag_worst}"))?;
    Ok(format!(
        "{name}: κ={:.4} εγ={:.4} cert={:.4} ≥ δ={:.4}, violation {:.1e}, lagged-order defect {:.1e} over {pairs} pairs, warm-up decrease {:.1e}",
        sw.kappa,
        sw.epsilon * sw.gamma,
        sw.theta_build.certificate_min,
        sw.delta,
        near.sandwich_violation.max(far_run.sandwich_violation),
        lag_worst,
        near.transient_decrease
    ))
}

fn cross_run_monotonicity(near: &FrontState, far: &FrontState, every: f64) -> (f64, usize) {
    let idx = |run: &FrontState, t: f64| run.times.iter().position(|&s| (s - t).abs() < 1e-6);
    let (mut worst, mut pairs) = (0.0_f64, 0);
    for (k, &t) in near.times.iter().enumerate() {
        for lag in 1..10 {
            let Some(j) = idx(far, t - lag as f64 * every) else { continue };
            pairs += 1;
            for (a, b) in near.snapshots[k].iter().zip(&far.snapshots[j]) {
                worst = worst.max(b - a);
            }
        }
    }
    (worst, pairs)
}

fn criterion_6() -> Check {
    let a = sandwich_case("const(1,1) w=2.5", &constant(1.0, 1.0), |_| 2.5)?;
    let b = sandwich_case("periodic w=1.1w*", &periodic(), |r| 1.1 * r.w_star)?;
    Ok(format!("{a}; {b}"))
}

fn criterion_7() -> Check {
    let cfg = FrontConfig::default();
    let mut lines = Vec::new();
    for (name, f) in [("const(1,1)", constant(1.0, 1.0)), ("periodic", periodic()), ("quasiperiodic", quasiperiodic())] {
        let t = Instant::now();
        let r = report(&f)?;
        let mut worst = (0.0_f64, 0.0_f64);
        for factor in [1.05, 1.1, 1.2] {
            let (sw, run, dbl) = frontsim::start_doubling(&f, &r, factor * r.w_star, &cfg).map_err(err)?;
            let target = sw.gamma / sw.mu_gamma;
            let rel = (run.measured.average_speed - target).abs() / target;
            ensure(rel <= 2e-2, format!("{name} {factor}w*: speed {} vs {target}", run.measured.average_speed))?;
            ensure(dbl.relative_change < 5e-3, format!("{name} {factor}w*: doubling moved speed by {}", dbl.relative_change))?;
            worst = (worst.0.max(rel), worst.1.max(dbl.relative_change));
        }
        ensure(t.elapsed() < Duration::from_secs(300), format!("{name} took {:?}", t.elapsed()))?;
        lines.push(format!("{name} err≤{:.2e} dbl≤{:.2e}", worst.0, worst.1));
    }
    Ok(lines.join(", "))
}

fn criterion_8() -> Check {
    let cfg = FrontConfig::default();
    let mut lines = Vec::new();
    for (name, f) in [("const(1,1)", constant(1.0, 1.0)), ("periodic", periodic())] {
        let r = report(&f)?;
        let (sw, run, _) = frontsim::start_doubling(&f, &r, 1.1 * r.w_star, &cfg).map_err(err)?;
        let p = frontsim::extract_profile_auto(&run, &sw, 41).map_err(err)?;
        ensure(p.m_fit.is_finite(), format!("{name}: M not finite"))?;
        let (g, e) = (sw.gamma, sw.epsilon);
        for (iz, &z) in p.z_grid.iter().enumerate() {
            let top = (-g * z).exp();
            for (ix, &v) in p.u[iz].iter().enumerate() {
                ensure(v <= top.min(1.0) + 1e-9, format!("{name}: U({z}, {}) = {v} above e^(-γz)", p.x_grid[ix]))?;
                ensure(
                    v >= top * (1.0 - p.m_fit * (-e * g * z).exp()) - 1e-12,
                    format!("{name}: U({z}) below the fitted lower bound"),
                )?;
                if iz > 0 {
                    ensure(v <= p.u[iz - 1][ix] + 1e-9, format!("{name}: U increases in z at z = {z}"))?;
                }
            }
        }
        ensure(p.sup_u_at_z_max < 1e-2, format!("{name}: sup U(z_max) = {}", p.sup_u_at_z_max))?;
        ensure(p.inf_u_at_z_min > 0.99, format!("{name}: inf U(z_min) = {}", p.inf_u_at_z_min))?;
        lines.push(format!(
            "{name} M={:.3} z∈[{:.2},{:.2}] U_end={:.1e}/{:.4}",
            p.m_fit,
            p.z_grid[0],
            p.z_grid[p.z_grid.len() - 1],
            p.sup_u_at_z_max,
            p.inf_u_at_z_min
        ));
    }
    Ok(lines.join(", "))
}

fn criterion_9() -> Check {
    let f = periodic();
    let r = report(&f)?;
    let s = frontsim::spread_from_compact(&f, &SpreadConfig::default()).map_err(err)?;
    ensure(s.liminf_speed >= 0.97 * r.w_star, format!("liminf {} < 0.97 w* = {}", s.liminf_speed, 0.97 * r.w_star))?;
    Ok(format!("liminf {:.4} vs w* {:.4} ({:+.2}%)", s.liminf_speed, r.w_star, 100.0 * (s.liminf_speed / r.w_star - 1.0)))
}

fn criterion_10() -> Check {
    let f = quasiperiodic();
    let est = eigen::lambda1(&f, &Lambda1Config::default()).map_err(err)?;
    let h = eigen::bounded_eigenfunction_diagnostic(&f, est.lambda1, 200.0, 0.05).map_err(err)?;
    ensure(h.bounded_verdict == BoundedVerdict::Plausible, format!("verdict {:?}, ratio {}", h.bounded_verdict, h.ratio))?;
    let lam = Lambda1Ref::from(&est);
    let curve = decay::mu_curve(&f, &decay::default_gamma_grid(lam), lam, &DecayOptions::default()).map_err(err)?;
    let m = curve.mu_lower_limit;
    ensure(m.contains_zero(), format!("μ̲ = {} ± {}", m.value, m.uncertainty))?;
    Ok(format!("ratio {:.3}, μ̲ = {:.4} ± {:.4}", h.ratio, m.value, m.uncertainty))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Check); 10] = [
        ("constant-coefficient minimal speed", 40, criterion_1),
        ("λ₁ monotone table", 5, criterion_2),
        ("μ structure", 30, criterion_3),
        ("dual-route identity", 120, criterion_4),
        ("zero-order shift", 60, criterion_5),
        ("sandwich certificate", 120, criterion_6),
        ("measured speed", 900, criterion_7),
        ("profile bounds", 300, criterion_8),
        ("spreading threshold", 180, criterion_9),
        ("bounded-eigenfunction regime", 300, criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*limit) => Err(format!("runtime {elapsed:.1?} over {limit} s")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{elapsed:.1?}] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{elapsed:.1?}] {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
