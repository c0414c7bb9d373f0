//! Command-line driver: JSON run configs, task dispatch, atomic artifact
//! writing and exit-code mapping.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coeff::{CoefficientField, FieldSpec};
use crate::decay::{self, DecayOptions};
use crate::eigen::{self, KpConfig, Lambda1Config};
use crate::error::{Error, Result};
use crate::frontsim::{self, FrontConfig, SpreadConfig};
use crate::numerics;
use crate::speed::{self, SpeedConfig, SpeedReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Eigen,
    MuCurve,
    Speed,
    Front,
    Profile,
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eigen => "eigen",
            Task::MuCurve => "mu-curve",
            Task::Speed => "speed",
            Task::Front => "front",
            Task::Profile => "profile",
            Task::Validate => "validate",
        }
    }
}

/// Every tunable number; omitted keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub grid_spacing: f64,
    pub lambda1_radii: Vec<f64>,
    pub lambda1_tolerance: f64,
    pub decay_left_end: f64,
    pub decay_min_radius: f64,
    pub decay_radius: Option<f64>,
    pub decay_ladder_levels: usize,
    pub gamma_values: Option<Vec<f64>>,
    pub gamma_max_factor: f64,
    pub gamma_scan_points: usize,
    pub golden_rel_tolerance: f64,
    pub kp_domain_half_length: f64,
    pub kp_reg_schedule: Vec<f64>,
    pub kp_tolerance: f64,
    pub kp_max_doublings: usize,
    pub kp_points: usize,
    pub kp_cross_check: bool,
    pub kp_p_values: Option<Vec<f64>>,
    pub bounded_domain_half_length: f64,
    /// Absolute target speed; overrides `front_speed_factor`.
    pub front_speed: Option<f64>,
    /// Target speed as a multiple of `w*`.
    pub front_speed_factor: f64,
    pub time_step: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub burn_in_fraction: f64,
    pub sandwich_tolerance: f64,
    pub monotone_tolerance: f64,
    pub snapshot_interval: f64,
    pub mean_windows: Vec<f64>,
    pub theta_reg_schedule: Vec<f64>,
    pub start_doubling: bool,
    pub profile_z_points: usize,
    pub spread_domain_half_length: f64,
    pub spread_t_end: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let l = Lambda1Config::default();
        let k = KpConfig::default();
        let f = FrontConfig::default();
        let d = DecayOptions::default();
        Numerics {
            grid_spacing: 0.05,
            lambda1_radii: l.r_schedule,
            lambda1_tolerance: l.tol,
            decay_left_end: d.x_left,
            decay_min_radius: d.min_radius,
            decay_radius: None,
            decay_ladder_levels: d.ladder,
            gamma_values: None,
            gamma_max_factor: 100.0,
            gamma_scan_points: 24,
            golden_rel_tolerance: 1e-6,
            kp_domain_half_length: k.half_length,
            kp_reg_schedule: k.reg_schedule,
            kp_tolerance: k.tol,
            kp_max_doublings: k.max_doublings,
            kp_points: 25,
            kp_cross_check: true,
            kp_p_values: None,
            bounded_domain_half_length: 100.0,
            front_speed: None,
            front_speed_factor: 1.1,
            time_step: f.dt,
            t_start: f.t_start,
            t_end: f.t_end,
            burn_in_fraction: f.burn_in_fraction,
            sandwich_tolerance: f.sandwich_tol,
            monotone_tolerance: f.monotone_tol,
            snapshot_interval: f.snapshot_every,
            mean_windows: f.windows,
            theta_reg_schedule: f.reg_schedule,
            start_doubling: true,
            profile_z_points: 41,
            spread_domain_half_length: 220.0,
            spread_t_end: 100.0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn positive_list(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    v.iter().try_for_each(|x| positive(name, *x))
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        positive("grid_spacing", self.grid_spacing)?;
        if self.grid_spacing > 0.5 {
            return Err(Error::Config(format!("grid_spacing {} exceeds 0.5", self.grid_spacing)));
        }
        positive_list("lambda1_radii", &self.lambda1_radii)?;
        if self.lambda1_radii.len() < 3 || self.lambda1_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("lambda1_radii needs at least 3 increasing radii".into()));
        }
        positive("lambda1_tolerance", self.lambda1_tolerance)?;
        positive("decay_min_radius", self.decay_min_radius)?;
        if let Some(r) = self.decay_radius {
            positive("decay_radius", r)?;
        }
        if self.decay_ladder_levels == 0 {
            return Err(Error::Config("decay_ladder_levels must be at least 1".into()));
        }
        if let Some(g) = &self.gamma_values {
            positive_list("gamma_values", g)?;
        }
        positive("gamma_max_factor", self.gamma_max_factor)?;
        if self.gamma_scan_points < 4 {
            return Err(Error::Config("gamma_scan_points must be at least 4".into()));
        }
        positive("golden_rel_tolerance", self.golden_rel_tolerance)?;
        positive("kp_domain_half_length", self.kp_domain_half_length)?;
        positive_list("kp_reg_schedule", &self.kp_reg_schedule)?;
        positive("kp_tolerance", self.kp_tolerance)?;
        if self.kp_points < 3 {
            return Err(Error::Config("kp_points must be at least 3".into()));
        }
        if let Some(p) = &self.kp_p_values {
            positive_list("kp_p_values", p)?;
        }
        positive("bounded_domain_half_length", self.bounded_domain_half_length)?;
        if let Some(w) = self.front_speed {
            positive("front_speed", w)?;
        }
        if !(self.front_speed_factor > 1.0 && self.front_speed_factor.is_finite()) {
            return Err(Error::Config(format!("front_speed_factor must exceed 1, got {}", self.front_speed_factor)));
        }
        positive("time_step", self.time_step)?;
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Config(format!("need t_start < t_end, got [{}, {}]", self.t_start, self.t_end)));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Config(format!("burn_in_fraction must lie in [0, 1), got {}", self.burn_in_fraction)));
        }
        positive("sandwich_tolerance", self.sandwich_tolerance)?;
        positive("monotone_tolerance", self.monotone_tolerance)?;
        positive("snapshot_interval", self.snapshot_interval)?;
        positive_list("mean_windows", &self.mean_windows)?;
        positive_list("theta_reg_schedule", &self.theta_reg_schedule)?;
        if self.profile_z_points < 3 {
            return Err(Error::Config("profile_z_points must be at least 3".into()));
        }
        positive("spread_domain_half_length", self.spread_domain_half_length)?;
        positive("spread_t_end", self.spread_t_end)?;
        Ok(())
    }

    pub fn lambda1_config(&self) -> Lambda1Config {
        Lambda1Config { h: self.grid_spacing, r_schedule: self.lambda1_radii.clone(), tol: self.lambda1_tolerance }
    }

    pub fn decay_options(&self) -> DecayOptions {
        DecayOptions {
            h: self.grid_spacing,
            x_left: self.decay_left_end,
            radius: self.decay_radius,
            min_radius: self.decay_min_radius,
            ladder: self.decay_ladder_levels,
        }
    }

    pub fn kp_config(&self) -> KpConfig {
        KpConfig {
            half_length: self.kp_domain_half_length,
            h: self.grid_spacing,
            reg_schedule: self.kp_reg_schedule.clone(),
            tol: self.kp_tolerance,
            max_doublings: self.kp_max_doublings,
        }
    }

    pub fn speed_config(&self) -> SpeedConfig {
        SpeedConfig {
            lambda1: self.lambda1_config(),
            decay: self.decay_options(),
            gamma_max_factor: self.gamma_max_factor,
            scan_points: self.gamma_scan_points,
            golden_rel_tol: self.golden_rel_tolerance,
            kp: self.kp_config(),
            kp_points: self.kp_points,
            kp_cross_check: self.kp_cross_check,
        }
    }

    pub fn front_config(&self) -> FrontConfig {
        FrontConfig {
            h: self.grid_spacing,
            dt: self.time_step,
            t_start: self.t_start,
            t_end: self.t_end,
            burn_in_fraction: self.burn_in_fraction,
            measure_from: None,
            reg_schedule: self.theta_reg_schedule.clone(),
            sandwich_tol: self.sandwich_tolerance,
            monotone_tol: self.monotone_tolerance,
            snapshot_every: self.snapshot_interval,
            windows: self.mean_windows.clone(),
        }
    }

    pub fn spread_config(&self) -> SpreadConfig {
        SpreadConfig {
            half_width: self.spread_domain_half_length,
            h: self.grid_spacing,
            dt: self.time_step,
            t_end: self.spread_t_end,
            ..SpreadConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub field: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Parser)]
#[command(name = "apfront", version, about = "Critical speeds and transition fronts for KPP equations with almost periodic coefficients")]
pub struct Cli {
    #[arg(value_enum)]
    pub task: Task,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent sub-tasks.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Artifacts collected in memory and written once the task succeeds.
#[derive(Default)]
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    results: serde_json::Map<String, Value>,
}

impl Artifacts {
    fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
        let bytes = csv_bytes(header, rows)?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn result(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }
}

fn field_from(spec: &FieldSpec) -> Result<CoefficientField> {
    CoefficientField::new(spec.clone()).map_err(|e| Error::Config(format!("invalid field: {e}")))
}

fn default_p_values() -> Vec<f64> {
    numerics::geomspace(0.05, 5.0, 25)
}

fn run_eigen(field: &CoefficientField, n: &Numerics, out: &mut Artifacts) -> Result<()> {
    let est = eigen::lambda1(field, &n.lambda1_config())?;
    let ps = n.kp_p_values.clone().unwrap_or_else(default_p_values);
    let curve = eigen::kp_curve(field, &ps, est.lambda1, &n.kp_config())?;
    let be = eigen::bounded_eigenfunction_diagnostic(field, est.lambda1, n.bounded_domain_half_length, n.grid_spacing)?;
    out.csv("lambda1_table.csv", &["R", "lambda1_R"], est.samples.iter().cloned())?;
    out.csv(
        "kp_curve.csv",
        &["p", "k_p", "eps_reg_final", "residual"],
        curve.entries.iter().map(|e| (e.p, e.k_p, e.eps_reg_final(), e.bracket_half_width)),
    )?;
    out.json(
        "eigen.json",
        &json!({
            "lambda1": est.lambda1,
            "tol": est.tol,
            "h": est.h,
            "max_decrease": est.max_decrease,
            "samples": est.samples,
            "kp_min_k_over_p": curve.min_k_over_p(),
            "kp_convexity_defect": curve.convexity_defect(),
            "kp_warnings": curve.warnings,
            "bounded_eigenfunction": {
                "lambda_used": be.lambda_used,
                "slope": be.slope,
                "ratio": be.ratio,
                "bounded_verdict": be.bounded_verdict,
            },
        }),
    )?;
    out.result("lambda1", json!(est.lambda1));
    out.result("bounded_verdict", json!(be.bounded_verdict));
    Ok(())
}

fn run_mu_curve(field: &CoefficientField, n: &Numerics, out: &mut Artifacts) -> Result<()> {
    let est = eigen::lambda1(field, &n.lambda1_config())?;
    let lam = decay::Lambda1Ref::from(&est);
    let gammas = n.gamma_values.clone().unwrap_or_else(|| decay::default_gamma_grid(lam));
    let curve = decay::mu_curve(field, &gammas, lam, &n.decay_options())?;
    out.csv(
        "mu_curve.csv",
        &["gamma", "mu", "mu_uncertainty", "lo_bound", "up_bound", "flags"],
        curve
            .points
            .iter()
            .map(|p| (p.gamma, p.mu.value, p.mu.uncertainty, p.lo_bound, p.up_bound, p.flags.join(";"))),
    )?;
    out.json("mu_curve.json", &curve)?;
    out.result("lambda1", json!(est.lambda1));
    out.result("mu_lower_limit", json!(curve.mu_lower_limit));
    out.result("warnings", json!(curve.warnings));
    Ok(())
}

fn speed_artifacts(report: &SpeedReport, out: &mut Artifacts) -> Result<()> {
    out.json("speed_report.json", report)?;
    let mut rows: Vec<(&str, f64, f64)> = report.scan.iter().map(|r| ("gamma_over_mu", r.gamma, r.ratio)).collect();
    if let Some(kp) = &report.kp_cross_check {
        rows.extend(kp.table.iter().map(|&(p, _, r)| ("kp_over_p", p, r)));
    }
    out.csv("speed_curves.csv", &["curve", "x", "y"], rows)?;
    out.result("w_star", json!(report.w_star));
    Ok(())
}

fn target_speed(n: &Numerics, report: &SpeedReport) -> f64 {
    n.front_speed.unwrap_or(n.front_speed_factor * report.w_star)
}

struct FrontRun {
    sandwich: frontsim::SandwichSpec,
    state: frontsim::FrontState,
    doubling: Option<frontsim::StartDoubling>,
}

fn front_run(field: &CoefficientField, n: &Numerics, report: &SpeedReport) -> Result<FrontRun> {
    let cfg = n.front_config();
    let w = target_speed(n, report);
    if n.start_doubling {
        let (sandwich, state, d) = frontsim::start_doubling(field, report, w, &cfg)?;
        Ok(FrontRun { sandwich, state, doubling: Some(d) })
    } else {
        let sandwich = frontsim::build_sandwich(field, report, w, (cfg.t_start, cfg.t_end), &cfg)?;
        let state = frontsim::march_front(field, &sandwich, &cfg)?;
        Ok(FrontRun { sandwich, state, doubling: None })
    }
}

fn sandwich_summary(sw: &frontsim::SandwichSpec) -> Value {
    json!({
        "w": sw.w,
        "gamma": sw.gamma,
        "epsilon": sw.epsilon,
        "kappa": sw.kappa,
        "delta": sw.delta,
        "A": sw.a_amp,
        "mu_gamma": sw.mu_gamma,
        "mu_gamma_kappa": sw.mu_gamma_kappa,
        "inf_theta": sw.inf_theta,
        "sup_theta": sw.sup_theta,
        "certificate_min": sw.theta_build.certificate_min,
        "expanded_certificate_min": sw.theta_build.expanded_certificate_min,
        "zeta_identity_residual": sw.theta_build.zeta_identity_residual,
        "eps_reg_used": sw.theta_build.eps_reg_used,
        "grid": sw.grid,
        "t_range": sw.t_range,
    })
}

fn front_artifacts(run: &FrontRun, out: &mut Artifacts) -> Result<()> {
    let sw = &run.sandwich;
    let st = &run.state;
    out.csv("front_trace.csv", &["t", "X", "avg_window_speed"], st.trace_rows())?;
    out.csv(
        "sandwich_theta.csv",
        &["x", "theta", "log_phi", "log_zeta"],
        (0..sw.grid.n).map(|i| (sw.grid.x(i), sw.theta[i], sw.log_phi[i], sw.log_zeta[i])),
    )?;
    let target = sw.gamma / sw.mu_gamma;
    let summary = json!({
        "sandwich": sandwich_summary(sw),
        "measured": st.measured,
        "target_speed": target,
        "relative_speed_error": (st.measured.average_speed - target) / target,
        "clock_rate": st.clock_rate,
        "dt": st.dt,
        "steps": st.steps,
        "burn_in": st.burn_in,
        "sandwich_violation": st.sandwich_violation,
        "transient_decrease": st.transient_decrease,
        "late_decrease": st.late_decrease,
        "start_doubling": run.doubling,
    });
    out.json("front.json", &summary)?;
    out.result("average_speed", json!(st.measured.average_speed));
    out.result("target_speed", json!(target));
    Ok(())
}

fn run_profile(field: &CoefficientField, n: &Numerics, out: &mut Artifacts) -> Result<()> {
    let report = speed::speed_report(field, &n.speed_config())?;
    let run = front_run(field, n, &report)?;
    front_artifacts(&run, out)?;
    let p = frontsim::extract_profile_auto(&run.state, &run.sandwich, n.profile_z_points)?;
    let mut rows = Vec::with_capacity(p.z_grid.len() * p.x_grid.len());
    for (iz, z) in p.z_grid.iter().enumerate() {
        for (ix, x) in p.x_grid.iter().enumerate() {
            rows.push((*z, *x, p.u[iz][ix]));
        }
    }
    out.csv("profile_U.csv", &["z", "x", "U"], rows)?;
    out.json(
        "profile.json",
        &json!({
            "M": p.m_fit,
            "z_range": [p.z_grid[0], p.z_grid[p.z_grid.len() - 1]],
            "x_range": [p.x_grid[0], p.x_grid[p.x_grid.len() - 1]],
            "monotonicity_defect": p.monotonicity_defect,
            "upper_excess": p.upper_excess,
            "sup_U_at_z_max": p.sup_u_at_z_max,
            "inf_U_at_z_min": p.inf_u_at_z_min,
            "ap_reports": p.ap_reports.iter().map(|(z, r)| json!({
                "z0": z,
                "epsilon": r.epsilon,
                "count": r.almost_periods.len(),
                "first": r.almost_periods.iter().take(10).collect::<Vec<_>>(),
                "max_gap": r.max_gap,
            })).collect::<Vec<_>>(),
        }),
    )?;
    out.result("M", json!(p.m_fit));
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(checks: &mut Vec<Check>, name: &str, passed: bool, detail: String) {
    checks.push(Check { name: name.to_string(), passed, detail });
}

/// Closed-form oracles and the structural checks on the configured field.
pub fn validation_checks(field: &CoefficientField, n: &Numerics) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let k = frontsim::solve_kappa(|g| Ok((g - 1.0f64).sqrt()), 1.25, 0.2)?;
    check(&mut checks, "kappa_closed_form", (k - 0.11).abs() < 1e-9, format!("kappa = {k}, expected 0.11"));
    let a = frontsim::sandwich_amplitude(1.0, 0.2, 0.07, 1.0);
    let a_exact = 0.07f64.powf(-0.2);
    check(&mut checks, "amplitude_closed_form", (a - a_exact).abs() < 1e-12, format!("A = {a}, expected {a_exact}"));

    let b = field.bounds();
    let est = eigen::lambda1(field, &n.lambda1_config())?;
    let slack = 10.0 * n.grid_spacing * n.grid_spacing;
    check(
        &mut checks,
        "lambda1_monotone",
        est.is_monotone(slack),
        format!("max decrease {} (slack {slack})", est.max_decrease),
    );
    check(
        &mut checks,
        "lambda1_above_inf_c",
        est.lambda1 >= b.c_min - 1e-3,
        format!("lambda1 = {}, inf c = {}", est.lambda1, b.c_min),
    );

    let lam = decay::Lambda1Ref::from(&est);
    let gammas = n.gamma_values.clone().unwrap_or_else(|| decay::default_gamma_grid(lam));
    let curve = decay::mu_curve(field, &gammas, lam, &n.decay_options())?;
    let structural = ["below_lower_bound", "nonincreasing", "nonconcave", "sigma_bound"];
    let bad: Vec<String> = curve
        .points
        .iter()
        .flat_map(|p| p.flags.iter().filter(|f| structural.contains(&f.as_str())).map(move |f| format!("{f}@{}", p.gamma)))
        .collect();
    check(&mut checks, "mu_structure", bad.is_empty(), format!("flags: {bad:?}"));

    let report = speed::speed_report_with(field, &est, &n.speed_config())?;
    if let Some(kp) = &report.kp_cross_check {
        check(
            &mut checks,
            "dual_route",
            kp.discrepancy <= 0.01,
            format!("w* = {}, min k_p/p = {}, discrepancy {}", report.w_star, kp.w_kp, kp.discrepancy),
        );
    }
    if let FieldSpec::Constant { a, c } = field.spec() {
        let exact = 2.0 * (a * c).sqrt();
        let rel = (report.w_star - exact).abs() / exact;
        check(&mut checks, "constant_w_star", rel <= 0.005, format!("w* = {}, 2√(ac) = {exact}", report.w_star));
    }

    let cfg = n.front_config();
    let w = target_speed(n, &report);
    let front = frontsim::build_sandwich(field, &report, w, (cfg.t_start, cfg.t_end), &cfg)
        .and_then(|sw| frontsim::march_front(field, &sw, &cfg).map(|st| (sw, st)));
    match front {
        Ok((sw, st)) => {
            check(
                &mut checks,
                "sandwich_certificate",
                sw.theta_build.certificate_min >= sw.delta && sw.kappa > 0.0 && sw.kappa < sw.epsilon * sw.gamma,
                format!("min −Mθ/θ = {}, δ = {}, κ = {}", sw.theta_build.certificate_min, sw.delta, sw.kappa),
            );
            let target = sw.gamma / sw.mu_gamma;
            let rel = (st.measured.average_speed - target).abs() / target;
            check(
                &mut checks,
                "front_speed",
                rel <= 0.02,
                format!("measured {}, target {target}", st.measured.average_speed),
            );
        }
        Err(e) => check(&mut checks, "front", false, e.to_string()),
    }
    Ok(checks)
}

fn run_validate(field: &CoefficientField, n: &Numerics, out: &mut Artifacts) -> Result<()> {
    let checks = validation_checks(field, n)?;
    out.json("validation.json", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    out.result("checks", json!(checks.len()));
    out.result("failed", json!(failed));
    Ok(())
}

/// Outcome of one run, before the process exits.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub error: Option<Value>,
}

pub fn error_json(err: &Error, code: i32) -> Value {
    let mut v = json!({
        "status": "error",
        "exit_code": code,
        "kind": err.kind(),
        "message": err.to_string(),
    });
    match err {
        Error::Convergence { table, .. } => v["table"] = json!(table),
        Error::Solver { residuals, .. } => {
            let worst = residuals.iter().cloned().fold(f64::INFINITY, f64::min);
            v["residual_count"] = json!(residuals.len());
            v["residual_min"] = json!(worst);
        }
        _ => {}
    }
    v
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_COMPUTATION,
    }
}

fn resolve(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(t) = cfg.task {
        if t != cli.task {
            return Err(Error::Config(format!(
                "config task '{}' does not match subcommand '{}'",
                t.name(),
                cli.task.name()
            )));
        }
    }
    cfg.numerics.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    Ok((cfg, out))
}

fn execute(cli: &Cli, cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let field = field_from(&cfg.field)?;
    let n = &cfg.numerics;
    let mut art = Artifacts::default();
    match cli.task {
        Task::Eigen => run_eigen(&field, n, &mut art)?,
        Task::MuCurve => run_mu_curve(&field, n, &mut art)?,
        Task::Speed => {
            let report = speed::speed_report(&field, &n.speed_config())?;
            speed_artifacts(&report, &mut art)?;
        }
        Task::Front => {
            let report = speed::speed_report(&field, &n.speed_config())?;
            speed_artifacts(&report, &mut art)?;
            let run = front_run(&field, n, &report)?;
            front_artifacts(&run, &mut art)?;
        }
        Task::Profile => run_profile(&field, n, &mut art)?,
        Task::Validate => run_validate(&field, n, &mut art)?,
    }
    fs::create_dir_all(out_dir)?;
    for (name, bytes) in &art.files {
        write_atomic(out_dir, name, bytes)?;
    }
    let resolved = RunConfig { task: Some(cli.task), output_dir: Some(out_dir.to_path_buf()), ..cfg.clone() };
    let manifest = json!({
        "tool": "apfront",
        "version": env!("CARGO_PKG_VERSION"),
        "task": cli.task.name(),
        "threads": cli.threads,
        "config": resolved,
        "resolved": {
            "speed": n.speed_config(),
            "front": n.front_config(),
            "spread": n.spread_config(),
        },
        "results": art.results,
        "outputs": art.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
    });
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(out_dir, "manifest.json", &bytes)?;
    if cli.task == Task::Validate {
        if let Some(Value::Array(failed)) = art.results.get("failed") {
            if !failed.is_empty() {
                return Err(Error::Range(format!("validation checks failed: {failed:?}")));
            }
        }
    }
    Ok(())
}

/// Runs one invocation; errors are reported as JSON and mapped to exit codes.
pub fn run(cli: &Cli) -> Outcome {
    let (cfg, out_dir) = match resolve(cli) {
        Ok(v) => v,
        Err(e) => {
            let code = exit_code(&e);
            return Outcome { code, error: Some(error_json(&e, code)) };
        }
    };
    if let Some(t) = cli.threads {
        crate::par::set_threads(t);
    }
    match execute(cli, &cfg, &out_dir) {
        Ok(()) => Outcome { code: EXIT_OK, error: None },
        Err(e) => {
            let code = exit_code(&e);
            let v = error_json(&e, code);
            if fs::create_dir_all(&out_dir).is_ok() {
                let mut bytes = serde_json::to_vec_pretty(&v).unwrap_or_default();
                bytes.push(b'\n');
                let _ = write_atomic(&out_dir, "error.json", &bytes);
            }
            Outcome { code, error: Some(v) }
        }
    }
}

/// Entry point for the binary: parses `args`, runs, prints any error JSON to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            let v = json!({
                "status": "error",
                "exit_code": EXIT_CONFIG,
                "kind": "usage",
                "message": e.to_string(),
            });
            eprintln!("{v}");
            return EXIT_CONFIG;
        }
    };
    let outcome = run(&cli);
    if let Some(v) = &outcome.error {
        eprintln!("{v}");
    }
    outcome.code
}
