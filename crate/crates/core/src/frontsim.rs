//! Sub/supersolution sandwich, time marching of the front, interface
//! tracking, speed measurement and the moving-frame profile `U(z, x)`.
//!
//! With `ζ(t, x) = φ_γ(x) e^{γt}` the pair is
//! `ū = min(1, ζ)` and `u̲ = max(0, ζ − A θ ζ^{1+ε})` (the `θ` factor absorbs
//! `φ_{γ+κ}/φ_γ^{1+ε}` through the certificate on `M`).
//!
//! The marcher treats diffusion and the linear part of the reaction
//! implicitly and the quadratic part explicitly:
//! `(I − dt(D + c)) uⁿ⁺¹ = uⁿ − dt c (uⁿ)²`. This is monotone for
//! `dt ≤ 1/(2 sup c)`, and `φ_γ ρⁿ` with `ρ = 1/(1 − γ dt)` is an exact
//! discrete solution of the linear part, so `ū` is an exact discrete
//! supersolution once time is measured by the clock `ln ρ / dt`.

use serde::{Deserialize, Serialize};

use crate::coeff::{self, APReport, CoefficientField, Grid1D};
use crate::decay::{self, DecayOptions, DecayProfile};
use crate::eigen::{self, Closure, RegStep, Stencil};
use crate::error::{Error, Result};
use crate::numerics;
use crate::speed::{self, GammaChoice, SpeedReport};

/// `ln 10¹⁰`.
const TEN_DECADES: f64 = 23.025_850_929_940_457;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontConfig {
    pub h: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Fraction of the span discarded before measuring (and before time
    /// monotonicity is enforced).
    pub burn_in_fraction: f64,
    /// Measure from this time instead of `t_start + burn_in` when set.
    pub measure_from: Option<f64>,
    pub reg_schedule: Vec<f64>,
    pub sandwich_tol: f64,
    pub monotone_tol: f64,
    pub snapshot_every: f64,
    pub windows: Vec<f64>,
}

impl Default for FrontConfig {
    fn default() -> Self {
        FrontConfig {
            h: 0.05,
            dt: 0.005,
            t_start: -20.0,
            t_end: 20.0,
            burn_in_fraction: 0.2,
            measure_from: None,
            reg_schedule: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            sandwich_tol: 1e-6,
            monotone_tol: 1e-6,
            snapshot_every: 0.1,
            windows: vec![10.0, 20.0, 40.0],
        }
    }
}

impl FrontConfig {
    pub fn burn_in(&self) -> f64 {
        self.burn_in_fraction * (self.t_end - self.t_start)
    }

    fn validate(&self, c_max: f64) -> Result<()> {
        if !(self.h > 0.0) || !(self.dt > 0.0) || !(self.t_end > self.t_start) {
            return Err(Error::Argument("front run needs h > 0, dt > 0 and t_end > t_start".into()));
        }
        if self.dt > 1.0 / (2.0 * c_max) {
            return Err(Error::Argument(format!(
                "dt = {} exceeds the monotonicity limit 1/(2 sup c) = {}",
                self.dt,
                1.0 / (2.0 * c_max)
            )));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::Argument("burn_in_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `κ ∈ (0, εγ)` with `1/μ(γ) = (1+ε)/μ(γ+κ)`.
pub fn solve_kappa<F>(mut mu_fn: F, gamma: f64, epsilon: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(epsilon > 0.0 && epsilon < 1.0) || !(gamma > 0.0) {
        return Err(Error::Argument(format!("need ε ∈ (0,1) and γ > 0, got ε = {epsilon}, γ = {gamma}")));
    }
    let inv_mu = 1.0 / mu_fn(gamma)?;
    let mut f = |k: f64| -> Result<f64> { Ok(inv_mu - (1.0 + epsilon) / mu_fn(gamma + k)?) };
    let top = epsilon * gamma;
    let f_top = f(top)?;
    if !(f_top > 0.0) {
        return Err(Error::Range(format!(
            "F(εγ) = {f_top} is not positive: ε = {epsilon} leaves no room, shrink ε"
        )));
    }
    numerics::bisect(f, 0.0, top, 1e-12 * top.max(1.0))
}

/// Result of the `θ` construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaBuild {
    /// Normalized to `max θ = 1`.
    pub theta: Vec<f64>,
    pub delta: f64,
    /// `min −(Mθ)/θ` over all nodes, ends closed along `ζ`.
    pub certificate_min: f64,
    pub eps_reg_used: f64,
    pub trace: Vec<RegStep>,
    /// `max |(Mζ)/ζ − (κ − εγ)|` over interior nodes.
    pub zeta_identity_residual: f64,
    /// `min −(Mθ)/θ` with `M` expanded as `aθ'' + (a' − 2as)θ' + (as² − (as)' + c − (1+ε)γ)θ`.
    pub expanded_certificate_min: f64,
}

fn operator_m(field: &CoefficientField, prof: &DecayProfile, epsilon: f64, range: (usize, usize)) -> Result<Stencil> {
    let (i0, i1) = range;
    if i0 < 1 || i1 + 2 >= prof.grid.n || i1 < i0 + 4 {
        return Err(Error::Argument(format!("working range {i0}..={i1} does not fit the profile grid")));
    }
    let k = field.sample(&prof.grid.sub(i0 - 1, i1 + 1)?)?;
    let h2 = k.h * k.h;
    let q = 1.0 + epsilon;
    let (mut west, mut center, mut east) = (Vec::new(), Vec::new(), Vec::new());
    for i in i0..=i1 {
        let j = i - i0 + 1;
        west.push(k.a_face[j] / h2 * (-q * prof.log_ratio[i - 1]).exp());
        east.push(k.a_face[j + 1] / h2 * (q * prof.log_ratio[i]).exp());
        center.push(-(k.a_face[j] + k.a_face[j + 1]) / h2 + k.c[j] - q * prof.gamma);
    }
    Ok(Stencil { west, center, east, closure: Closure::Reflecting })
}

/// `(Mv)_j / v_j` from `ln v`; end rows only see the neighbour they have.
fn log_ratio_at(stencil: &Stencil, log_v: &[f64], j: usize) -> f64 {
    let n = log_v.len();
    let mut r = stencil.center[j];
    if j > 0 {
        r += stencil.west[j] * (log_v[j - 1] - log_v[j]).exp();
    }
    if j + 1 < n {
        r += stencil.east[j] * (log_v[j + 1] - log_v[j]).exp();
    }
    r
}

/// `θ` and `δ = (εγ − κ)/2` certifying `−Mθ ≥ δθ` for
/// `M = L_{(1+ε)σ_γ} − (1+ε)γ` on the working range of the profiles.
pub fn build_theta(
    field: &CoefficientField,
    epsilon: f64,
    kappa: f64,
    prof_g: &DecayProfile,
    prof_gk: &DecayProfile,
    range: (usize, usize),
    schedule: &[f64],
) -> Result<ThetaBuild> {
    if prof_g.grid != prof_gk.grid {
        return Err(Error::Argument("decay profiles must share a grid".into()));
    }
    let gamma = prof_g.gamma;
    let margin = epsilon * gamma - kappa;
    if !(kappa > 0.0 && margin > 0.0) {
        return Err(Error::Argument(format!("κ = {kappa} outside (0, εγ = {})", epsilon * gamma)));
    }
    let delta = 0.5 * margin;
    let m = operator_m(field, prof_g, epsilon, range)?;
    let len = m.len();
    let (i0, i1) = range;

    let log_zeta: Vec<f64> = (i0..=i1)
        .map(|i| prof_gk.log_phi[i] - (1.0 + epsilon) * prof_g.log_phi[i])
        .collect();
    let zeta_identity_residual = (1..len - 1)
        .map(|j| (log_ratio_at(&m, &log_zeta, j) - (kappa - epsilon * gamma)).abs())
        .fold(0.0, f64::max);

    // Ends take ghost values along ζ: u_{-1} − u_0 = ln ζ_{-1} − ln ζ_0 (same on the right).
    let lz = |i: usize| prof_gk.log_phi[i] - (1.0 + epsilon) * prof_g.log_phi[i];
    let mut m = m;
    m.center[0] += m.west[0] * (lz(i0 - 1) - lz(i0)).exp();
    m.west[0] = 0.0;
    m.center[len - 1] += m.east[len - 1] * (lz(i1 + 1) - lz(i1)).exp();
    m.east[len - 1] = 0.0;
    let mean_c = (0..len).map(|j| m.west[j] + m.center[j] + m.east[j]).sum::<f64>() / len as f64;
    let mut u = vec![mean_c / schedule[0]; len];
    let mut prev = schedule[0];
    let mut trace = Vec::new();
    for &eps in schedule {
        let guess = u.iter().map(|v| v * prev / eps).collect();
        let (sol, iters, res) = eigen::solve_regularized(&m, eps, guess)?;
        let (lo, hi) = sol.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(eps * v), hi.max(eps * v)));
        trace.push(RegStep { eps_reg: eps, inf_eu: lo, sup_eu: hi, newton_iterations: iters, residual: res });
        u = sol;
        prev = eps;
        let cert = (0..len).map(|j| -log_ratio_at(&m, &u, j)).fold(f64::INFINITY, f64::min);
        if cert >= delta {
            let top = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let theta: Vec<f64> = u.iter().map(|v| (v - top).exp()).collect();
            let expanded = expanded_certificate(field, prof_g, epsilon, range, &theta)?;
            return Ok(ThetaBuild {
                theta,
                delta,
                certificate_min: cert,
                eps_reg_used: eps,
                trace,
                zeta_identity_residual,
                expanded_certificate_min: expanded,
            });
        }
    }
    let cert = (0..len).map(|j| -log_ratio_at(&m, &u, j)).collect::<Vec<_>>();
    Err(Error::Solver {
        message: format!(
            "certificate −Mθ ≥ δθ fails at the smallest ε_reg (δ = {delta}, min = {})",
            cert.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
        residuals: cert,
    })
}

fn expanded_certificate(
    field: &CoefficientField,
    prof: &DecayProfile,
    epsilon: f64,
    range: (usize, usize),
    theta: &[f64],
) -> Result<f64> {
    let (i0, i1) = range;
    let h = prof.grid.h();
    let q = 1.0 + epsilon;
    let mut worst = f64::INFINITY;
    for i in i0 + 1..i1 {
        let j = i - i0;
        let k = field.eval(prof.grid.x(i))?;
        let s = q * prof.sigma[i];
        let as_l = field.a(prof.grid.x(i - 1))? * q * prof.sigma[i - 1];
        let as_r = field.a(prof.grid.x(i + 1))? * q * prof.sigma[i + 1];
        let d1 = (theta[j + 1] - theta[j - 1]) / (2.0 * h);
        let d2 = (theta[j + 1] - 2.0 * theta[j] + theta[j - 1]) / (h * h);
        let lt = k.a * d2 + (k.a_prime - 2.0 * k.a * s) * d1
            + (k.a * s * s - (as_r - as_l) / (2.0 * h) + k.c - q * prof.gamma) * theta[j];
        worst = worst.min(-lt / theta[j]);
    }
    Ok(worst)
}

/// The constructed pair `(ū, u̲)` on the working grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichSpec {
    pub w: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
    #[serde(rename = "A")]
    pub a_amp: f64,
    pub mu_gamma: f64,
    pub mu_gamma_kappa: f64,
    pub grid: Grid1D,
    pub log_phi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub log_zeta: Vec<f64>,
    pub theta: Vec<f64>,
    pub inf_theta: f64,
    pub sup_theta: f64,
    pub theta_build: ThetaBuild,
    /// Times the grid was sized for.
    pub t_range: (f64, f64),
}

impl SandwichSpec {
    /// `ū` at node `i` when `γt` equals `clock`.
    fn upper_clock(&self, clock: f64, i: usize) -> f64 {
        let l = self.log_phi[i] + clock;
        if l >= 0.0 {
            1.0
        } else {
            l.exp()
        }
    }

    fn lower_clock(&self, clock: f64, i: usize) -> f64 {
        let l = self.log_phi[i] + clock;
        let f = self.a_amp * self.theta[i] * (self.epsilon * l).exp();
        if f >= 1.0 {
            0.0
        } else {
            l.exp() * (1.0 - f)
        }
    }

    pub fn upper(&self, t: f64, i: usize) -> f64 {
        self.upper_clock(self.gamma * t, i)
    }

    pub fn lower(&self, t: f64, i: usize) -> f64 {
        self.lower_clock(self.gamma * t, i)
    }

    /// `sup_x u̲(t, ·)`, attained where `ζ^ε = 1/((1+ε)Aθ)`.
    pub fn lower_sup(&self) -> f64 {
        let e = self.epsilon;
        (1.0 / ((1.0 + e) * self.a_amp * self.inf_theta)).powf(1.0 / e) * e / (1.0 + e)
    }
}

/// `A = max(sup c^ε/(δ^ε inf θ), smallest A with sup u̲ < 1)`.
pub fn sandwich_amplitude(c_max: f64, epsilon: f64, delta: f64, inf_theta: f64) -> f64 {
    let from_c = c_max.powf(epsilon) / (delta.powf(epsilon) * inf_theta);
    let below_one = (epsilon / (1.0 + epsilon)).powf(epsilon) / ((1.0 + epsilon) * inf_theta);
    from_c.max(below_one * (1.0 + 1e-9))
}

/// Builds the sandwich for a target speed `w`, on a grid wide enough for
/// times `t_range`.
pub fn build_sandwich(
    field: &CoefficientField,
    report: &SpeedReport,
    w: f64,
    t_range: (f64, f64),
    cfg: &FrontConfig,
) -> Result<SandwichSpec> {
    let decay_opts = DecayOptions { h: cfg.h, ..DecayOptions::default() };
    let choice = speed::gamma_for_speed(field, w, report, &decay_opts)?;
    build_sandwich_for(field, report, &choice, t_range, cfg)
}

pub fn build_sandwich_for(
    field: &CoefficientField,
    report: &SpeedReport,
    choice: &GammaChoice,
    t_range: (f64, f64),
    cfg: &FrontConfig,
) -> Result<SandwichSpec> {
    let lam = report.lambda1_ref();
    let (gamma, epsilon) = (choice.gamma, choice.epsilon);
    let auto = DecayOptions { h: cfg.h, ..DecayOptions::default() };
    let kappa = solve_kappa(|g| Ok(decay::mu(field, g, lam, &auto)?.value), gamma, epsilon)?;

    let mu = choice.mu_gamma.value;
    let need_left = gamma * (-t_range.0).max(0.0) + TEN_DECADES + 5.0;
    let need_right = TEN_DECADES + gamma * t_range.1.max(0.0);
    let mut x_left = -(need_left / mu * 1.3 + 10.0);
    let mut x_right = need_right / mu * 1.3 + 10.0;
    for _ in 0..6 {
        let radius = x_right + 15.0 / mu + 20.0;
        let opts = DecayOptions { h: cfg.h, x_left, radius: Some(radius), ..DecayOptions::default() };
        let prof_g = decay::phi_gamma(field, gamma, lam, &opts)?;
        let i_l = prof_g.log_phi.iter().rposition(|&l| l >= need_left);
        let i_r = (prof_g.zero_index..prof_g.grid.n - 1).find(|&i| {
            prof_g.log_phi[i..prof_g.grid.nearest(x_right).max(i)].iter().all(|&l| l < -need_right)
                && prof_g.log_phi[i] < -need_right
        });
        let (i_l, i_r) = match (i_l, i_r) {
            (Some(a), Some(b)) if a >= 1 && b + 2 < prof_g.grid.nearest(x_right + 0.5 * (radius - x_right)) => (a, b),
            (l, r) => {
                if l.is_none() || l == Some(0) {
                    x_left *= 1.5;
                }
                if r.is_none() {
                    x_right *= 1.5;
                } else {
                    x_right += 20.0;
                }
                continue;
            }
        };
        let prof_gk = decay::phi_gamma(field, gamma + kappa, lam, &opts)?;
        let range = (i_l, i_r);
        let tb = build_theta(field, epsilon, kappa, &prof_g, &prof_gk, range, &cfg.reg_schedule)?;
        let inf_theta = tb.theta.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup_theta = tb.theta.iter().cloned().fold(0.0, f64::max);
        let a_amp = sandwich_amplitude(field.bounds().c_max, epsilon, tb.delta, inf_theta);
        return Ok(SandwichSpec {
            w: choice.w,
            gamma,
            epsilon,
            kappa,
            delta: tb.delta,
            a_amp,
            mu_gamma: mu,
            mu_gamma_kappa: prof_gk.mu.value,
            grid: prof_g.grid.sub(i_l, i_r)?,
            log_phi: prof_g.log_phi[i_l..=i_r].to_vec(),
            sigma: prof_g.sigma[i_l..=i_r].to_vec(),
            log_zeta: (i_l..=i_r).map(|i| prof_gk.log_phi[i] - (1.0 + epsilon) * prof_g.log_phi[i]).collect(),
            theta: tb.theta.clone(),
            inf_theta,
            sup_theta,
            theta_build: tb,
            t_range,
        });
    }
    Err(Error::Domain(format!("could not size the front grid for γ = {gamma} and t ∈ {t_range:?}")))
}

/// One implicit/explicit step on a fixed grid with Dirichlet ends.
#[derive(Debug, Clone)]
pub struct Marcher {
    dt: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    west: Vec<f64>,
    east: Vec<f64>,
    c: Vec<f64>,
}

impl Marcher {
    pub fn new(field: &CoefficientField, grid: &Grid1D, dt: f64) -> Result<Self> {
        let k = field.sample(grid)?;
        let n = grid.n;
        let h2 = k.h * k.h;
        let m = n - 2;
        let (mut lower, mut diag, mut upper) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let mut west = vec![0.0; m];
        let mut east = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            west[j] = dt * k.a_face[i] / h2;
            east[j] = dt * k.a_face[i + 1] / h2;
            diag[j] = 1.0 + west[j] + east[j] - dt * k.c[i];
            lower[j] = -west[j];
            upper[j] = -east[j];
        }
        Ok(Marcher { dt, lower, diag, upper, west, east, c: k.c })
    }

    /// Growth factor per step of `φ_γ` under the linear part.
    pub fn growth(&self, gamma: f64) -> f64 {
        1.0 / (1.0 - gamma * self.dt)
    }

    /// Advances `u` (including boundary nodes) to the next step.
    pub fn step(&self, u: &mut [f64], left: f64, right: f64) -> Result<()> {
        let n = u.len();
        let m = n - 2;
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            rhs[j] = u[i] - self.dt * self.c[i] * u[i] * u[i];
        }
        rhs[0] += self.west[0] * left;
        rhs[m - 1] += self.east[m - 1] * right;
        let v = numerics::thomas(&self.lower, &self.diag, &self.upper, &rhs)?;
        u[0] = left;
        // The exact update stays in [0, 1]; trim roundoff above 1.
        for (dst, x) in u[1..n - 1].iter_mut().zip(v) {
            *dst = x.min(1.0);
        }
        u[n - 1] = right;
        Ok(())
    }
}

/// Rightmost crossing of the level `1/2`, linearly interpolated.
pub fn interface(grid: &Grid1D, u: &[f64]) -> Option<f64> {
    let i = (0..u.len() - 1).rev().find(|&i| u[i] >= 0.5 && u[i + 1] < 0.5)?;
    let t = (u[i] - 0.5) / (u[i] - u[i + 1]);
    Some(grid.x(i) + t * grid.h())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasuredSpeeds {
    pub average_speed: f64,
    pub least_mean: f64,
    pub upper_mean: f64,
    /// Window length the least/upper means are reported at.
    pub window: f64,
    /// `(T, least, upper)` for every admissible window.
    pub table: Vec<(f64, f64, f64)>,
    pub measure_from: f64,
    pub measure_to: f64,
}

/// Average speed and least/upper window means of `X` over `[from, to]`.
pub fn measure_speeds(trace: &[(f64, f64)], from: f64, to: f64, windows: &[f64]) -> Result<MeasuredSpeeds> {
    let pts: Vec<(f64, f64)> = trace.iter().cloned().filter(|(t, _)| *t >= from - 1e-9 && *t <= to + 1e-9).collect();
    if pts.len() < 2 {
        return Err(Error::Domain(format!("no interface samples in [{from}, {to}]")));
    }
    let (t0, x0) = pts[0];
    let (t1, x1) = pts[pts.len() - 1];
    let average_speed = (x1 - x0) / (t1 - t0);
    let span = t1 - t0;
    let mut table = Vec::new();
    let mut candidates: Vec<f64> = windows.iter().cloned().filter(|w| *w <= span + 1e-9).collect();
    if candidates.is_empty() {
        candidates.push(span);
    }
    let dt = (t1 - t0) / (pts.len() - 1) as f64;
    for &window in &candidates {
        let lag = ((window / dt).round() as usize).max(1);
        let mut least = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for k in 0..pts.len().saturating_sub(lag) {
            let v = (pts[k + lag].1 - pts[k].1) / (pts[k + lag].0 - pts[k].0);
            least = least.min(v);
            upper = upper.max(v);
        }
        table.push((window, least, upper));
    }
    let &(window, least_mean, upper_mean) = table.last().expect("one window");
    Ok(MeasuredSpeeds { average_speed, least_mean, upper_mean, window, table, measure_from: t0, measure_to: t1 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontState {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub x_trace: Vec<(f64, f64)>,
    pub measured: MeasuredSpeeds,
    pub dt: f64,
    pub steps: usize,
    pub burn_in: f64,
    /// Largest `max(u̲ − u, u − ū, 0)` seen.
    pub sandwich_violation: f64,
    /// Largest pointwise decrease in time during the warm-up.
    pub transient_decrease: f64,
    /// Largest pointwise decrease in time after the warm-up.
    pub late_decrease: f64,
    /// Effective exponential rate `ln ρ/dt` of the linear part.
    pub clock_rate: f64,
}

impl FrontState {
    /// `u(t, x_i)` by linear interpolation between snapshots.
    /// Time at which the scheme's clock reads `s` (the clock equals `γt` at `t_start`).
    pub fn time_of_clock(&self, gamma: f64, s: f64) -> f64 {
        let t0 = self.times[0];
        t0 + (s - gamma * t0) / self.clock_rate
    }

    pub fn u_at(&self, t: f64, i: usize) -> Option<f64> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if t < first - 1e-12 || t > last + 1e-12 {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let s = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let (ua, ub) = (self.snapshots[k - 1][i], self.snapshots[k][i]);
        // Logit interpolation is exact on both exponential tails of the front.
        if ua >= 1.0 - 1e-12 || ub >= 1.0 - 1e-12 || ua <= 0.0 || ub <= 0.0 {
            return Some(ua + s * (ub - ua));
        }
        let (la, lb) = ((ua / (1.0 - ua)).ln(), (ub / (1.0 - ub)).ln());
        let l = la + s * (lb - la);
        Some(1.0 / (1.0 + (-l).exp()))
    }

    /// Rows `t, X, avg_window_speed` (speed over the trailing 10 time units).
    pub fn trace_rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.x_trace.len());
        let mut k0 = 0;
        for &(t, x) in &self.x_trace {
            while self.x_trace[k0].0 < t - 10.0 {
                k0 += 1;
            }
            let (ts, xs) = self.x_trace[k0];
            let v = if t - ts >= 10.0 - 1e-9 { (x - xs) / (t - ts) } else { f64::NAN };
            out.push((t, x, v));
        }
        out
    }
}

/// Marches `u_n` from `ū(t_start)` to `t_end`, asserting the sandwich at every
/// step and time monotonicity after the warm-up.
pub fn march_front(field: &CoefficientField, sw: &SandwichSpec, cfg: &FrontConfig) -> Result<FrontState> {
    cfg.validate(field.bounds().c_max)?;
    if cfg.t_start < sw.t_range.0 - 1e-9 || cfg.t_end > sw.t_range.1 + 1e-9 {
        return Err(Error::Domain(format!(
            "sandwich grid sized for t ∈ {:?}, run asks for [{}, {}]",
            sw.t_range, cfg.t_start, cfg.t_end
        )));
    }
    let grid = sw.grid;
    let n = grid.n;
    let marcher = Marcher::new(field, &grid, cfg.dt)?;
    let steps = ((cfg.t_end - cfg.t_start) / cfg.dt).round() as usize;
    let clock_rate = marcher.growth(sw.gamma).ln() / cfg.dt;
    let clock = |t: f64| sw.gamma * cfg.t_start + clock_rate * (t - cfg.t_start);
    let burn_in = cfg.burn_in();
    let warm_until = cfg.t_start + burn_in;
    let snap_every = ((cfg.snapshot_every / cfg.dt).round() as usize).max(1);

    let mut u: Vec<f64> = (0..n).map(|i| sw.upper_clock(clock(cfg.t_start), i)).collect();
    let mut prev = u.clone();
    let mut times = vec![cfg.t_start];
    let mut snapshots = vec![u.clone()];
    let mut x_trace = Vec::with_capacity(steps + 1);
    let x0 = interface(&grid, &u).ok_or_else(|| Error::Domain("level 1/2 not found at t_start".into()))?;
    x_trace.push((cfg.t_start, x0));
    let (mut violation, mut transient, mut late) = (0.0_f64, 0.0_f64, 0.0_f64);

    for k in 1..=steps {
        let t = cfg.t_start + k as f64 * cfg.dt;
        let s = clock(t);
        let left = sw.lower_clock(s, 0).clamp(1.0 - 1e-10, 1.0);
        let right = sw.upper_clock(s, n - 1);
        prev.copy_from_slice(&u);
        marcher.step(&mut u, left, right)?;
        let mut worst_drop = 0.0_f64;
        for i in 1..n - 1 {
            let (lo, hi) = (sw.lower_clock(s, i), sw.upper_clock(s, i));
            let v = (lo - u[i]).max(u[i] - hi).max(0.0);
            violation = violation.max(v);
            if v > cfg.sandwich_tol {
                return Err(Error::Scheme(format!(
                    "sandwich violated by {v:.3e} at t = {t:.4}, x = {:.4} (u̲ = {lo:.6e}, u = {:.6e}, ū = {hi:.6e}); refine h or dt",
                    grid.x(i),
                    u[i]
                )));
            }
            if !(u[i] > 0.0 && u[i] <= 1.0) {
                return Err(Error::Scheme(format!("u = {} left (0, 1] at t = {t:.4}, x = {:.4}", u[i], grid.x(i))));
            }
            worst_drop = worst_drop.max(prev[i] - u[i]);
        }
        if t <= warm_until + 1e-12 {
            transient = transient.max(worst_drop);
        } else {
            late = late.max(worst_drop);
            if worst_drop > cfg.monotone_tol {
                return Err(Error::Scheme(format!(
                    "u decreased by {worst_drop:.3e} at t = {t:.4} after the warm-up; refine h or dt"
                )));
            }
        }
        let x = interface(&grid, &u).ok_or_else(|| Error::Domain(format!("level 1/2 left the grid at t = {t:.4}")))?;
        x_trace.push((t, x));
        if k % snap_every == 0 || k == steps {
            times.push(t);
            snapshots.push(u.clone());
        }
    }
    let from = cfg.measure_from.unwrap_or(warm_until);
    let measured = measure_speeds(&x_trace, from, cfg.t_end, &cfg.windows)?;
    Ok(FrontState {
        grid,
        times,
        snapshots,
        x_trace,
        measured,
        dt: cfg.dt,
        steps,
        burn_in,
        sandwich_violation: violation,
        transient_decrease: transient,
        late_decrease: late,
        clock_rate,
    })
}

/// Two runs started at `t_start` and `2 t_start`, measured on the same window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartDoubling {
    pub speed_n: f64,
    pub speed_2n: f64,
    pub relative_change: f64,
}

pub fn start_doubling(field: &CoefficientField, report: &SpeedReport, w: f64, cfg: &FrontConfig) -> Result<(SandwichSpec, FrontState, StartDoubling)> {
    let far = 2.0 * cfg.t_start;
    let sw = build_sandwich(field, report, w, (far, cfg.t_end), cfg)?;
    let from = cfg.measure_from.unwrap_or(cfg.t_start + cfg.burn_in());
    let base = FrontConfig { measure_from: Some(from), ..cfg.clone() };
    let doubled = FrontConfig { t_start: far, measure_from: Some(from), ..cfg.clone() };
    let runs = crate::par::try_map(&[base, doubled], |c| march_front(field, &sw, c))?;
    let mut runs = runs.into_iter();
    let a = runs.next().expect("two runs");
    let b = runs.next().expect("two runs");
    let d = StartDoubling {
        speed_n: a.measured.average_speed,
        speed_2n: b.measured.average_speed,
        relative_change: (a.measured.average_speed - b.measured.average_speed).abs() / a.measured.average_speed,
    };
    Ok((sw, a, d))
}

/// Moving-frame profile `U(z, x) = u(−ln φ_γ(x)/γ − z, x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileU {
    pub z_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// `u[iz][ix]`.
    pub u: Vec<Vec<f64>>,
    /// `σ_γ/γ` on `x_grid`.
    pub sigma: Vec<f64>,
    #[serde(rename = "M")]
    pub m_fit: f64,
    /// Largest increase of `U` along `z` at fixed `x` (≤ tol when decreasing).
    pub monotonicity_defect: f64,
    /// Largest `U − e^{−γz}`.
    pub upper_excess: f64,
    pub sup_u_at_z_max: f64,
    pub inf_u_at_z_min: f64,
    pub ap_reports: Vec<(f64, APReport)>,
}

pub fn extract_profile(front: &FrontState, sw: &SandwichSpec, z_range: (f64, f64), nz: usize) -> Result<ProfileU> {
    let gamma = sw.gamma;
    let t_lo = front.measured.measure_from;
    let t_hi = *front.times.last().ok_or_else(|| Error::Domain("front has no snapshots".into()))?;
    let (z_min, z_max) = z_range;
    if !(z_max > z_min) || nz < 3 {
        return Err(Error::Argument("profile needs z_max > z_min and at least 3 z values".into()));
    }
    // The scheme's clock plays the role of γt, so U(z, x) is read where the
    // clock equals −ln φ(x) − γz.
    let time = |z: f64, i: usize| front.time_of_clock(gamma, -sw.log_phi[i] - gamma * z);
    let cols: Vec<usize> = (1..front.grid.n - 1)
        .filter(|&i| time(z_max, i) >= t_lo && time(z_min, i) <= t_hi)
        .collect();
    if cols.len() < 20 {
        return Err(Error::Domain(format!(
            "covered x-window too small: {} points; achievable z-width at one x is {:.3} (times [{t_lo}, {t_hi}])",
            cols.len(),
            t_hi - t_lo
        )));
    }
    let (c0, c1) = (cols[0], *cols.last().expect("nonempty"));
    if cols.len() != c1 - c0 + 1 {
        return Err(Error::Domain("covered x-set is not an interval".into()));
    }
    let z_grid: Vec<f64> = (0..nz).map(|k| z_min + (z_max - z_min) * k as f64 / (nz - 1) as f64).collect();
    let mut u = Vec::with_capacity(nz);
    for &z in &z_grid {
        let row: Vec<f64> = (c0..=c1)
            .map(|i| front.u_at(time(z, i), i).expect("covered"))
            .collect();
        u.push(row);
    }
    let x_grid: Vec<f64> = (c0..=c1).map(|i| front.grid.x(i)).collect();
    let sigma: Vec<f64> = (c0..=c1).map(|i| sw.sigma[i] / gamma).collect();

    let mut m_fit = 0.0_f64;
    let mut upper_excess = f64::NEG_INFINITY;
    for (iz, &z) in z_grid.iter().enumerate() {
        let e = (-gamma * z).exp();
        for v in &u[iz] {
            m_fit = m_fit.max((1.0 - v / e) * (sw.epsilon * gamma * z).exp());
            upper_excess = upper_excess.max(v - e.min(1.0));
        }
    }
    let mut monotonicity_defect = 0.0_f64;
    for iz in 1..nz {
        for ix in 0..x_grid.len() {
            monotonicity_defect = monotonicity_defect.max(u[iz][ix] - u[iz - 1][ix]);
        }
    }
    let sup_u_at_z_max = u[nz - 1].iter().cloned().fold(0.0, f64::max);
    let inf_u_at_z_min = u[0].iter().cloned().fold(1.0, f64::min);

    let sub = Grid1D::new(x_grid[0], *x_grid.last().expect("nonempty"), x_grid.len())?;
    let width = sub.length();
    let mut ap_reports = Vec::new();
    for z0 in [-2.0 / gamma, 0.0, 2.0 / gamma] {
        if z0 < z_min || z0 > z_max {
            continue;
        }
        let row: Vec<f64> = (c0..=c1).map(|i| front.u_at(time(z0, i), i).expect("covered")).collect();
        let spread = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - row.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = 0.05 * spread + 1e-4;
        let f = |x: f64| coeff::interpolate(&sub, &row, x);
        // Left columns were read at early times; probe the later half.
        let probe = (sub.x_lo + 0.5 * width, sub.x_hi - 0.25 * width);
        let rep = coeff::ap_diagnostic(f, tol, (0.0, 0.25 * width), probe, sub.h())?;
        ap_reports.push((z0, rep));
    }
    Ok(ProfileU {
        z_grid,
        x_grid,
        u,
        sigma,
        m_fit,
        monotonicity_defect,
        upper_excess,
        sup_u_at_z_max,
        inf_u_at_z_min,
        ap_reports,
    })
}

/// Widens `(z_min, z_max)` from `(−8/γ, 6/γ)` until `U(z_min, ·) > 0.99` and
/// `U(z_max, ·) < 10⁻²`, as far as the run's coverage allows.
pub fn extract_profile_auto(front: &FrontState, sw: &SandwichSpec, nz: usize) -> Result<ProfileU> {
    let g = sw.gamma;
    let (mut lo, mut hi) = (-8.0 / g, 6.0 / g);
    for _ in 0..12 {
        let p = extract_profile(front, sw, (lo, hi), nz)?;
        let low_ok = p.inf_u_at_z_min > 0.99;
        let high_ok = p.sup_u_at_z_max < 1e-2;
        if low_ok && high_ok {
            return Ok(p);
        }
        if !low_ok {
            lo -= 2.0 / g;
        }
        if !high_ok {
            hi += 2.0 / g;
        }
    }
    Err(Error::Domain(format!("profile limits not reached within z ∈ [{lo}, {hi}]")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadConfig {
    pub half_width: f64,
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Initial datum `u₀ = amplitude` on `[−support, support]`, 0 elsewhere.
    pub support: f64,
    pub amplitude: f64,
    pub min_window: f64,
    pub start_fraction: f64,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        SpreadConfig {
            half_width: 220.0,
            h: 0.05,
            dt: 0.005,
            t_end: 100.0,
            support: 2.0,
            amplitude: 1.0,
            min_window: 50.0,
            start_fraction: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadReport {
    pub x_trace: Vec<(f64, f64)>,
    /// Minimum of `(X(s+T) − X(s))/T` over `s ≥ start_fraction·t_end`, `T ≥ min_window`.
    pub liminf_speed: f64,
    pub average_speed: f64,
    pub max_u_at_edges: f64,
}

/// Spreading from a compactly supported datum with zero Dirichlet ends.
pub fn spread_from_compact(field: &CoefficientField, cfg: &SpreadConfig) -> Result<SpreadReport> {
    if cfg.dt > 1.0 / (2.0 * field.bounds().c_max) {
        return Err(Error::Argument("dt exceeds 1/(2 sup c)".into()));
    }
    let m = (cfg.half_width / cfg.h).round() as usize;
    let grid = Grid1D::new(-(m as f64) * cfg.h, m as f64 * cfg.h, 2 * m + 1)?;
    let marcher = Marcher::new(field, &grid, cfg.dt)?;
    let mut u: Vec<f64> = grid.points().iter().map(|x| if x.abs() <= cfg.support { cfg.amplitude } else { 0.0 }).collect();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let record = ((0.1 / cfg.dt).round() as usize).max(1);
    let mut x_trace = Vec::new();
    let mut edge = 0.0_f64;
    for k in 1..=steps {
        marcher.step(&mut u, 0.0, 0.0)?;
        if k % record == 0 {
            let t = k as f64 * cfg.dt;
            if let Some(x) = interface(&grid, &u) {
                x_trace.push((t, x));
            }
        }
        edge = edge.max(u[1]).max(u[grid.n - 2]);
    }
    let s_min = cfg.start_fraction * cfg.t_end;
    let pts: Vec<(f64, f64)> = x_trace.iter().cloned().filter(|(t, _)| *t >= s_min - 1e-9).collect();
    if pts.len() < 2 || pts[pts.len() - 1].0 - pts[0].0 < cfg.min_window - 1e-9 {
        return Err(Error::Domain("interface trace too short for the liminf window".into()));
    }
    let mut liminf = f64::INFINITY;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            if pts[b].0 - pts[a].0 >= cfg.min_window - 1e-9 {
                liminf = liminf.min((pts[b].1 - pts[a].1) / (pts[b].0 - pts[a].0));
            }
        }
    }
    let (ta, xa) = pts[0];
    let (tb, xb) = pts[pts.len() - 1];
    Ok(SpreadReport { x_trace, liminf_speed: liminf, average_speed: (xb - xa) / (tb - ta), max_u_at_edges: edge })
}
