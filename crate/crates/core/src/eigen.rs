//! Generalized principal eigenvalues of `Lφ = (aφ')' + cφ`.
//!
//! * `λ₁` as the increasing limit of Dirichlet eigenvalues on `(0, R)`;
//! * Rayleigh quotients for admissible test functions;
//! * the tilted eigenvalues `k_p` of `L_p φ = e^{px} L(e^{-px} φ)`, obtained
//!   from the regularized problem `a u'' + a u'² + b u' + c̃ = ε u`;
//! * a shooting diagnostic for a bounded positive eigenfunction.
//!
//! All operators share the conservative three-point stencil with `a` taken on
//! cell faces. Tilted operators are discretized by conjugating that stencil,
//! which keeps the off-diagonal weights positive for any tilt.

use serde::{Deserialize, Serialize};

use crate::coeff::{CoefficientField, Grid1D, GridCoefficients};
use crate::error::{Error, Result};
use crate::numerics::{self, SymTridiag};
use crate::par;

/// Dirichlet matrix of `(aφ')' + cφ` on the interior nodes of `grid`.
fn dirichlet_matrix(k: &GridCoefficients) -> SymTridiag {
    let n = k.c.len();
    let h2 = k.h * k.h;
    let diag = (1..n - 1)
        .map(|i| -(k.a_face[i] + k.a_face[i + 1]) / h2 + k.c[i])
        .collect();
    let off = (1..n - 2).map(|i| k.a_face[i + 1] / h2).collect();
    SymTridiag { diag, off }
}

/// Principal Dirichlet eigenpair on `[grid.x_lo, grid.x_hi]`.
///
/// The eigenfunction covers every grid node (zero at both ends) and is
/// normalized to max 1.
pub fn dirichlet_eigenpair(field: &CoefficientField, grid: &Grid1D) -> Result<(f64, Vec<f64>)> {
    if grid.n < 10 {
        return Err(Error::Argument(format!(
            "grid too coarse for an eigenproblem: {} points (need >= 10)",
            grid.n
        )));
    }
    let k = field.sample(grid)?;
    let t = dirichlet_matrix(&k);
    let lambda = t.largest_eigenvalue();
    let v = t.top_eigenvector(lambda)?;
    let mut phi = Vec::with_capacity(grid.n);
    phi.push(0.0);
    phi.extend(v);
    phi.push(0.0);
    Ok((lambda, phi))
}

/// Expanding-interval estimate of `λ₁`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenEstimate {
    /// `(R, λ₁((0, R)))` in schedule order.
    pub samples: Vec<(f64, f64)>,
    pub lambda1: f64,
    pub tol: f64,
    pub h: f64,
    /// Largest decrease observed along the table (0 for a monotone table).
    pub max_decrease: f64,
    pub eigenfunction: Vec<f64>,
    pub grid: Grid1D,
}

impl EigenEstimate {
    /// Is the table nondecreasing within `slack`?
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.max_decrease <= slack
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lambda1Config {
    pub h: f64,
    pub r_schedule: Vec<f64>,
    pub tol: f64,
}

impl Default for Lambda1Config {
    fn default() -> Self {
        Lambda1Config {
            h: 0.05,
            r_schedule: (0..9).map(|k| 25.0 * 2f64.powi(k)).collect(),
            tol: 1e-5,
        }
    }
}

/// `λ₁(L, ℝ)` from Dirichlet eigenvalues on `(0, R)` along `r_schedule`.
///
/// Stops at the first increment below `tol` and reports the last value plus
/// half the last increment.
pub fn lambda1(field: &CoefficientField, cfg: &Lambda1Config) -> Result<EigenEstimate> {
    if cfg.r_schedule.len() < 3 {
        return Err(Error::Argument("R schedule needs at least 3 radii".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    if cfg.r_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("R schedule must be increasing".into()));
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for &r in &cfg.r_schedule {
        let grid = Grid1D::with_spacing(0.0, r, cfg.h)?;
        let (lam, phi) = dirichlet_eigenpair(field, &grid)?;
        samples.push((grid.x_hi, lam));
        if samples.len() >= 2 {
            let inc = lam - samples[samples.len() - 2].1;
            if inc.abs() < cfg.tol {
                let max_decrease = samples
                    .windows(2)
                    .map(|w| w[0].1 - w[1].1)
                    .fold(0.0_f64, f64::max);
                return Ok(EigenEstimate {
                    lambda1: lam + 0.5 * inc.max(0.0),
                    samples,
                    tol: cfg.tol,
                    h: cfg.h,
                    max_decrease,
                    eigenfunction: phi,
                    grid,
                });
            }
        }
    }
    Err(Error::Convergence {
        message: format!("λ₁ increments still above {} at R = {:?}", cfg.tol, cfg.r_schedule.last()),
        table: samples,
    })
}

/// Rayleigh quotient `∫(cφ² − aφ'²) / ∫φ²` of a test function vanishing at both ends.
///
/// The gradient term uses face differences with `a` on faces, so for the
/// discrete eigenvector it reproduces the Dirichlet eigenvalue exactly.
pub fn rayleigh_quotient(field: &CoefficientField, grid: &Grid1D, test_fn: &[f64]) -> Result<f64> {
    if test_fn.len() != grid.n {
        return Err(Error::Argument(format!(
            "test function has {} samples for {} grid points",
            test_fn.len(),
            grid.n
        )));
    }
    let scale = test_fn.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Argument("test function is identically zero".into()));
    }
    if test_fn[0].abs() > 1e-12 * scale || test_fn[grid.n - 1].abs() > 1e-12 * scale {
        return Err(Error::Argument("test function must vanish at the interval ends".into()));
    }
    let k = field.sample(grid)?;
    let h = grid.h();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n {
        let p = test_fn[i] / scale;
        num += k.c[i] * p * p * h;
        den += p * p * h;
        if i + 1 < grid.n {
            let d = (test_fn[i + 1] - test_fn[i]) / scale / h;
            num -= k.a_face[i + 1] * d * d * h;
        }
    }
    Ok(num / den)
}

/// How the regularized problem is closed at the ends of a truncated domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    /// Zero slope: ghost values mirror the first interior node.
    Reflecting,
    /// The last node neighbours the first.
    Ring,
}

/// Three-point operator `(Mθ)_i = west_i θ_{i-1} + center_i θ_i + east_i θ_{i+1}`
/// with positive neighbour weights.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub west: Vec<f64>,
    pub center: Vec<f64>,
    pub east: Vec<f64>,
    pub closure: Closure,
}

impl Stencil {
    /// `L_p = e^{px} L e^{-px}` on the nodes of `grid`.
    pub fn tilted(field: &CoefficientField, grid: &Grid1D, p: f64) -> Result<Self> {
        let k = field.sample(grid)?;
        let h2 = k.h * k.h;
        let (up, down) = ((p * k.h).exp(), (-p * k.h).exp());
        let n = grid.n;
        Ok(Stencil {
            west: (0..n).map(|i| k.a_face[i] * up / h2).collect(),
            center: (0..n).map(|i| -(k.a_face[i] + k.a_face[i + 1]) / h2 + k.c[i]).collect(),
            east: (0..n).map(|i| k.a_face[i + 1] * down / h2).collect(),
            closure: Closure::Reflecting,
        })
    }

    /// Drops the last node and closes the remaining ones into a ring.
    pub fn into_ring(mut self) -> Self {
        self.west.pop();
        self.center.pop();
        self.east.pop();
        self.closure = Closure::Ring;
        self
    }

    fn neighbours(&self, i: usize) -> (usize, usize) {
        let n = self.len();
        match self.closure {
            Closure::Reflecting => (if i == 0 { 1 } else { i - 1 }, if i + 1 == n { n - 2 } else { i + 1 }),
            Closure::Ring => ((i + n - 1) % n, (i + 1) % n),
        }
    }

    pub fn len(&self) -> usize {
        self.center.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center.is_empty()
    }

    /// `(Mθ)_i / θ_i` at interior node `i`.
    pub fn ratio_at(&self, theta: &[f64], i: usize) -> f64 {
        self.west[i] * theta[i - 1] / theta[i] + self.center[i] + self.east[i] * theta[i + 1] / theta[i]
    }

    /// `c̃_i = (M 1)_i`, the zero-order coefficient.
    fn constant_response(&self, i: usize) -> f64 {
        self.west[i] + self.center[i] + self.east[i]
    }

    /// Residual of `M e^u = ε u e^u` divided by `e^u`.
    fn residual(&self, u: &[f64], eps: f64, out: &mut [f64]) {
        for i in 0..u.len() {
            let (l, r) = self.neighbours(i);
            out[i] = self.west[i] * (u[l] - u[i]).exp()
                + self.east[i] * (u[r] - u[i]).exp()
                + self.center[i]
                - eps * u[i];
        }
    }
}

/// Newton solve of the regularized problem for one `ε`.
///
/// Returns `(u, iterations, final residual)`.
pub fn solve_regularized(stencil: &Stencil, eps: f64, guess: Vec<f64>) -> Result<(Vec<f64>, usize, f64)> {
    let n = stencil.len();
    if n < 3 || guess.len() != n {
        return Err(Error::Argument("regularized problem needs >= 3 nodes and a matching guess".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("regularization must be positive, got {eps}")));
    }
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY });
    let scale = stencil
        .center
        .iter()
        .zip(&stencil.west)
        .fold(1.0_f64, |m, (c, w)| m.max(c.abs()).max(w.abs()));
    let target = 1e-11 * scale;

    let mut u = guess;
    let mut f = vec![0.0; n];
    stencil.residual(&u, eps, &mut f);
    let mut res = norm(&f);
    let mut history = vec![res];
    let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    for iter in 0..200 {
        if res <= target {
            return Ok((u, iter, res));
        }
        for i in 0..n {
            let (l, r) = stencil.neighbours(i);
            let w = stencil.west[i] * (u[l] - u[i]).exp();
            let e = stencil.east[i] * (u[r] - u[i]).exp();
            diag[i] = -w - e - eps;
            lower[i] = w;
            upper[i] = e;
            if stencil.closure == Closure::Reflecting {
                if i == 0 {
                    (lower[i], upper[i]) = (0.0, w + e);
                } else if i + 1 == n {
                    (lower[i], upper[i]) = (w + e, 0.0);
                }
            }
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = match stencil.closure {
            Closure::Reflecting => numerics::thomas(&lower, &diag, &upper, &rhs)?,
            Closure::Ring => numerics::thomas_cyclic(&lower, &diag, &upper, &rhs)?,
        };
        // Keep exponentials of neighbour differences in range.
        let mut damping = (4.0 / norm(&step).max(1e-300)).min(1.0);
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..n {
                trial[i] = u[i] + damping * step[i];
            }
            stencil.residual(&trial, eps, &mut f_trial);
            let r = norm(&f_trial);
            if r < res || (r <= target) {
                std::mem::swap(&mut u, &mut trial);
                std::mem::swap(&mut f, &mut f_trial);
                res = r;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        history.push(res);
        if !accepted {
            return Err(Error::Solver {
                message: format!("Newton stalled at ε = {eps} after {iter} iterations"),
                residuals: history,
            });
        }
    }
    if res <= 1e-8 * scale {
        return Ok((u, 200, res));
    }
    Err(Error::Solver { message: format!("Newton did not converge at ε = {eps}"), residuals: history })
}

/// One regularization level of a `k_p` (or `θ`) solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegStep {
    pub eps_reg: f64,
    /// inf and sup of `ε u_ε` over the core window.
    pub inf_eu: f64,
    pub sup_eu: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Solves the regularized problem along a schedule of decreasing `ε`,
/// continuing each solution into the next level.
///
/// `core` is the index range over which the brackets are taken.
pub fn regularized_ladder(
    stencil: &Stencil,
    schedule: &[f64],
    core: (usize, usize),
) -> Result<(Vec<RegStep>, Vec<f64>)> {
    if schedule.is_empty() || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Argument("regularization schedule must be nonempty and positive".into()));
    }
    let n = stencil.len();
    let mean_c = (0..n).map(|i| stencil.constant_response(i)).sum::<f64>() / n as f64;
    let mut u = vec![mean_c / schedule[0]; n];
    let mut prev_eps = schedule[0];
    let mut steps = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let guess: Vec<f64> = u.iter().map(|v| v * prev_eps / eps).collect();
        let (sol, iters, res) = solve_regularized(stencil, eps, guess)?;
        let (lo, hi) = sol[core.0..=core.1]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(eps * v), hi.max(eps * v)));
        steps.push(RegStep { eps_reg: eps, inf_eu: lo, sup_eu: hi, newton_iterations: iters, residual: res });
        u = sol;
        prev_eps = eps;
    }
    Ok((steps, u))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpConfig {
    pub half_length: f64,
    pub h: f64,
    pub reg_schedule: Vec<f64>,
    /// Allowed change of `k_p` when the domain is doubled.
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for KpConfig {
    fn default() -> Self {
        KpConfig {
            half_length: 50.0,
            h: 0.05,
            reg_schedule: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            tol: 1e-3,
            max_doublings: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpEstimate {
    pub p: f64,
    pub k_p: f64,
    /// Half width of the final `[inf εu, sup εu]` bracket.
    pub bracket_half_width: f64,
    pub trace: Vec<RegStep>,
    pub half_length_used: f64,
    /// `|k_p(2L) − k_p(L)|` for the last doubling.
    pub doubling_change: f64,
    pub domain_converged: bool,
}

impl KpEstimate {
    pub fn eps_reg_final(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |s| s.eps_reg)
    }
}

fn k_p_on(field: &CoefficientField, p: f64, half_length: f64, cfg: &KpConfig) -> Result<(f64, f64, Vec<RegStep>)> {
    let m = (half_length / cfg.h).round().max(2.0);
    let grid = Grid1D::new(-m * cfg.h, m * cfg.h, 2 * m as usize + 1)?;
    let stencil = Stencil::tilted(field, &grid, p)?.into_ring();
    let quarter = grid.n / 4;
    let (trace, _) = regularized_ladder(&stencil, &cfg.reg_schedule, (quarter, grid.n - 1 - quarter))?;
    let last = trace.last().expect("nonempty schedule");
    Ok((0.5 * (last.inf_eu + last.sup_eu), 0.5 * (last.sup_eu - last.inf_eu), trace))
}

/// Tilted generalized principal eigenvalue `k_p`.
///
/// The regularized problem is posed on the ring `[-L, L)`. `k_p` is the
/// midpoint of the `[inf εu_ε, sup εu_ε]` bracket over the central half at the
/// last regularization level; the domain is doubled until the estimate moves by
/// less than `tol` (or `max_doublings` is exhausted).
pub fn k_p(field: &CoefficientField, p: f64, cfg: &KpConfig) -> Result<KpEstimate> {
    if !(cfg.half_length > 0.0) || cfg.reg_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument("k_p needs L > 0 and a decreasing regularization schedule".into()));
    }
    let mut half = cfg.half_length;
    let (mut k, mut width, mut trace) = k_p_on(field, p, half, cfg)?;
    let mut change = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        let (k2, w2, t2) = k_p_on(field, p, 2.0 * half, cfg)?;
        change = (k2 - k).abs();
        half *= 2.0;
        k = k2;
        width = w2;
        trace = t2;
        if change < cfg.tol {
            break;
        }
    }
    Ok(KpEstimate {
        p,
        k_p: k,
        bracket_half_width: width,
        trace,
        half_length_used: half,
        doubling_change: change,
        domain_converged: change < cfg.tol,
    })
}

/// `p ↦ k_p` on a grid of tilts, with structural checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpCurve {
    pub entries: Vec<KpEstimate>,
    pub lambda1_ref: f64,
    pub warnings: Vec<String>,
}

impl KpCurve {
    pub fn min_k_over_p(&self) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .filter(|e| e.p > 0.0)
            .map(|e| (e.p, e.k_p / e.p))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest discrete second difference violation of convexity (≥ 0).
    pub fn convexity_defect(&self) -> f64 {
        self.entries
            .windows(3)
            .map(|w| {
                let (p0, p1, p2) = (w[0].p, w[1].p, w[2].p);
                let slope_l = (w[1].k_p - w[0].k_p) / (p1 - p0);
                let slope_r = (w[2].k_p - w[1].k_p) / (p2 - p1);
                (slope_l - slope_r).max(0.0) * (p2 - p0) / 2.0
            })
            .fold(0.0, f64::max)
    }
}

pub fn kp_curve(field: &CoefficientField, ps: &[f64], lambda1_ref: f64, cfg: &KpConfig) -> Result<KpCurve> {
    let entries = par::try_map(ps, |&p| k_p(field, p, cfg))?;
    let mut warnings = Vec::new();
    for e in &entries {
        if e.k_p < lambda1_ref - cfg.tol - e.bracket_half_width {
            warnings.push(format!("k_p = {} below λ₁ = {lambda1_ref} at p = {}", e.k_p, e.p));
        }
        if !e.domain_converged {
            warnings.push(format!("domain doubling moved k_p by {} at p = {}", e.doubling_change, e.p));
        }
    }
    let curve = KpCurve { entries, lambda1_ref, warnings };
    let defect = curve.convexity_defect();
    let mut curve = curve;
    if defect > cfg.tol {
        curve.warnings.push(format!("convexity defect {defect}"));
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundedVerdict {
    Plausible,
    Inconclusive,
    Localized,
}

/// Shooting evidence for a bounded positive eigenfunction at `λ₁`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundedReport {
    pub lambda_used: f64,
    pub slope: f64,
    pub grid: Grid1D,
    pub phi_samples: Vec<f64>,
    pub ratio: f64,
    pub bounded_verdict: BoundedVerdict,
}

struct Shot {
    phi: Vec<f64>,
    left_ok: bool,
    right_ok: bool,
}

fn shoot(k: &GridCoefficients, center: usize, lambda: f64, slope: f64) -> Shot {
    let n = k.c.len();
    let h = k.h;
    let mut phi = vec![0.0; n];
    phi[center] = 1.0;
    phi[center + 1] = 1.0 + slope * h;
    let coef = |i: usize| k.a_face[i] + k.a_face[i + 1] - h * h * (k.c[i] - lambda);
    let mut right_ok = phi[center + 1] > 0.0;
    for i in center + 1..n - 1 {
        if !right_ok {
            break;
        }
        phi[i + 1] = (coef(i) * phi[i] - k.a_face[i] * phi[i - 1]) / k.a_face[i + 1];
        right_ok = phi[i + 1] > 0.0 && phi[i + 1].is_finite();
    }
    let mut left_ok = true;
    for i in (1..=center).rev() {
        phi[i - 1] = (coef(i) * phi[i] - k.a_face[i + 1] * phi[i + 1]) / k.a_face[i];
        if !(phi[i - 1] > 0.0 && phi[i - 1].is_finite()) {
            left_ok = false;
            break;
        }
    }
    Shot { phi, left_ok, right_ok }
}

fn log_ratio(phi: &[f64]) -> f64 {
    let (lo, hi) = phi.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if lo > 0.0 {
        (hi / lo).ln()
    } else {
        f64::INFINITY
    }
}

/// Shooting from `φ(0) = 1, φ'(0) = s` on `[-L, L]` at `λ = lambda1`.
///
/// The admissible slopes (positive solution on the whole window) form an
/// interval found by bisection; `sup φ / inf φ` is minimized over it. If no
/// slope is admissible, `λ` is nudged upward until one is.
pub fn bounded_eigenfunction_diagnostic(field: &CoefficientField, lambda1: f64, half_length: f64, h: f64) -> Result<BoundedReport> {
    let m = (half_length / h).round().max(5.0) as usize;
    let grid = Grid1D::new(-(m as f64) * h, m as f64 * h, 2 * m + 1)?;
    let k = field.sample(&grid)?;
    let b = field.bounds();
    let span = ((b.c_max - b.c_min).abs() + (b.c_max - lambda1).abs() + 1.0) / b.a_min;
    let s_max = 10.0 * span.sqrt() + 1.0;

    let mut lambda = lambda1;
    let mut bump = 1e-9_f64.max(1e-9 * lambda1.abs());
    for _ in 0..60 {
        let right = |s: f64| shoot(&k, m, lambda, s).right_ok;
        let left = |s: f64| shoot(&k, m, lambda, s).left_ok;
        // right_ok is monotone increasing in s, left_ok decreasing.
        let s_r = if right(-s_max) {
            -s_max
        } else if !right(s_max) {
            f64::INFINITY
        } else {
            let (mut lo, mut hi) = (-s_max, s_max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if right(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        let s_l = if left(s_max) {
            s_max
        } else if !left(-s_max) {
            f64::NEG_INFINITY
        } else {
            let (mut lo, mut hi) = (-s_max, s_max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if left(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if s_r <= s_l && s_r.is_finite() && s_l.is_finite() {
            let (slope, _, _) = numerics::golden_section(
                |s| Ok(log_ratio(&shoot(&k, m, lambda, s).phi)),
                s_r,
                s_l,
                1e-14 * (1.0 + s_max),
            )?;
            let shot = shoot(&k, m, lambda, slope);
            let ratio = log_ratio(&shot.phi).exp();
            let ends = shot.phi[0].min(shot.phi[grid.n - 1]);
            let verdict = if ends < 1e-6 {
                BoundedVerdict::Localized
            } else if ratio < 1e2 {
                BoundedVerdict::Plausible
            } else {
                BoundedVerdict::Inconclusive
            };
            return Ok(BoundedReport {
                lambda_used: lambda,
                slope,
                grid,
                phi_samples: shot.phi,
                ratio,
                bounded_verdict: verdict,
            });
        }
        lambda += bump;
        bump *= 2.0;
    }
    Err(Error::Solver {
        message: format!("no positive shooting solution near λ = {lambda1}"),
        residuals: vec![],
    })
}
