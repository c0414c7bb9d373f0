//! Decaying solutions `φ_γ` of `(aφ')' + (c − γ)φ = 0`, their logarithmic
//! derivative `σ_γ = −φ_γ'/φ_γ` and the decay exponent `μ(γ) = ⟨σ_γ⟩`.
//!
//! `φ_γ^R` (Dirichlet at `R`, `φ(0) = 1`) is obtained from the backward sweep of
//! the Thomas algorithm written for the ratios `g_i = φ_{i+1}/φ_i`. The same
//! sweep, continued to the left of 0, gives the extension to `x < 0`. Working
//! with ratios keeps everything in log scale, so deep tails never underflow.

use serde::{Deserialize, Serialize};

use crate::coeff::{self, BohrMean, CoefficientField, Grid1D};
use crate::eigen::EigenEstimate;
use crate::error::{Error, Result};
use crate::par;

/// `λ₁` together with the tolerance it was computed to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Ref {
    pub value: f64,
    pub tol: f64,
}

impl Lambda1Ref {
    /// Smallest admissible distance of `γ` above `λ₁`.
    pub fn margin(&self) -> f64 {
        (3.0 * self.tol).max(1e-3)
    }
}

impl From<&EigenEstimate> for Lambda1Ref {
    fn from(e: &EigenEstimate) -> Self {
        Lambda1Ref { value: e.lambda1, tol: e.tol }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayOptions {
    pub h: f64,
    /// Left end of the grid (≤ 0); the part left of 0 is the extension.
    pub x_left: f64,
    /// Truncation radius. `None` picks one from the decay rate and extends it
    /// as needed; an explicit radius is never changed.
    pub radius: Option<f64>,
    pub min_radius: f64,
    /// Number of radii `R/2^k` in the monotonicity ladder.
    pub ladder: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { h: 0.05, x_left: 0.0, radius: None, min_radius: 100.0, ladder: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub gamma: f64,
    pub grid: Grid1D,
    /// Index of `x = 0`.
    pub zero_index: usize,
    pub phi: Vec<f64>,
    pub log_phi: Vec<f64>,
    /// `ln(φ_{i+1}/φ_i)`, length `n − 1`; the last entry is `−∞`.
    pub log_ratio: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mu: BohrMean,
    /// `−` slope of the least-squares line through `ln φ` on the core.
    pub mu_regression: f64,
    pub r_used: f64,
    /// Window of the grid used for means, clear of boundary layers.
    pub core: (f64, f64),
    /// `(R_k, max |φ^{R_k}/φ^{R} − 1|)` on `[0, R_0/2]`.
    pub monotone_table: Vec<(f64, f64)>,
    /// `φ^{R_k}` increased with `R_k` at every probe point.
    pub monotone: bool,
}

impl DecayProfile {
    pub fn log_phi_at(&self, x: f64) -> f64 {
        coeff::interpolate(&self.grid, &self.log_phi, x)
    }

    /// Largest `|σ_γ|` on the core.
    pub fn sigma_sup(&self) -> f64 {
        let (i0, i1) = (self.grid.nearest(self.core.0), self.grid.nearest(self.core.1));
        self.sigma[i0..=i1].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// How far `|σ_γ|` exceeds `√(γ − c)·sup√a / inf a` on the core (≤ 0 when
    /// the bound holds). Meaningful for constant `c` only.
    pub fn constant_c_sigma_excess(&self, field: &CoefficientField) -> f64 {
        let b = field.bounds();
        let bound = (self.gamma - b.c_min).max(0.0).sqrt() * b.a_max.sqrt() / b.a_min;
        self.sigma_sup() - bound
    }
}

/// `ln g_i` for `i = 0..n-1` from the ratio sweep with `φ(x_hi) = 0`.
fn ratio_sweep(field: &CoefficientField, grid: &Grid1D, gamma: f64) -> Result<Vec<f64>> {
    let k = field.sample(grid)?;
    let n = grid.n;
    let h2 = k.h * k.h;
    let mut log_g = vec![f64::NEG_INFINITY; n - 1];
    let mut g = 0.0;
    for i in (1..n - 1).rev() {
        let d = k.a_face[i] + k.a_face[i + 1] + h2 * (gamma - k.c[i]);
        let den = d - k.a_face[i + 1] * g;
        if !(den > 0.0) {
            return Err(Error::Discretization(format!(
                "φ_γ changes sign near x = {:.4} (γ = {gamma}); refine the grid",
                grid.x(i)
            )));
        }
        g = k.a_face[i] / den;
        log_g[i - 1] = g.ln();
    }
    Ok(log_g)
}

fn log_phi_from_ratios(log_g: &[f64], zero: usize) -> Vec<f64> {
    let n = log_g.len() + 1;
    let mut lp = vec![0.0; n];
    for i in zero..n - 1 {
        lp[i + 1] = lp[i] + log_g[i];
    }
    for i in (1..=zero).rev() {
        lp[i - 1] = lp[i] - log_g[i - 1];
    }
    lp
}

fn aligned_grid(x_left: f64, radius: f64, h: f64) -> Result<(Grid1D, usize)> {
    if x_left > 0.0 {
        return Err(Error::Argument(format!("x_left must be <= 0, got {x_left}")));
    }
    let left = (-x_left / h).round() as usize;
    let right = (radius / h).round() as usize;
    if right < 4 {
        return Err(Error::Argument(format!("radius {radius} too small for h = {h}")));
    }
    let grid = Grid1D::new(-(left as f64) * h, right as f64 * h, left + right + 1)?;
    Ok((grid, left))
}

fn check_gamma(gamma: f64, lam: Lambda1Ref) -> Result<()> {
    if !(gamma > lam.value + lam.margin()) {
        return Err(Error::Argument(format!(
            "γ = {gamma} must exceed λ₁ + margin = {} + {}",
            lam.value,
            lam.margin()
        )));
    }
    Ok(())
}

/// `φ_γ`, `σ_γ` and `μ(γ)` on `[x_left, R]`.
pub fn phi_gamma(field: &CoefficientField, gamma: f64, lam: Lambda1Ref, opts: &DecayOptions) -> Result<DecayProfile> {
    check_gamma(gamma, lam)?;
    if !(opts.h > 0.0) {
        return Err(Error::Argument(format!("h must be positive, got {}", opts.h)));
    }
    let b = field.bounds();
    // μ(γ) ≥ √((γ − λ₁)/sup a); used to size the domain.
    let mu_lo = ((gamma - lam.value) / b.a_max).sqrt();
    let mut radius = opts.radius.unwrap_or_else(|| opts.min_radius.max(40.0 / mu_lo));
    for _ in 0..6 {
        let profile = profile_on(field, gamma, radius, mu_lo, opts)?;
        if profile.mu.value * radius / 2.0 >= 18.4 {
            return Ok(profile);
        }
        if opts.radius.is_some() {
            return Err(Error::Domain(format!(
                "φ_γ(R/2) not below 1e-8 at R = {radius} (μ = {})",
                profile.mu.value
            )));
        }
        radius *= 2.0;
    }
    Err(Error::Domain(format!("could not size the domain for γ = {gamma}")))
}

fn profile_on(field: &CoefficientField, gamma: f64, radius: f64, mu_lo: f64, opts: &DecayOptions) -> Result<DecayProfile> {
    let h = opts.h;
    let (grid, zero) = aligned_grid(opts.x_left, radius, h)?;
    let n = grid.n;
    let log_g = ratio_sweep(field, &grid, gamma)?;
    let log_phi = log_phi_from_ratios(&log_g, zero);
    let phi: Vec<f64> = log_phi.iter().map(|v| v.exp()).collect();

    let mut sigma = vec![f64::INFINITY; n];
    sigma[0] = -log_g[0] / h;
    for i in 1..n - 1 {
        sigma[i] = -(log_g[i] + log_g[i - 1]) / (2.0 * h);
    }

    let layer = 10f64.max(0.1 * grid.x_hi);
    let core = (grid.x_lo + layer, grid.x_hi - layer.max(7.0 / mu_lo));
    if core.1 - core.0 < 4.0 * h.max(1.0) {
        return Err(Error::Domain(format!("no core left on [{}, {}] after boundary layers", grid.x_lo, grid.x_hi)));
    }
    let mut window = 0.75 * (core.1 - core.0);
    // Whole periods make the mean exact for periodic media.
    if let Some(period) = field.period() {
        let k = (window / period).floor();
        if k >= 1.0 {
            window = k * period;
        }
    }
    let offsets = coeff::spread_offsets(core.0, core.1, window, 3);
    let mu = coeff::bohr_mean_sampled(&grid, &sigma, window, &offsets)?;

    let (i0, i1) = (grid.nearest(core.0), grid.nearest(core.1));
    let mu_regression = -slope(&grid, &log_phi, i0, i1);

    // Monotone Dirichlet ladder R/2^k, ..., R on the same aligned grid.
    let mut radii: Vec<f64> = (0..opts.ladder.max(1)).rev().map(|k| grid.x_hi / 2f64.powi(k as i32)).collect();
    radii.retain(|r| *r > 4.0 * h);
    let r0 = radii[0];
    let probe: Vec<usize> = (zero..n).filter(|&i| grid.x(i) <= 0.5 * r0).collect();
    let mut table = Vec::new();
    let mut monotone = true;
    let mut previous: Option<Vec<f64>> = None;
    for &r in &radii {
        let lp = if (r - grid.x_hi).abs() < 0.5 * h {
            log_phi.clone()
        } else {
            let (g_r, z_r) = aligned_grid(opts.x_left, r, h)?;
            log_phi_from_ratios(&ratio_sweep(field, &g_r, gamma)?, z_r)
        };
        let diff = probe.iter().fold(0.0_f64, |m, &i| m.max((lp[i] - log_phi[i]).exp_m1().abs()));
        if let Some(prev) = &previous {
            if probe.iter().any(|&i| prev[i] > lp[i] + 1e-10) {
                monotone = false;
            }
        }
        table.push((g_r_hi(r, h), diff));
        previous = Some(lp);
    }

    Ok(DecayProfile {
        gamma,
        grid,
        zero_index: zero,
        phi,
        log_phi,
        log_ratio: log_g,
        sigma,
        mu,
        mu_regression,
        r_used: grid.x_hi,
        core,
        monotone_table: table,
        monotone,
    })
}

fn g_r_hi(r: f64, h: f64) -> f64 {
    (r / h).round() * h
}

fn slope(grid: &Grid1D, v: &[f64], i0: usize, i1: usize) -> f64 {
    let m = (i1 - i0 + 1) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in i0..=i1 {
        let x = grid.x(i);
        sx += x;
        sy += v[i];
        sxx += x * x;
        sxy += x * v[i];
    }
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// `μ(γ)`, with one doubling of the domain when the spread exceeds 1 %.
pub fn mu(field: &CoefficientField, gamma: f64, lam: Lambda1Ref, opts: &DecayOptions) -> Result<BohrMean> {
    Ok(mu_profile(field, gamma, lam, opts)?.mu)
}

/// As [`mu`] but returns the whole profile.
pub fn mu_profile(field: &CoefficientField, gamma: f64, lam: Lambda1Ref, opts: &DecayOptions) -> Result<DecayProfile> {
    let p = phi_gamma(field, gamma, lam, opts)?;
    if p.mu.uncertainty < 0.01 * p.mu.value || opts.radius.is_some() {
        return Ok(p);
    }
    let wider = DecayOptions { radius: Some(2.0 * p.r_used), ..opts.clone() };
    phi_gamma(field, gamma, lam, &wider)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuPoint {
    pub gamma: f64,
    pub mu: BohrMean,
    pub mu_regression: f64,
    pub r_used: f64,
    /// `√((γ − λ₁)/sup a)`.
    pub lo_bound: f64,
    /// `C √γ` with the fitted envelope constant.
    pub up_bound: f64,
    pub flags: Vec<String>,
}

/// Extrapolated `μ̲ = lim_{γ↘λ₁} μ(γ)` from `μ ≈ μ̲ + β√(γ − λ₁)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MuLowerLimit {
    pub value: f64,
    pub uncertainty: f64,
    pub beta: f64,
}

impl MuLowerLimit {
    pub fn contains_zero(&self) -> bool {
        self.value.abs() <= self.uncertainty
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuCurve {
    pub points: Vec<MuPoint>,
    pub lambda1_ref: Lambda1Ref,
    pub mu_lower_limit: MuLowerLimit,
    pub envelope_c: f64,
    pub warnings: Vec<String>,
}

impl MuCurve {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

/// Slack for the discretized decay rate, which runs below the continuous one
/// by about `μ (μh)²/24`.
fn discretization_slack(mu: f64, h: f64) -> f64 {
    mu * (mu * h).powi(2) / 12.0 + 1e-9
}

/// Fits `μ̲` on the three smallest `γ`.
pub fn fit_mu_lower(points: &[(f64, BohrMean)], lam: Lambda1Ref) -> Result<MuLowerLimit> {
    let mut pts: Vec<(f64, BohrMean)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 3 {
        return Err(Error::Argument("μ̲ extrapolation needs at least three γ values".into()));
    }
    let pts = &pts[..3];
    let xs: Vec<f64> = pts.iter().map(|(g, _)| (g - lam.value).sqrt()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, m)| m.value).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let beta = sxy / sxx;
    let value = ym - beta * xm;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - value - beta * x).powi(2)).sum();
    // One residual degree of freedom.
    let se = (rss * (1.0 / 3.0 + xm * xm / sxx)).sqrt();
    let bohr = pts.iter().fold(0.0_f64, |m, (_, b)| m.max(b.uncertainty));
    let lam_effect = beta.abs() * lam.tol / (2.0 * xs[0]);
    Ok(MuLowerLimit { value, uncertainty: 2.0 * se + bohr + lam_effect, beta })
}

/// `μ` on a list of `γ` values (evaluated in parallel) with structural checks.
pub fn mu_curve(field: &CoefficientField, gammas: &[f64], lam: Lambda1Ref, opts: &DecayOptions) -> Result<MuCurve> {
    let mut gammas = gammas.to_vec();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let constant_c = field.has_constant_c();
    let evaluated = par::try_map(&gammas, |&g| {
        let p = mu_profile(field, g, lam, opts)?;
        let excess = if constant_c {
            // Truncation at R lifts σ by about 2μ e^{−2μ d}, d the gap from the core to R.
            let layer = 2.0 * p.mu.value * (-2.0 * p.mu.value * (p.r_used - p.core.1)).exp();
            p.constant_c_sigma_excess(field) - layer
        } else {
            f64::NEG_INFINITY
        };
        Ok::<_, Error>((p.mu, p.mu_regression, p.r_used, p.monotone, excess))
    })?;
    let b = field.bounds();
    let envelope_c = gammas
        .iter()
        .zip(&evaluated)
        .map(|(g, e)| e.0.value / g.sqrt())
        .fold(0.0, f64::max);
    let mut points: Vec<MuPoint> = gammas
        .iter()
        .zip(&evaluated)
        .map(|(&g, &(m, reg, r, monotone, excess))| {
            let lo = ((g - lam.value) / b.a_max).sqrt();
            let mut flags = Vec::new();
            let slack = lam.tol / (2.0 * (g - lam.value).sqrt()) + m.uncertainty + discretization_slack(m.value, opts.h);
            if m.value < lo - slack {
                flags.push("below_lower_bound".to_string());
            }
            if m.value > envelope_c * g.sqrt() + m.uncertainty + 1e-12 {
                flags.push("above_envelope".to_string());
            }
            if !monotone {
                flags.push("nonmonotone_in_r".to_string());
            }
            if excess > 1e-9 * (g - b.c_min).abs().sqrt().max(1.0) {
                flags.push("sigma_bound".to_string());
            }
            MuPoint { gamma: g, mu: m, mu_regression: reg, r_used: r, lo_bound: lo, up_bound: envelope_c * g.sqrt(), flags }
        })
        .collect();
    for k in 1..points.len() {
        let (a, b) = (&points[k - 1], &points[k]);
        if b.mu.value < a.mu.value - a.mu.uncertainty - b.mu.uncertainty - 1e-9 {
            points[k].flags.push("nonincreasing".to_string());
        }
    }
    for k in 1..points.len().saturating_sub(1) {
        let (p0, p1, p2) = (&points[k - 1], &points[k], &points[k + 1]);
        let t = (p1.gamma - p0.gamma) / (p2.gamma - p0.gamma);
        let chord = p0.mu.value + t * (p2.mu.value - p0.mu.value);
        let budget = p0.mu.uncertainty + p1.mu.uncertainty + p2.mu.uncertainty + 1e-8;
        if p1.mu.value < chord - budget {
            points[k].flags.push("nonconcave".to_string());
        }
    }
    let warnings = points
        .iter()
        .flat_map(|p| p.flags.iter().map(move |f| format!("γ = {}: {f}", p.gamma)))
        .collect();
    let pairs: Vec<(f64, BohrMean)> = points.iter().map(|p| (p.gamma, p.mu)).collect();
    let mu_lower_limit = fit_mu_lower(&pairs, lam)?;
    Ok(MuCurve { points, lambda1_ref: lam, mu_lower_limit, envelope_c, warnings })
}

/// `λ₁ + Δ` for a geometric ladder of `Δ` refined toward `λ₁`.
pub fn default_gamma_grid(lam: Lambda1Ref) -> Vec<f64> {
    let m = lam.margin();
    let scale = lam.value.abs().max(1.0);
    let mut out: Vec<f64> = [1.0, 4.0, 16.0].iter().map(|k| lam.value + k * m * 1.0001).collect();
    out.extend([0.1, 0.3, 1.0, 3.0].iter().map(|d| lam.value + d * scale));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(v: f64) -> Lambda1Ref {
        Lambda1Ref { value: v, tol: 1e-6 }
    }

    #[test]
    fn constant_exponential() {
        let f = CoefficientField::constant(1.0, 1.0).unwrap();
        let opts = DecayOptions { h: 5e-4, ..DecayOptions::default() };
        let p = phi_gamma(&f, 2.0, lam(1.0), &opts).unwrap();
        assert_eq!(p.phi[p.zero_index], 1.0);
        for i in p.zero_index..p.grid.n {
            let x = p.grid.x(i);
            if x > 20.0 {
                break;
            }
            assert!((p.phi[i] / (-x).exp() - 1.0).abs() < 1e-6, "x = {x}");
        }
        assert!((p.mu.value - 1.0).abs() < 1e-6);
        assert!(p.monotone);
    }

    #[test]
    fn diffusivity_rescales_mu() {
        let f = CoefficientField::constant(4.0, 1.0).unwrap();
        let m = mu(&f, 2.0, lam(1.0), &DecayOptions::default()).unwrap();
        assert!((m.value - 0.5).abs() < 1e-4);
    }

    #[test]
    fn gamma_too_close_is_rejected() {
        let f = CoefficientField::constant(1.0, 1.0).unwrap();
        let r = phi_gamma(&f, 1.0005, lam(1.0), &DecayOptions::default());
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn extension_left_of_zero_grows() {
        let f = CoefficientField::periodic_sine(1.0, 1.0, 0.5, 1.0).unwrap();
        let opts = DecayOptions { x_left: -20.0, ..DecayOptions::default() };
        let p = phi_gamma(&f, 3.0, lam(1.0), &opts).unwrap();
        assert!(p.phi.iter().take(p.grid.n - 1).all(|v| *v > 0.0));
        assert!(p.log_phi[0] > 10.0);
    }
}
