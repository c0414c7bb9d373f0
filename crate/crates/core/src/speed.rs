//! Critical speed `w* = inf_{γ>λ₁} γ/μ(γ)`, the upper threshold `w̲ = λ₁/μ̲`,
//! the dual route `min_p k_p/p`, and the choice of `γ` for a target speed.

use serde::{Deserialize, Serialize};

use crate::coeff::{BohrMean, CoefficientField};
use crate::decay::{self, DecayOptions, Lambda1Ref, MuLowerLimit};
use crate::eigen::{self, EigenEstimate, KpConfig, Lambda1Config};
use crate::error::{Error, Result};
use crate::numerics;
use crate::par;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedConfig {
    pub lambda1: Lambda1Config,
    pub decay: DecayOptions,
    /// `Γ_max = λ₁ + gamma_max_factor · λ₁`.
    pub gamma_max_factor: f64,
    pub scan_points: usize,
    /// Golden-section stopping width, relative to the bracket.
    pub golden_rel_tol: f64,
    pub kp: KpConfig,
    pub kp_points: usize,
    pub kp_cross_check: bool,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        SpeedConfig {
            lambda1: Lambda1Config::default(),
            decay: DecayOptions::default(),
            gamma_max_factor: 100.0,
            scan_points: 24,
            golden_rel_tol: 1e-6,
            kp: KpConfig::default(),
            kp_points: 25,
            kp_cross_check: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma: f64,
    pub mu: f64,
    pub mu_uncertainty: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KpCrossCheck {
    pub w_kp: f64,
    pub p_star: f64,
    /// `|w* − w_kp| / w*`.
    pub discrepancy: f64,
    /// `(p, k_p, k_p/p)` on the scan grid.
    pub table: Vec<(f64, f64, f64)>,
    pub curve: eigen::KpCurve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedReport {
    pub lambda1: f64,
    pub lambda1_tol: f64,
    pub lambda1_table: Vec<(f64, f64)>,
    pub mu_lower: MuLowerLimit,
    /// `λ₁/μ̲`, infinite when the μ̲ interval contains 0.
    #[serde(with = "ext_float")]
    pub w_lower: f64,
    /// `λ₁/(μ̲ + uncertainty)` when the μ̲ interval straddles 0.
    pub w_lower_if_positive: Option<f64>,
    pub w_star: f64,
    /// Minimizer, when interior to the bracket.
    pub gamma_star: Option<f64>,
    pub gamma_argmin: f64,
    pub mu_star: f64,
    pub attained: bool,
    pub bracket: (f64, f64),
    pub gamma_max: f64,
    pub scan: Vec<ScanRow>,
    pub golden_evaluations: usize,
    pub kp_cross_check: Option<KpCrossCheck>,
    /// `w* < w̲`: the window of front speeds is nonempty.
    pub window_nonempty: bool,
    pub diagnostics: Vec<String>,
}

impl SpeedReport {
    pub fn lambda1_ref(&self) -> Lambda1Ref {
        Lambda1Ref { value: self.lambda1, tol: self.lambda1_tol }
    }
}

/// Writes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod ext_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

fn ratio_at(field: &CoefficientField, gamma: f64, lam: Lambda1Ref, opts: &DecayOptions) -> Result<(f64, BohrMean)> {
    let m = decay::mu(field, gamma, lam, opts)?;
    Ok((gamma / m.value, m))
}

/// Full speed report; computes `λ₁` first.
pub fn speed_report(field: &CoefficientField, cfg: &SpeedConfig) -> Result<SpeedReport> {
    let est = eigen::lambda1(field, &cfg.lambda1)?;
    speed_report_with(field, &est, cfg)
}

/// Speed report reusing an already computed `λ₁`.
pub fn speed_report_with(field: &CoefficientField, est: &EigenEstimate, cfg: &SpeedConfig) -> Result<SpeedReport> {
    let lam = Lambda1Ref::from(est);
    if !(lam.value > 0.0) {
        return Err(Error::Range(format!("λ₁ = {} is not positive", lam.value)));
    }
    let m = lam.margin();
    let gamma_max = lam.value + cfg.gamma_max_factor * lam.value;
    let mut deltas: Vec<f64> = [1.0, 4.0, 16.0].iter().map(|k| k * m * 1.0001).collect();
    let first = (0.02 * lam.value).max(20.0 * m);
    deltas.extend(numerics::geomspace(first, gamma_max - lam.value, cfg.scan_points.max(4)));
    let gammas: Vec<f64> = deltas.iter().map(|d| lam.value + d).collect();
    let evaluated = par::try_map(&gammas, |&g| ratio_at(field, g, lam, &cfg.decay))?;
    let scan: Vec<ScanRow> = gammas
        .iter()
        .zip(&evaluated)
        .map(|(&gamma, (ratio, mu))| ScanRow { gamma, mu: mu.value, mu_uncertainty: mu.uncertainty, ratio: *ratio })
        .collect();

    let mut diagnostics = Vec::new();
    let k = (0..scan.len()).min_by(|&i, &j| scan[i].ratio.total_cmp(&scan[j].ratio)).expect("nonempty scan");
    if k + 1 == scan.len() {
        return Err(Error::Range(format!(
            "γ/μ(γ) still decreasing at Γ_max = {gamma_max}; scan: {:?}",
            scan.iter().map(|r| (r.gamma, r.ratio)).collect::<Vec<_>>()
        )));
    }
    let lo = if k == 0 { lam.value + m } else { scan[k - 1].gamma };
    let hi = scan[k + 1].gamma;
    let x_tol = cfg.golden_rel_tol * (hi - lo);
    let (g_star, w_star, evals) =
        numerics::golden_section(|g| Ok(ratio_at(field, g, lam, &cfg.decay)?.0), lo, hi, x_tol)?;
    let w_star = w_star.min(scan[k].ratio);
    let g_star = if w_star == scan[k].ratio { scan[k].gamma } else { g_star };
    let attained = g_star - lo > 2.0 * x_tol && hi - g_star > 2.0 * x_tol;
    if !attained {
        diagnostics.push(format!("minimizer at the bracket edge [{lo}, {hi}]; w* reported as an infimum estimate"));
    }
    let mu_star = decay::mu(field, g_star, lam, &cfg.decay)?.value;

    let fit: Vec<(f64, BohrMean)> = scan[..3]
        .iter()
        .map(|r| (r.gamma, BohrMean { value: r.mu, uncertainty: r.mu_uncertainty, window: 0.0, offsets_tested: 0 }))
        .collect();
    let mu_lower = decay::fit_mu_lower(&fit, lam)?;
    let (w_lower, w_lower_if_positive) = if mu_lower.contains_zero() || mu_lower.value <= 0.0 {
        let alt = mu_lower.value + mu_lower.uncertainty;
        if alt > 0.0 && mu_lower.value > -mu_lower.uncertainty && mu_lower.value + mu_lower.uncertainty > 0.0 {
            diagnostics.push(format!(
                "μ̲ = {} ± {} straddles 0: window [w*, ∞) if μ̲ = 0, [w*, {}) otherwise",
                mu_lower.value,
                mu_lower.uncertainty,
                lam.value / alt
            ));
        }
        (f64::INFINITY, (alt > 0.0).then(|| lam.value / alt))
    } else {
        (lam.value / mu_lower.value, None)
    };

    for r in &scan {
        if r.ratio < w_star - 1e-9 * w_star {
            diagnostics.push(format!("scan value {} at γ = {} below w*", r.ratio, r.gamma));
        }
    }

    let kp_cross_check = if cfg.kp_cross_check {
        let c = kp_cross_check(field, mu_star, lam, &cfg.kp, cfg.kp_points)?;
        let disc = (w_star - c.0).abs() / w_star;
        if disc > 0.01 {
            diagnostics.push(format!("k_p route gives {} against w* = {w_star}", c.0));
        }
        diagnostics.extend(c.3.warnings.iter().cloned());
        Some(KpCrossCheck { w_kp: c.0, p_star: c.1, discrepancy: disc, table: c.2, curve: c.3 })
    } else {
        None
    };

    Ok(SpeedReport {
        lambda1: lam.value,
        lambda1_tol: lam.tol,
        lambda1_table: est.samples.clone(),
        mu_lower,
        w_lower,
        w_lower_if_positive,
        w_star,
        gamma_star: attained.then_some(g_star),
        gamma_argmin: g_star,
        mu_star,
        attained,
        bracket: (lo, hi),
        gamma_max,
        scan,
        golden_evaluations: evals,
        kp_cross_check,
        window_nonempty: w_star < w_lower,
        diagnostics,
    })
}

type KpRoute = (f64, f64, Vec<(f64, f64, f64)>, eigen::KpCurve);

/// `min_{p>0} k_p/p` on a geometric grid around `p = μ(γ*)`, refined by golden section.
pub fn kp_cross_check(field: &CoefficientField, mu_star: f64, lam: Lambda1Ref, cfg: &KpConfig, points: usize) -> Result<KpRoute> {
    let ps = numerics::geomspace(0.2 * mu_star, 5.0 * mu_star, points.max(3));
    let curve = eigen::kp_curve(field, &ps, lam.value, cfg)?;
    let table: Vec<(f64, f64, f64)> = curve.entries.iter().map(|e| (e.p, e.k_p, e.k_p / e.p)).collect();
    let k = (0..table.len()).min_by(|&i, &j| table[i].2.total_cmp(&table[j].2)).expect("nonempty grid");
    let lo = table[k.saturating_sub(1)].0;
    let hi = table[(k + 1).min(table.len() - 1)].0;
    let (p, w, _) = numerics::golden_section(|p| Ok(eigen::k_p(field, p, cfg)?.k_p / p), lo, hi, 1e-5 * (hi - lo))?;
    let (p, w) = if w <= table[k].2 { (p, w) } else { (table[k].0, table[k].2) };
    Ok((w, p, table, curve))
}

/// `γ` and `ε` for a prescribed speed `w ∈ (w*, w̲)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaChoice {
    pub w: f64,
    pub gamma: f64,
    pub mu_gamma: BohrMean,
    pub epsilon: f64,
    /// `(ε, (1+ε)γ/μ((1+ε)γ), admissible)`.
    pub epsilon_table: Vec<(f64, f64, bool)>,
}

pub const EPSILON_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

/// Smallest root of `w μ(γ) = γ` in `(λ₁, γ*)` and the largest admissible `ε`.
///
/// `ε` is admissible when `w − (1+ε)γ/μ((1+ε)γ) ≥ 0.05 (w − w*)`.
pub fn gamma_for_speed(field: &CoefficientField, w: f64, report: &SpeedReport, opts: &DecayOptions) -> Result<GammaChoice> {
    if !(w > report.w_star * (1.0 + 1e-9)) || !(w < report.w_lower) {
        return Err(Error::Argument(format!(
            "speed {w} outside the front window ({}, {})",
            report.w_star, report.w_lower
        )));
    }
    let lam = report.lambda1_ref();
    let lo = lam.value + lam.margin() * 1.0001;
    let hi = report.gamma_argmin;
    let f = |g: f64| -> Result<f64> { Ok(w * decay::mu(field, g, lam, opts)?.value - g) };
    if f(lo)? >= 0.0 {
        return Err(Error::Range(format!("w μ(γ) − γ already nonnegative at γ = {lo}; root too close to λ₁")));
    }
    let gamma = numerics::bisect(f, lo, hi, 1e-11 * hi.max(1.0))?;
    let mu_gamma = decay::mu(field, gamma, lam, opts)?;
    let gap = w - report.w_star;
    let mut table = Vec::new();
    let mut epsilon = None;
    for &eps in &EPSILON_GRID {
        let g = (1.0 + eps) * gamma;
        if g > report.gamma_max {
            table.push((eps, f64::NAN, false));
            continue;
        }
        let r = g / decay::mu(field, g, lam, opts)?.value;
        let ok = w - r >= 0.05 * gap;
        table.push((eps, r, ok));
        if ok && epsilon.is_none() {
            epsilon = Some(eps);
        }
    }
    let epsilon = epsilon.ok_or_else(|| {
        Error::Range(format!("no admissible ε in {EPSILON_GRID:?} for w = {w} (γ = {gamma})"))
    })?;
    Ok(GammaChoice { w, gamma, mu_gamma, epsilon, epsilon_table: table })
}

/// The field with `c` replaced by `c + c0`.
pub fn shift_zero_order(field: &CoefficientField, c0: f64) -> Result<CoefficientField> {
    let c_min = field.bounds().c_min;
    if !(c0 > -c_min) {
        return Err(Error::Argument(format!("shift {c0} would make c nonpositive (inf c = {c_min})")));
    }
    if c0 == 0.0 {
        return Ok(field.clone());
    }
    field.shifted(c0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftRow {
    pub c0: f64,
    pub lambda1: f64,
    /// `λ₁(c + c₀) − λ₁(c) − c₀`.
    pub lambda1_shift_error: f64,
    /// `(γ, μ(γ), μ_{c₀}(γ + c₀), |difference|, summed uncertainty)`.
    pub mu_pairs: Vec<(f64, f64, f64, f64, f64)>,
    pub w_star: f64,
    #[serde(with = "ext_float")]
    pub w_lower: f64,
    pub window_nonempty: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    pub base_lambda1: f64,
    pub rows: Vec<ShiftRow>,
    /// Smallest tested `c₀` with `w* < w̲`.
    pub threshold_c0: Option<f64>,
    pub w_star_nondecreasing: bool,
}

/// Checks `μ_{c₀}(γ + c₀) = μ(γ)`, the `λ₁` shift and the window flag over `c0s`.
pub fn shift_check(field: &CoefficientField, c0s: &[f64], gammas: &[f64], cfg: &SpeedConfig) -> Result<ShiftReport> {
    let base = eigen::lambda1(field, &cfg.lambda1)?;
    let lam = Lambda1Ref::from(&base);
    let base_mu = par::try_map(gammas, |&g| decay::mu(field, g, lam, &cfg.decay))?;
    let no_kp = SpeedConfig { kp_cross_check: false, ..cfg.clone() };
    let rows = par::try_map(c0s, |&c0| {
        let shifted = shift_zero_order(field, c0)?;
        let est = eigen::lambda1(&shifted, &cfg.lambda1)?;
        let lam_s = Lambda1Ref::from(&est);
        let mut pairs = Vec::new();
        for (g, m) in gammas.iter().zip(&base_mu) {
            let ms = decay::mu(&shifted, g + c0, lam_s, &cfg.decay)?;
            pairs.push((*g, m.value, ms.value, (m.value - ms.value).abs(), m.uncertainty + ms.uncertainty));
        }
        let rep = speed_report_with(&shifted, &est, &no_kp)?;
        Ok::<_, Error>(ShiftRow {
            c0,
            lambda1: est.lambda1,
            lambda1_shift_error: est.lambda1 - base.lambda1 - c0,
            mu_pairs: pairs,
            w_star: rep.w_star,
            w_lower: rep.w_lower,
            window_nonempty: rep.window_nonempty,
        })
    })?;
    let threshold_c0 = rows.iter().filter(|r| r.window_nonempty).map(|r| r.c0).fold(None, |m: Option<f64>, c| {
        Some(m.map_or(c, |m| m.min(c)))
    });
    let mut sorted: Vec<&ShiftRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.c0.total_cmp(&b.c0));
    let w_star_nondecreasing = sorted.windows(2).all(|w| w[1].w_star >= w[0].w_star * (1.0 - 1e-6));
    Ok(ShiftReport { base_lambda1: base.lambda1, rows, threshold_c0, w_star_nondecreasing })
}
