//! Almost periodic coefficient fields `(a, a', c)`, uniform grids, Bohr means
//! and almost-period scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Finite trigonometric polynomial `mean + Σ cos_k cos(ω_k x) + sin_k sin(ω_k x)`.
///
/// Frequencies live on the owning field so that `a` and `c` share them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn constant(mean: f64) -> Self {
        TrigPoly { mean, cos: vec![], sin: vec![] }
    }

    fn amplitude(list: &[f64], k: usize) -> f64 {
        list.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, freqs: &[f64], x: f64) -> f64 {
        let mut v = self.mean;
        for (k, w) in freqs.iter().enumerate() {
            let (s, c) = (w * x).sin_cos();
            v += Self::amplitude(&self.cos, k) * c + Self::amplitude(&self.sin, k) * s;
        }
        v
    }

    pub fn derivative(&self, freqs: &[f64], x: f64) -> f64 {
        let mut v = 0.0;
        for (k, w) in freqs.iter().enumerate() {
            let (s, c) = (w * x).sin_cos();
            v += w * (-Self::amplitude(&self.cos, k) * s + Self::amplitude(&self.sin, k) * c);
        }
        v
    }

    /// Sum of absolute amplitudes; bounds the oscillation around the mean.
    pub fn l1_amplitude(&self) -> f64 {
        self.cos.iter().chain(self.sin.iter()).map(|v| v.abs()).sum()
    }
}

/// Coefficient field description, as stored in JSON documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Constant {
        a: f64,
        c: f64,
    },
    Periodic {
        period: f64,
        frequencies: Vec<f64>,
        a: TrigPoly,
        c: TrigPoly,
    },
    Quasiperiodic {
        frequencies: Vec<f64>,
        a: TrigPoly,
        c: TrigPoly,
    },
    /// Samples at `x0 + i·h`, linearly interpolated.
    Tabulated {
        x0: f64,
        h: f64,
        a: Vec<f64>,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Constant,
    Periodic,
    Quasiperiodic,
    Tabulated,
}

/// Point values of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub a: f64,
    pub a_prime: f64,
    pub c: f64,
}

/// Extremes of `a` and `c` over the probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

const PROBE_POINTS: usize = 100_000;

/// An almost periodic coefficient field for `u_t = (a u_x)_x + c u (1 - u)`.
///
/// Immutable once built; construction validates positivity of `a` and `c`
/// on a 10⁵-point probe grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldDocument", into = "FieldDocument")]
pub struct CoefficientField {
    spec: FieldSpec,
    probe_range: (f64, f64),
    bounds: FieldBounds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldDocument {
    #[serde(flatten)]
    spec: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probe_range: Option<(f64, f64)>,
}

impl TryFrom<FieldDocument> for CoefficientField {
    type Error = Error;

    fn try_from(doc: FieldDocument) -> Result<Self> {
        CoefficientField::with_probe_range(doc.spec, doc.probe_range)
    }
}

impl From<CoefficientField> for FieldDocument {
    fn from(f: CoefficientField) -> Self {
        FieldDocument { spec: f.spec, probe_range: Some(f.probe_range) }
    }
}

impl CoefficientField {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        Self::with_probe_range(spec, None)
    }

    pub fn with_probe_range(spec: FieldSpec, probe_range: Option<(f64, f64)>) -> Result<Self> {
        let probe_range = match (probe_range, &spec) {
            (Some(r), _) => r,
            (None, FieldSpec::Tabulated { x0, h, a, .. }) => {
                (*x0, x0 + h * (a.len().saturating_sub(1)) as f64)
            }
            (None, _) => (-500.0, 500.0),
        };
        check_spec(&spec)?;
        if !(probe_range.1 > probe_range.0) {
            return Err(Error::Argument(format!("empty probe range {probe_range:?}")));
        }
        let mut field = CoefficientField {
            spec,
            probe_range,
            bounds: FieldBounds { a_min: 0.0, a_max: 0.0, c_min: 0.0, c_max: 0.0 },
        };
        field.bounds = field.probe_bounds()?;
        if field.bounds.a_min <= 0.0 {
            return Err(Error::Argument(format!(
                "diffusivity must be positive, inf a = {}",
                field.bounds.a_min
            )));
        }
        if field.bounds.c_min <= 0.0 {
            return Err(Error::Argument(format!(
                "reaction rate must be positive, inf c = {}",
                field.bounds.c_min
            )));
        }
        Ok(field)
    }

    pub fn constant(a: f64, c: f64) -> Result<Self> {
        Self::new(FieldSpec::Constant { a, c })
    }

    /// `a` constant and `c(x) = c_mean + amp·sin(2πx/period)`.
    pub fn periodic_sine(a: f64, c_mean: f64, amp: f64, period: f64) -> Result<Self> {
        Self::new(FieldSpec::Periodic {
            period,
            frequencies: vec![2.0 * std::f64::consts::PI / period],
            a: TrigPoly::constant(a),
            c: TrigPoly { mean: c_mean, cos: vec![0.0], sin: vec![amp] },
        })
    }

    /// `a` constant and `c(x) = c_mean + eps·(cos x + cos √2 x)`.
    pub fn two_frequency(a: f64, c_mean: f64, eps: f64) -> Result<Self> {
        Self::new(FieldSpec::Quasiperiodic {
            frequencies: vec![1.0, std::f64::consts::SQRT_2],
            a: TrigPoly::constant(a),
            c: TrigPoly { mean: c_mean, cos: vec![eps, eps], sin: vec![] },
        })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn kind(&self) -> FieldKind {
        match self.spec {
            FieldSpec::Constant { .. } => FieldKind::Constant,
            FieldSpec::Periodic { .. } => FieldKind::Periodic,
            FieldSpec::Quasiperiodic { .. } => FieldKind::Quasiperiodic,
            FieldSpec::Tabulated { .. } => FieldKind::Tabulated,
        }
    }

    pub fn probe_range(&self) -> (f64, f64) {
        self.probe_range
    }

    pub fn bounds(&self) -> FieldBounds {
        self.bounds
    }

    /// Declared period, for the periodic kind.
    pub fn period(&self) -> Option<f64> {
        match self.spec {
            FieldSpec::Periodic { period, .. } => Some(period),
            _ => None,
        }
    }

    pub fn frequencies(&self) -> &[f64] {
        match &self.spec {
            FieldSpec::Periodic { frequencies, .. } | FieldSpec::Quasiperiodic { frequencies, .. } => {
                frequencies
            }
            _ => &[],
        }
    }

    /// Is `c` constant (the closed-form regime)?
    pub fn has_constant_c(&self) -> bool {
        match &self.spec {
            FieldSpec::Constant { .. } => true,
            FieldSpec::Periodic { c, .. } | FieldSpec::Quasiperiodic { c, .. } => {
                c.l1_amplitude() == 0.0
            }
            FieldSpec::Tabulated { c, .. } => c.iter().all(|v| *v == c[0]),
        }
    }

    /// Field with `c` replaced by `c + c0`.
    pub fn shifted(&self, c0: f64) -> Result<Self> {
        let spec = match &self.spec {
            FieldSpec::Constant { a, c } => FieldSpec::Constant { a: *a, c: c + c0 },
            FieldSpec::Periodic { period, frequencies, a, c } => FieldSpec::Periodic {
                period: *period,
                frequencies: frequencies.clone(),
                a: a.clone(),
                c: TrigPoly { mean: c.mean + c0, ..c.clone() },
            },
            FieldSpec::Quasiperiodic { frequencies, a, c } => FieldSpec::Quasiperiodic {
                frequencies: frequencies.clone(),
                a: a.clone(),
                c: TrigPoly { mean: c.mean + c0, ..c.clone() },
            },
            FieldSpec::Tabulated { x0, h, a, c } => FieldSpec::Tabulated {
                x0: *x0,
                h: *h,
                a: a.clone(),
                c: c.iter().map(|v| v + c0).collect(),
            },
        };
        Self::with_probe_range(spec, Some(self.probe_range))
    }

    /// Evaluates `(a, a', c)` at `x`.
    pub fn eval(&self, x: f64) -> Result<Coeffs> {
        match &self.spec {
            FieldSpec::Constant { a, c } => Ok(Coeffs { a: *a, a_prime: 0.0, c: *c }),
            FieldSpec::Periodic { frequencies, a, c, .. }
            | FieldSpec::Quasiperiodic { frequencies, a, c } => Ok(Coeffs {
                a: a.eval(frequencies, x),
                a_prime: a.derivative(frequencies, x),
                c: c.eval(frequencies, x),
            }),
            FieldSpec::Tabulated { x0, h, a, c } => {
                let n = a.len();
                let (i, t) = table_position(*x0, *h, n, x)?;
                let lerp = |v: &[f64]| v[i] + t * (v[(i + 1).min(n - 1)] - v[i]);
                let slope = |j: usize| {
                    if j == 0 {
                        (a[1] - a[0]) / h
                    } else if j == n - 1 {
                        (a[n - 1] - a[n - 2]) / h
                    } else {
                        (a[j + 1] - a[j - 1]) / (2.0 * h)
                    }
                };
                let s0 = slope(i);
                let s1 = slope((i + 1).min(n - 1));
                Ok(Coeffs { a: lerp(a), a_prime: s0 + t * (s1 - s0), c: lerp(c) })
            }
        }
    }

    /// Diffusivity only (hot path for the midpoint stencil).
    pub fn a(&self, x: f64) -> Result<f64> {
        match &self.spec {
            FieldSpec::Constant { a, .. } => Ok(*a),
            FieldSpec::Periodic { frequencies, a, .. } | FieldSpec::Quasiperiodic { frequencies, a, .. } => {
                Ok(a.eval(frequencies, x))
            }
            FieldSpec::Tabulated { .. } => Ok(self.eval(x)?.a),
        }
    }

    /// Reaction rate only.
    pub fn c(&self, x: f64) -> Result<f64> {
        match &self.spec {
            FieldSpec::Constant { c, .. } => Ok(*c),
            FieldSpec::Periodic { frequencies, c, .. } | FieldSpec::Quasiperiodic { frequencies, c, .. } => {
                Ok(c.eval(frequencies, x))
            }
            FieldSpec::Tabulated { .. } => Ok(self.eval(x)?.c),
        }
    }

    /// Samples the field on a grid, including `a` at the cell faces.
    pub fn sample(&self, grid: &Grid1D) -> Result<GridCoefficients> {
        let n = grid.n;
        let h = grid.h();
        let mut a_face = Vec::with_capacity(n + 1);
        for i in 0..=n {
            a_face.push(self.a(grid.x_lo + (i as f64 - 0.5) * h)?);
        }
        let mut a = Vec::with_capacity(n);
        let mut a_prime = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            let k = self.eval(grid.x(i))?;
            a.push(k.a);
            a_prime.push(k.a_prime);
            c.push(k.c);
        }
        Ok(GridCoefficients { h, a_face, a, a_prime, c })
    }

    fn probe_bounds(&self) -> Result<FieldBounds> {
        let (lo, hi) = self.probe_range;
        let mut b = FieldBounds {
            a_min: f64::INFINITY,
            a_max: f64::NEG_INFINITY,
            c_min: f64::INFINITY,
            c_max: f64::NEG_INFINITY,
        };
        if let FieldSpec::Constant { a, c } = self.spec {
            return Ok(FieldBounds { a_min: a, a_max: a, c_min: c, c_max: c });
        }
        let h = (hi - lo) / (PROBE_POINTS - 1) as f64;
        for i in 0..PROBE_POINTS {
            let x = if i + 1 == PROBE_POINTS { hi } else { lo + i as f64 * h };
            let k = self.eval(x)?;
            b.a_min = b.a_min.min(k.a);
            b.a_max = b.a_max.max(k.a);
            b.c_min = b.c_min.min(k.c);
            b.c_max = b.c_max.max(k.c);
        }
        Ok(b)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn table_position(x0: f64, h: f64, n: usize, x: f64) -> Result<(usize, f64)> {
    let s = (x - x0) / h;
    let last = (n - 1) as f64;
    // Half-ulp slack so that nodes computed as x0 + i·h stay in range.
    if !(s >= -1e-9) || !(s <= last + 1e-9) {
        return Err(Error::Range(format!(
            "x = {x} outside tabulated range [{x0}, {}]",
            x0 + h * last
        )));
    }
    let s = s.clamp(0.0, last);
    let i = (s.floor() as usize).min(n.saturating_sub(2));
    Ok((i, s - i as f64))
}

fn check_spec(spec: &FieldSpec) -> Result<()> {
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    match spec {
        FieldSpec::Constant { a, c } => {
            if !finite(&[*a, *c]) {
                return Err(Error::Argument("non-finite constant coefficient".into()));
            }
        }
        FieldSpec::Periodic { period, frequencies, a, c } => {
            check_trig(frequencies, a, c)?;
            if !(*period > 0.0) {
                return Err(Error::Argument(format!("period must be positive, got {period}")));
            }
            for w in frequencies {
                let harmonic = w * period / (2.0 * std::f64::consts::PI);
                if (harmonic - harmonic.round()).abs() > 1e-9 {
                    return Err(Error::Argument(format!(
                        "frequency {w} is not a harmonic of period {period}"
                    )));
                }
            }
        }
        FieldSpec::Quasiperiodic { frequencies, a, c } => check_trig(frequencies, a, c)?,
        FieldSpec::Tabulated { x0, h, a, c } => {
            if a.len() != c.len() || a.len() < 2 {
                return Err(Error::Argument(format!(
                    "tabulated field needs matching tables of length >= 2 (a: {}, c: {})",
                    a.len(),
                    c.len()
                )));
            }
            if !(*h > 0.0) || !x0.is_finite() || !finite(a) || !finite(c) {
                return Err(Error::Argument("tabulated field has invalid spacing or samples".into()));
            }
        }
    }
    Ok(())
}

fn check_trig(freqs: &[f64], a: &TrigPoly, c: &TrigPoly) -> Result<()> {
    for p in [a, c] {
        if p.cos.len() > freqs.len() || p.sin.len() > freqs.len() {
            return Err(Error::Argument(format!(
                "{} amplitudes for {} frequencies",
                p.cos.len().max(p.sin.len()),
                freqs.len()
            )));
        }
        if !p.mean.is_finite() || !p.cos.iter().chain(p.sin.iter()).all(|v| v.is_finite()) {
            return Err(Error::Argument("non-finite amplitude".into()));
        }
    }
    if !freqs.iter().all(|w| w.is_finite()) {
        return Err(Error::Argument("non-finite frequency".into()));
    }
    Ok(())
}

/// Coefficients sampled on a [`Grid1D`].
///
/// `a_face[i]` is `a(x_i - h/2)`, so node `i` sees `a_face[i]` on its left
/// face and `a_face[i + 1]` on its right face.
#[derive(Debug, Clone)]
pub struct GridCoefficients {
    pub h: f64,
    pub a_face: Vec<f64>,
    pub a: Vec<f64>,
    pub a_prime: Vec<f64>,
    pub c: Vec<f64>,
}

/// Uniform grid `x_lo = x_0 < ... < x_{n-1} = x_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if n < 3 || !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::Argument(format!("invalid grid [{x_lo}, {x_hi}] with {n} points")));
        }
        Ok(Grid1D { x_lo, x_hi, n })
    }

    /// Grid starting at `x_lo` with spacing `h`, ending at the first node `>= x_hi`.
    pub fn with_spacing(x_lo: f64, x_hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Argument(format!("grid spacing must be positive, got {h}")));
        }
        let cells = ((x_hi - x_lo) / h - 1e-9).ceil().max(2.0) as usize;
        Self::new(x_lo, x_lo + cells as f64 * h, cells + 1)
    }

    pub fn h(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_hi
        } else {
            self.x_lo + i as f64 * self.h()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Nearest node index to `x`, clamped to the grid.
    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x - self.x_lo) / self.h()).round();
        s.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Sub-grid spanning nodes `i0..=i1`.
    pub fn sub(&self, i0: usize, i1: usize) -> Result<Self> {
        if i1 >= self.n || i1 < i0 + 2 {
            return Err(Error::Argument(format!("invalid sub-grid {i0}..={i1} of {} nodes", self.n)));
        }
        Ok(Grid1D { x_lo: self.x(i0), x_hi: self.x(i1), n: i1 - i0 + 1 })
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Linear interpolation of grid samples.
pub fn interpolate(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    let s = ((x - grid.x_lo) / grid.h()).clamp(0.0, (grid.n - 1) as f64);
    let i = (s.floor() as usize).min(grid.n - 2);
    let t = s - i as f64;
    values[i] + t * (values[i + 1] - values[i])
}

/// Window-averaged mean with a spread-based uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohrMean {
    pub value: f64,
    /// Max over tested offsets of |window average − value|.
    pub uncertainty: f64,
    pub window: f64,
    pub offsets_tested: usize,
}

impl BohrMean {
    fn from_averages(averages: &[f64], window: f64) -> Self {
        let value = averages.iter().sum::<f64>() / averages.len() as f64;
        let uncertainty = averages.iter().fold(0.0_f64, |m, v| m.max((v - value).abs()));
        BohrMean { value, uncertainty, window, offsets_tested: averages.len() }
    }
}

/// Bohr mean of `f` from Simpson window averages on `[s, s + window]`.
pub fn bohr_mean<F>(f: F, window: f64, offsets: &[f64]) -> Result<BohrMean>
where
    F: Fn(f64) -> f64,
{
    if offsets.is_empty() {
        return Err(Error::Argument("bohr_mean needs at least one offset".into()));
    }
    if !(window > 0.0) {
        return Err(Error::Argument(format!("window must be positive, got {window}")));
    }
    let mut panels = ((window / 0.01).ceil() as usize).max(1000);
    panels += panels % 2;
    let h = window / panels as f64;
    let averages: Vec<f64> = offsets
        .iter()
        .map(|&s| {
            let mut acc = f(s) + f(s + window);
            for k in 1..panels {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(s + k as f64 * h);
            }
            acc * h / 3.0 / window
        })
        .collect();
    Ok(BohrMean::from_averages(&averages, window))
}

/// Bohr mean of grid samples; every window `[s, s + window]` must lie in the grid.
pub fn bohr_mean_sampled(grid: &Grid1D, values: &[f64], window: f64, offsets: &[f64]) -> Result<BohrMean> {
    if offsets.is_empty() {
        return Err(Error::Argument("bohr_mean needs at least one offset".into()));
    }
    if !(window > 0.0) {
        return Err(Error::Argument(format!("window must be positive, got {window}")));
    }
    let h = grid.h();
    let mut cumulative = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * h * (values[i - 1] + values[i]);
        cumulative.push(acc);
    }
    let slack = 1e-9 * grid.length().max(1.0);
    let mut averages = Vec::with_capacity(offsets.len());
    for &s in offsets {
        if s < grid.x_lo - slack || s + window > grid.x_hi + slack {
            return Err(Error::Range(format!(
                "window [{s}, {}] leaves sampled range [{}, {}]",
                s + window,
                grid.x_lo,
                grid.x_hi
            )));
        }
        let integral = primitive(grid, values, &cumulative, s + window) - primitive(grid, values, &cumulative, s);
        averages.push(integral / window);
    }
    Ok(BohrMean::from_averages(&averages, window))
}

/// Exact integral from `x_lo` to `x` of the piecewise-linear interpolant.
fn primitive(grid: &Grid1D, values: &[f64], cumulative: &[f64], x: f64) -> f64 {
    let h = grid.h();
    let s = ((x - grid.x_lo) / h).clamp(0.0, (grid.n - 1) as f64);
    let i = (s.floor() as usize).min(grid.n - 2);
    let t = s - i as f64;
    let v0 = values[i];
    let v1 = values[i + 1];
    cumulative[i] + h * t * (v0 + 0.5 * t * (v1 - v0))
}

/// Evenly spread offsets for windows of length `window` inside `[lo, hi]`.
pub fn spread_offsets(lo: f64, hi: f64, window: f64, count: usize) -> Vec<f64> {
    let room = (hi - lo - window).max(0.0);
    if count <= 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + room * k as f64 / (count - 1) as f64).collect()
}

/// Evidence of almost periodicity: the translates that are ε-close in sup norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APReport {
    pub epsilon: f64,
    pub almost_periods: Vec<f64>,
    /// Largest gap between consecutive almost periods (`None` when fewer than two).
    pub max_gap: Option<f64>,
    pub search_range: (f64, f64),
    pub probe_range: (f64, f64),
    pub step: f64,
}

/// Scans translates `τ` on a `step` grid of `search_range` and keeps those with
/// `sup |f(x + τ) − f(x)| <= epsilon` over a `step` grid of `probe_range`.
pub fn ap_diagnostic<F>(
    f: F,
    epsilon: f64,
    search_range: (f64, f64),
    probe_range: (f64, f64),
    step: f64,
) -> Result<APReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(epsilon > 0.0) || !(step > 0.0) {
        return Err(Error::Argument(format!("epsilon ({epsilon}) and step ({step}) must be positive")));
    }
    let n_tau = ((search_range.1 - search_range.0) / step + 1e-9).floor() as usize + 1;
    let n_probe = ((probe_range.1 - probe_range.0) / step + 1e-9).floor() as usize + 1;
    let probe: Vec<f64> = (0..n_probe).map(|k| probe_range.0 + k as f64 * step).collect();
    let base: Vec<f64> = probe.iter().map(|&x| f(x)).collect();
    let taus: Vec<f64> = (0..n_tau).map(|k| search_range.0 + k as f64 * step).collect();
    let hits = par::map(&taus, |&tau| {
        probe
            .iter()
            .zip(&base)
            .all(|(&x, &fx)| (f(x + tau) - fx).abs() <= epsilon)
    });
    let almost_periods: Vec<f64> =
        taus.iter().zip(hits).filter_map(|(&t, hit)| hit.then_some(t)).collect();
    let max_gap = almost_periods
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))));
    Ok(APReport { epsilon, almost_periods, max_gap, search_range, probe_range, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        let f = CoefficientField::constant(1.0, 1.0).unwrap();
        assert_eq!(f.eval(3.7).unwrap(), Coeffs { a: 1.0, a_prime: 0.0, c: 1.0 });

        let q = CoefficientField::two_frequency(1.0, 1.0, 0.1).unwrap();
        let k = q.eval(0.0).unwrap();
        assert_eq!((k.a, k.a_prime), (1.0, 0.0));
        assert!((k.c - 1.2).abs() < 1e-15);

        let p = CoefficientField::periodic_sine(1.0, 1.0, 0.5, 1.0).unwrap();
        let k = p.eval(0.25).unwrap();
        assert!((k.c - 1.5).abs() < 1e-15);
        assert_eq!(k.a, 1.0);
    }

    #[test]
    fn tabulated_range_and_derivative() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 * 0.1).collect();
        let spec = FieldSpec::Tabulated {
            x0: 0.0,
            h: 0.1,
            a: xs.iter().map(|x| 2.0 + (x * 0.5).sin()).collect(),
            c: vec![1.0; 101],
        };
        let f = CoefficientField::new(spec).unwrap();
        let k = f.eval(5.05).unwrap();
        assert!((k.a_prime - 0.5 * (5.05_f64 * 0.5).cos()).abs() < 1e-3);
        assert!(matches!(f.eval(10.5), Err(Error::Range(_))));
        assert!(matches!(f.eval(-0.01), Err(Error::Range(_))));
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        assert!(CoefficientField::constant(0.0, 1.0).is_err());
        assert!(CoefficientField::periodic_sine(1.0, 0.4, 0.5, 1.0).is_err());
        let bad = FieldSpec::Periodic {
            period: 1.0,
            frequencies: vec![3.0],
            a: TrigPoly::constant(1.0),
            c: TrigPoly::constant(1.0),
        };
        assert!(CoefficientField::new(bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let q = CoefficientField::two_frequency(1.0, 1.0, 0.1).unwrap();
        let text = q.to_json().unwrap();
        assert_eq!(CoefficientField::from_json(&text).unwrap(), q);
        let doc = r#"{"kind":"constant","a":4.0,"c":1.0}"#;
        let f = CoefficientField::from_json(doc).unwrap();
        assert_eq!(f.kind(), FieldKind::Constant);
        assert!(CoefficientField::from_json(r#"{"kind":"constant","a":-1.0,"c":1.0}"#).is_err());
    }

    #[test]
    fn bohr_mean_examples() {
        let m = bohr_mean(f64::sin, 1000.0, &[0.0, 17.0, -53.0]).unwrap();
        assert!(m.value.abs() <= 2.0 / 1000.0);
        assert!(m.uncertainty <= 2.0 / 1000.0);

        let m = bohr_mean(|_| 3.0, 10.0, &[0.0, 5.0, 9.0]).unwrap();
        assert!((m.value - 3.0).abs() < 1e-14);
        assert!(m.uncertainty < 1e-14);

        assert!(bohr_mean(f64::sin, 10.0, &[]).is_err());
    }

    #[test]
    fn sampled_mean_is_exact_for_linear_data() {
        let g = Grid1D::new(0.0, 10.0, 101).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 2.0 * x + 1.0).collect();
        let m = bohr_mean_sampled(&g, &v, 4.0, &[0.05, 3.0, 6.0]).unwrap();
        // averages 2s + 5 at s = 0.05, 3, 6
        let expected = (5.1 + 11.0 + 17.0) / 3.0;
        assert!((m.value - expected).abs() < 1e-12);
        assert!(bohr_mean_sampled(&g, &v, 4.0, &[7.0]).is_err());
    }

    #[test]
    fn ap_scan_finds_exact_periods() {
        let r = ap_diagnostic(|x| (2.0 * PI * x).sin(), 1e-6, (0.0, 10.0), (0.0, 3.0), 0.01).unwrap();
        for k in 1..=10 {
            assert!(
                r.almost_periods.iter().any(|t| (t - k as f64).abs() < 0.006),
                "missing period {k}: {:?}",
                r.almost_periods
            );
        }
        let r = ap_diagnostic(|_| 5.0, 1e-12, (0.0, 1.0), (0.0, 1.0), 0.1).unwrap();
        assert_eq!(r.almost_periods.len(), 11);
    }
}
