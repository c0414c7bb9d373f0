#![allow(dead_code)]

use apfront::CoefficientField;

pub fn constant(a: f64, c: f64) -> CoefficientField {
    CoefficientField::constant(a, c).unwrap()
}

/// `a = 1`, `c = 1 + 0.5 sin(2πx)`.
pub fn periodic() -> CoefficientField {
    CoefficientField::periodic_sine(1.0, 1.0, 0.5, 1.0).unwrap()
}

/// `a = 1`, `c = 1 + 0.1 (cos x + cos √2 x)`.
pub fn quasiperiodic() -> CoefficientField {
    CoefficientField::two_frequency(1.0, 1.0, 0.1).unwrap()
}

pub fn periodic_c(x: f64) -> f64 {
    1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin()
}

/// Fundamental matrix over one period of `φ'' = q(x) φ` (RK4, `steps` steps).
pub fn monodromy(q: impl Fn(f64) -> f64, period: f64, steps: usize) -> [[f64; 2]; 2] {
    let h = period / steps as f64;
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for col in cols.iter_mut() {
        let (mut y, mut v) = (col[0], col[1]);
        for k in 0..steps {
            let x = k as f64 * h;
            let f = |x: f64, y: f64, v: f64| (v, q(x) * y);
            let (k1y, k1v) = f(x, y, v);
            let (k2y, k2v) = f(x + h / 2.0, y + h / 2.0 * k1y, v + h / 2.0 * k1v);
            let (k3y, k3v) = f(x + h / 2.0, y + h / 2.0 * k2y, v + h / 2.0 * k2v);
            let (k4y, k4v) = f(x + h, y + h * k3y, v + h * k3v);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        *col = [y, v];
    }
    // cols[j] = image of the j-th unit vector.
    [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]
}

fn trace(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] + m[1][1]
}

/// Floquet decay exponent of `φ'' = (γ − c) φ` for the periodic test field.
pub fn floquet_mu(gamma: f64) -> f64 {
    let m = monodromy(|x| gamma - periodic_c(x), 1.0, 4000);
    let t = trace(&m);
    // det = 1; the larger multiplier is e^{μ L}.
    let rho = 0.5 * (t + (t * t - 4.0).sqrt());
    rho.ln()
}

/// Periodic principal eigenvalue: the largest `λ` with trace(M(λ)) = 2.
pub fn floquet_lambda1() -> f64 {
    let f = |lam: f64| trace(&monodromy(|x| lam - periodic_c(x), 1.0, 4000)) - 2.0;
    let (mut lo, mut hi) = (0.5, 1.5);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `k_p` for the periodic field: `λ` with trace(M(λ)) = 2 cosh p.
pub fn floquet_kp(p: f64) -> f64 {
    let target = 2.0 * p.cosh();
    let f = |lam: f64| trace(&monodromy(|x| lam - periodic_c(x), 1.0, 2000)) - target;
    let (mut lo, mut hi) = (0.5, 1.6 + p * p);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `min_p k_p/p` from the Floquet route (golden section).
pub fn floquet_w_star() -> f64 {
    let g = |p: f64| floquet_kp(p) / p;
    let (mut a, mut b) = (0.3, 3.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g(0.5 * (a + b))
}

/// `sup φ / inf φ` of the periodic principal eigenfunction.
pub fn floquet_eigenfunction_ratio() -> f64 {
    let lam = floquet_lambda1();
    let m = monodromy(|x| lam - periodic_c(x), 1.0, 4000);
    // Eigenvector of M for multiplier 1: (M − I) v = 0.
    let v = if m[0][1].abs() > 1e-14 { [m[0][1], 1.0 - m[0][0]] } else { [1.0 - m[1][1], m[1][0]] };
    let steps = 4000;
    let h = 1.0 / steps as f64;
    let (mut y, mut dy) = (v[0], v[1]);
    let (mut lo, mut hi) = (y.abs(), y.abs());
    for k in 0..steps {
        let x = k as f64 * h;
        let q = |x: f64| lam - periodic_c(x);
        let f = |x: f64, y: f64, v: f64| (v, q(x) * y);
        let (k1y, k1v) = f(x, y, dy);
        let (k2y, k2v) = f(x + h / 2.0, y + h / 2.0 * k1y, dy + h / 2.0 * k1v);
        let (k3y, k3v) = f(x + h / 2.0, y + h / 2.0 * k2y, dy + h / 2.0 * k2v);
        let (k4y, k4v) = f(x + h, y + h * k3y, dy + h * k3v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        lo = lo.min(y.abs());
        hi = hi.max(y.abs());
    }
    hi / lo
}

/// Exact average of `cos x + cos √2 x` over `[s, s + t]`.
pub fn two_cos_window_average(s: f64, t: f64) -> f64 {
    let r2 = 2f64.sqrt();
    let anti = |x: f64| x.sin() + (r2 * x).sin() / r2;
    (anti(s + t) - anti(s)) / t
}
