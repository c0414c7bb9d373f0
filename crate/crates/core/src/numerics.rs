//! Small dependency-free numerical kernels shared by the solvers.

use crate::error::{Error, Result};

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i-1]` (so `lower[0]` is ignored) and `upper[i]`
/// multiplies `x[i+1]` (so `upper[n-1]` is ignored). No pivoting: callers
/// only pass diagonally dominant or definite matrices.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n || n == 0 {
        return Err(Error::Argument(format!(
            "tridiagonal dimensions disagree: {} {} {} {}",
            lower.len(),
            n,
            upper.len(),
            rhs.len()
        )));
    }
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Solver {
            message: "zero pivot in tridiagonal solve".into(),
            residuals: vec![],
        });
    }
    c_star[0] = upper[0] / pivot;
    d_star[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c_star[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Solver {
                message: format!("zero pivot in tridiagonal solve at row {i}"),
                residuals: vec![],
            });
        }
        c_star[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / pivot;
    }
    let mut x = d_star;
    for i in (0..n - 1).rev() {
        x[i] -= c_star[i] * x[i + 1];
    }
    Ok(x)
}

/// Cyclic tridiagonal solve (Sherman–Morrison): `lower[0]` couples `x[n-1]`
/// into row 0 and `upper[n-1]` couples `x[0]` into row `n-1`.
pub fn thomas_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::Argument(format!("cyclic system needs n >= 3, got {n}")));
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    let g = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= g;
    d[n - 1] -= alpha * beta / g;
    let x = thomas(lower, &d, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = g;
    u[n - 1] = alpha;
    let z = thomas(lower, &d, upper, &u)?;
    let factor = (x[0] + beta * x[n - 1] / g) / (1.0 + z[0] + beta * z[n - 1] / g);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence via LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { coupling / q };
            if q == 0.0 {
                q = -f64::EPSILON * (1.0 + x.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Largest eigenvalue by bisection on the Sturm count.
    pub fn largest_eigenvalue(&self) -> f64 {
        let n = self.len();
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
            if self.count_below(mid) == n {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for the top eigenvalue by shifted inverse iteration.
    ///
    /// The shift sits just above `lambda`, so `T - shift·I` is negative
    /// definite and the Thomas sweep needs no pivoting.
    pub fn top_eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(1.0);
        let shift = lambda + 1e-10 * scale;
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n.saturating_sub(1) {
            upper[i] = self.off[i];
            lower[i + 1] = self.off[i];
        }
        let mut v = vec![1.0; n];
        for _ in 0..8 {
            let w = thomas(&lower, &diag, &upper, &v)?;
            let norm = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let sign = if w.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            v = w.iter().map(|x| sign * x / norm).collect();
        }
        Ok(v)
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
///
/// Returns `(x_min, f(x_min), evaluations)`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while (b - a).abs() > x_tol && evals < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evals += 1;
    }
    Ok(if fc <= fd { (c, fc, evals) } else { (d, fd, evals) })
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Range(format!(
            "no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}"
        )));
    }
    for _ in 0..200 {
        if (b - a).abs() <= x_tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Composite trapezoid integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Geometric sequence of `n` points from `a` to `b` inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let r = (b / a).ln() / (n - 1) as f64;
    (0..n).map(|i| a * (r * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_poisson() {
        // -x'' = 2 on (0,1), x(0)=x(1)=0 -> x = t(1-t), exact for the 3-point stencil.
        let n = 9;
        let h = 1.0 / (n + 1) as f64;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.0; n];
        let rhs = vec![2.0 * h * h; n];
        let x = thomas(&lower, &diag, &upper, &rhs).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let t = (i + 1) as f64 * h;
            assert!((xi - t * (1.0 - t)).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_matches_dense_product() {
        let n = 7;
        let lower: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| 0.5 + 0.05 * i as f64).collect();
        let diag = vec![-4.0; n];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = thomas_cyclic(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            let r = lower[i] * x[(i + n - 1) % n] + diag[i] * x[i] + upper[i] * x[(i + 1) % n];
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_top_eigenvalue_of_laplacian() {
        let n = 50;
        let t = SymTridiag { diag: vec![-2.0; n], off: vec![1.0; n - 1] };
        let exact = -2.0 + 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((t.largest_eigenvalue() - exact).abs() < 1e-13);
        let v = t.top_eigenvector(exact).unwrap();
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn golden_and_bisect() {
        let (x, _, _) = golden_section(|x| Ok((x - 1.3) * (x - 1.3)), 0.0, 3.0, 1e-9).unwrap();
        assert!((x - 1.3).abs() < 1e-8);
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-12).is_err());
    }
}
