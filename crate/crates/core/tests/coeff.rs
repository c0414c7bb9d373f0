mod common;

use apfront::coeff::{self, FieldSpec, TrigPoly};
use apfront::{CoefficientField, Error, Grid1D};
use common::*;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn point_values() {
    let k = constant(1.0, 1.0).eval(3.7).unwrap();
    assert_eq!((k.a, k.a_prime, k.c), (1.0, 0.0, 1.0));
    let k = quasiperiodic().eval(0.0).unwrap();
    assert_eq!((k.a, k.a_prime), (1.0, 0.0));
    assert!((k.c - 1.2).abs() < 1e-14);
    let k = periodic().eval(0.25).unwrap();
    assert_eq!((k.a, k.a_prime), (1.0, 0.0));
    assert!((k.c - 1.5).abs() < 1e-14);
}

#[test]
fn tabulated_out_of_range_is_a_range_error() {
    let spec = FieldSpec::Tabulated { x0: 0.0, h: 0.5, a: vec![1.0; 5], c: vec![2.0; 5] };
    let f = CoefficientField::new(spec).unwrap();
    assert!(matches!(f.eval(2.5), Err(Error::Range(_))));
    assert!(matches!(f.eval(-0.1), Err(Error::Range(_))));
    assert_eq!(f.c(1.25).unwrap(), 2.0);
}

#[test]
fn nonpositive_coefficients_rejected() {
    assert!(CoefficientField::constant(0.0, 1.0).is_err());
    assert!(CoefficientField::constant(1.0, -1.0).is_err());
    // 1 − 1.5 cos x dips below zero.
    let spec = FieldSpec::Quasiperiodic {
        frequencies: vec![1.0],
        a: TrigPoly::constant(1.0),
        c: TrigPoly { mean: 1.0, cos: vec![-1.5], sin: vec![] },
    };
    assert!(CoefficientField::new(spec).is_err());
}

#[test]
fn positivity_on_probe_grid() {
    for f in [constant(2.0, 0.5), periodic(), quasiperiodic()] {
        let b = f.bounds();
        assert!(b.a_min > 0.0 && b.c_min > 0.0);
        assert!(b.a_min <= b.a_max && b.c_min <= b.c_max);
    }
    let b = periodic().bounds();
    assert!((b.c_min - 0.5).abs() < 1e-6 && (b.c_max - 1.5).abs() < 1e-6);
}

#[test]
fn analytic_derivative_matches_differences() {
    let spec = FieldSpec::Quasiperiodic {
        frequencies: vec![1.0, 2f64.sqrt()],
        a: TrigPoly { mean: 2.0, cos: vec![0.3, -0.2], sin: vec![0.1, 0.4] },
        c: TrigPoly::constant(1.0),
    };
    let f = CoefficientField::new(spec).unwrap();
    let h = 1e-5;
    for x in [-7.3, 0.0, 0.4, 11.9] {
        let fd = (f.a(x + h).unwrap() - f.a(x - h).unwrap()) / (2.0 * h);
        assert!((f.eval(x).unwrap().a_prime - fd).abs() < 1e-8);
    }
}

#[test]
fn json_round_trip_and_periodicity() {
    for f in [constant(1.0, 1.0), periodic(), quasiperiodic()] {
        let back = CoefficientField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
    }
    let f = periodic();
    assert_eq!(f.period(), Some(1.0));
    for x in [0.1, 0.37, 5.5] {
        assert!((f.c(x).unwrap() - f.c(x + 3.0).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn bohr_mean_of_sine() {
    let m = coeff::bohr_mean(f64::sin, 1000.0, &[0.0, 17.0, -53.0]).unwrap();
    assert!(m.value.abs() <= 2e-3);
    assert!(m.uncertainty <= 2e-3);
}

#[test]
fn bohr_mean_of_constant() {
    let m = coeff::bohr_mean(|_| 3.0, 50.0, &[0.0, 10.0, 20.0]).unwrap();
    assert!((m.value - 3.0).abs() < 1e-13);
    assert!(m.uncertainty < 1e-13);
}

#[test]
fn bohr_mean_two_frequencies_against_exact_averages() {
    let offsets = [0.0, 1234.5, -777.0];
    let f = |x: f64| x.cos() + (2f64.sqrt() * x).cos();
    let m = coeff::bohr_mean(f, 1e4, &offsets).unwrap();
    let exact: f64 = offsets.iter().map(|&s| two_cos_window_average(s, 1e4)).sum::<f64>() / 3.0;
    assert!((m.value - exact).abs() < 1e-9);
    assert!(m.value.abs() < 4e-4);
}

#[test]
fn bohr_mean_of_derivative_telescopes() {
    for window in [50.0, 400.0] {
        let m = coeff::bohr_mean(f64::cos, window, &[0.0, 3.3, 91.0]).unwrap();
        assert!(m.value.abs() <= 2.0 / window);
    }
}

#[test]
fn bohr_mean_rejects_empty_offsets() {
    assert!(matches!(coeff::bohr_mean(f64::sin, 10.0, &[]), Err(Error::Argument(_))));
}

#[test]
fn sampled_mean_matches_functional_mean() {
    let grid = Grid1D::new(0.0, 300.0, 30_001).unwrap();
    let vals: Vec<f64> = grid.points().iter().map(|&x| 2.0 + (2.0 * PI * x).sin()).collect();
    let m = coeff::bohr_mean_sampled(&grid, &vals, 100.0, &[0.0, 100.0, 200.0]).unwrap();
    assert!((m.value - 2.0).abs() < 1e-8);
}

#[test]
fn ap_scan_of_periodic_sine() {
    let r = coeff::ap_diagnostic(|x| (2.0 * PI * x).sin(), 1e-6, (0.0, 10.0), (0.0, 5.0), 0.01).unwrap();
    for k in 1..=10 {
        assert!(r.almost_periods.iter().any(|t| (t - k as f64).abs() < 1e-6), "missing period {k}");
    }
}

#[test]
fn ap_scan_every_multiple_for_other_periods() {
    let l = 2.5;
    let r = coeff::ap_diagnostic(|x| (2.0 * PI * x / l).cos(), 1e-6, (0.0, 12.5), (0.0, 5.0), 0.05).unwrap();
    let found: Vec<f64> = r.almost_periods.iter().cloned().filter(|t| *t > 0.1).collect();
    for k in 1..=5 {
        assert!(found.iter().any(|t| (t - k as f64 * l).abs() < 1e-6));
    }
    assert!(found.iter().all(|t| ((t / l).round() * l - t).abs() < 1e-6));
}

#[test]
fn ap_scan_constant_accepts_everything() {
    let r = coeff::ap_diagnostic(|_| 5.0, 1e-9, (0.0, 10.0), (0.0, 3.0), 0.5).unwrap();
    assert_eq!(r.almost_periods.len(), 21);
}

#[test]
fn ap_scan_quasiperiodic_is_relatively_dense() {
    let f = |x: f64| x.cos() + (2f64.sqrt() * x).cos();
    let r = coeff::ap_diagnostic(f, 0.05, (0.0, 500.0), (0.0, 50.0), 0.01).unwrap();
    // τ = 0 is trivially in the set; look for genuine translates.
    let real: Vec<f64> = r.almost_periods.iter().cloned().filter(|t| *t > 1.0).collect();
    assert!(!real.is_empty());
    assert!(r.max_gap.unwrap() < 500.0);
    for t in real.iter().take(5) {
        let worst = (0..5000).map(|k| k as f64 * 0.01).map(|x| (f(x + t) - f(x)).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.05 + 1e-12);
    }
}

proptest! {
    #[test]
    fn bohr_mean_is_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64, s in -100.0..100.0f64) {
        let f = |x: f64| 1.0 + x.sin();
        let g = |x: f64| (2f64.sqrt() * x).cos() - 0.5;
        let offs = [s, s + 300.0, s - 500.0];
        let mf = coeff::bohr_mean(f, 200.0, &offs).unwrap();
        let mg = coeff::bohr_mean(g, 200.0, &offs).unwrap();
        let mh = coeff::bohr_mean(|x| alpha * f(x) + beta * g(x), 200.0, &offs).unwrap();
        let lin = alpha * mf.value + beta * mg.value;
        prop_assert!((mh.value - lin).abs() <= alpha.abs() * mf.uncertainty + beta.abs() * mg.uncertainty + 1e-10);
    }

    #[test]
    fn interpolation_is_exact_on_affine_data(lo in -50.0..50.0f64, len in 1.0..40.0f64, n in 3usize..200, t in 0.0..1.0f64) {
        let g = Grid1D::new(lo, lo + len, n).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|x| 3.0 * x - 1.0).collect();
        let x = lo + t * len;
        prop_assert!((coeff::interpolate(&g, &vals, x) - (3.0 * x - 1.0)).abs() < 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn grid_nodes_are_uniform(lo in -50.0..50.0f64, len in 1.0..40.0f64, h in 0.01..0.5f64) {
        let g = Grid1D::with_spacing(lo, lo + len, h).unwrap();
        prop_assert!(g.x_hi >= lo + len - 1e-9);
        prop_assert!((g.h() - h).abs() < 1e-9);
        prop_assert_eq!(g.nearest(g.x(g.n / 2)), g.n / 2);
    }
}
