use std::hint::black_box;
use std::time::Duration;

use apfront::coeff::{self, CoefficientField};
use apfront::decay::{self, DecayOptions, Lambda1Ref};
use apfront::eigen::{self, KpConfig};
use apfront::{numerics, par};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn field() -> CoefficientField {
    CoefficientField::periodic_sine(1.0, 1.0, 0.5, 1.0).expect("valid field")
}

fn mu_sweep(c: &mut Criterion) {
    let f = field();
    let lam = Lambda1Ref { value: 1.0031927, tol: 1e-5 };
    let gammas = numerics::geomspace(1.05, 20.0, 16);
    let opts = DecayOptions::default();
    let mut g = c.benchmark_group("mu_curve");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    g.bench_function(BenchmarkId::new("parallel", gammas.len()), |b| {
        b.iter(|| decay::mu_curve(&f, black_box(&gammas), lam, &opts).expect("mu curve"))
    });
    g.bench_function(BenchmarkId::new("sequential", gammas.len()), |b| {
        b.iter(|| par::sequential(|| decay::mu_curve(&f, black_box(&gammas), lam, &opts).expect("mu curve")))
    });
    g.finish();
}

fn kp_sweep(c: &mut Criterion) {
    let f = field();
    let ps = numerics::geomspace(0.2, 3.0, 12);
    let cfg = KpConfig { max_doublings: 0, ..KpConfig::default() };
    let mut g = c.benchmark_group("kp_curve");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    g.bench_function(BenchmarkId::new("parallel", ps.len()), |b| {
        b.iter(|| eigen::kp_curve(&f, black_box(&ps), 1.0, &cfg).expect("kp curve"))
    });
    g.bench_function(BenchmarkId::new("sequential", ps.len()), |b| {
        b.iter(|| par::sequential(|| eigen::kp_curve(&f, black_box(&ps), 1.0, &cfg).expect("kp curve")))
    });
    g.finish();
}

fn ap_scan(c: &mut Criterion) {
    let f = |x: f64| x.cos() + (std::f64::consts::SQRT_2 * x).cos();
    let mut g = c.benchmark_group("ap_scan");
    g.sample_size(10);
    let run = || coeff::ap_diagnostic(f, 0.1, (0.0, 500.0), (0.0, 100.0), 0.05).expect("ap scan");
    g.bench_function("parallel", |b| b.iter(|| black_box(run())));
    g.bench_function("sequential", |b| b.iter(|| par::sequential(|| black_box(run()))));
    g.finish();
}

criterion_group!(benches, mu_sweep, kp_sweep, ap_scan);
criterion_main!(benches);
