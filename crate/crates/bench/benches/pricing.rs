use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use multicurve_core::pricing::{caplet_price, decompose, nu_bar, NuBarMethod};
use multicurve_core::{
    AffineModel, CapletContract, Curve, FactorSpec, ModelParams, QuadratureConfig,
};

fn model() -> AffineModel {
    AffineModel::new(ModelParams {
        factor1: FactorSpec::gaussian(0.006, 0.3, 0.01, 0.004),
        factor2: FactorSpec::square_root(0.02, 0.5, 0.1, 0.03),
        factor3: FactorSpec::square_root(0.005, 0.8, 0.05, 0.004),
        kappa: 0.5,
    })
    .unwrap()
}

fn riccati(c: &mut Criterion) {
    let m = model();
    let mut group = c.benchmark_group("bond_coeffs");
    for horizon in [1.0, 10.0] {
        group.bench_with_input(BenchmarkId::from_parameter(horizon), &horizon, |b, &h| {
            b.iter(|| m.bond_coeffs(Curve::Risky, 0.0, black_box(h)).unwrap())
        });
    }
    group.finish();
}

fn fra(c: &mut Criterion) {
    let m = model();
    let s = m.params().initial_state();
    c.bench_function("decompose", |b| {
        b.iter(|| decompose(&m, &s, black_box(2.0), 0.5).unwrap())
    });
    c.bench_function("nu_bar_direct", |b| {
        b.iter(|| nu_bar(&m, &s, black_box(2.0), 0.5, NuBarMethod::Direct).unwrap())
    });
}

fn caplet(c: &mut Criterion) {
    let m = model();
    let s = m.params().initial_state();
    let quad = QuadratureConfig::default();
    let mut group = c.benchmark_group("caplet");
    for strike in [0.02, 0.04, 0.06] {
        let contract = CapletContract::new(1.0, 0.5, strike).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(strike), &contract, |b, k| {
            b.iter(|| caplet_price(&m, k, &s, &quad).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, riccati, fra, caplet);
criterion_main!(benches);
