use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use pinnduct::autodiff::Objective;
use pinnduct::media::{air_ntp, j2_over_j0, visco_thermal, PhiConvention};
use pinnduct::oracle::webster_bvp;
use pinnduct::physics::AreaProfile;
use pinnduct::trainer::{lbfgs_minimize, TrainingConfig};
use pinnduct::trial::{BoundaryConditions, DuctGeometry};
use pinnduct_bench::{pressure_objective, uniform};

fn loss_and_gradient(c: &mut Criterion) {
    let problem = uniform(500.0);
    let mut group = c.benchmark_group("loss_and_gradient");
    group.sample_size(10);
    for (label, config, n) in [
        ("2x16", TrainingConfig { hidden_layers: 2, width: 16, ..TrainingConfig::desk() }, 256),
        ("5x64", TrainingConfig::desk(), 2000),
    ] {
        let (objective, params) = pressure_objective(&problem, &config, n);
        group.bench_function(BenchmarkId::new(label, n), |b| {
            b.iter(|| objective.evaluate(black_box(&params)).unwrap())
        });
    }
    group.finish();
}

fn lbfgs(c: &mut Criterion) {
    let problem = uniform(250.0);
    let config = TrainingConfig {
        hidden_layers: 2,
        width: 16,
        iterations: 50,
        tolerance: 0.0,
        ..TrainingConfig::desk()
    };
    let (objective, params) = pressure_objective(&problem, &config, 256);
    let mut group = c.benchmark_group("lbfgs");
    group.sample_size(10);
    group.bench_function("50_iterations_2x16", |b| {
        b.iter(|| lbfgs_minimize(&objective, black_box(&params), &config.lbfgs()).unwrap())
    });
    group.finish();
}

fn bessel(c: &mut Criterion) {
    let mut group = c.benchmark_group("bessel");
    for r in [1.0, 20.0, 200.0] {
        let z = Complex64::from_polar(r, -std::f64::consts::FRAC_PI_4);
        group.bench_function(BenchmarkId::new("j2_over_j0", r), |b| b.iter(|| j2_over_j0(black_box(z)).unwrap()));
    }
    let air = air_ntp();
    group.bench_function("visco_thermal_0.5mm", |b| {
        b.iter(|| visco_thermal(&air, black_box(500.0), 0.5e-3, PhiConvention::Standard).unwrap())
    });
    group.finish();
}

fn webster(c: &mut Criterion) {
    let g = DuctGeometry::new(0.0, 1.0).unwrap();
    let bc = BoundaryConditions::real(1.0, -1.0);
    let area = AreaProfile::from_dimensions(0.01, 0.02, 0.03, 0.06, &g).unwrap();
    let air = air_ntp();
    let k = air.wavenumber(500.0);
    c.bench_function("webster_bvp_4096", |b| {
        b.iter(|| webster_bvp(&g, &bc, &area, black_box(k), 4096, &air).unwrap())
    });
}

criterion_group!(benches, loss_and_gradient, lbfgs, bessel, webster);
criterion_main!(benches);
