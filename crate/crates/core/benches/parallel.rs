//! Sequential vs parallel execution of the three fan-out loops: the t sweep,
//! per-leaf solves, and Newton seeds.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use witten_core::complex::{build_circle, build_complex, build_flat_torus};
use witten_core::eigen::EigenOptions;
use witten_core::foliation::{build_kronecker, connes_fack_check};
use witten_core::morse::{find_critical_points_with, FieldKind};
use witten_core::witten::{geometric_schedule, spectral_flow};
use witten_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn t_sweep(c: &mut Criterion) {
    let complex = build_complex(&build_circle(2048, 1.0).unwrap()).unwrap();
    let field = FieldKind::CosTheta.bind(complex.model()).unwrap();
    let schedule = geometric_schedule(1.0, 0.05, 8).unwrap();
    let opts = EigenOptions::default();
    let mut group = c.benchmark_group("t_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                spectral_flow(
                    &complex,
                    &field,
                    black_box(&schedule),
                    &[0, 1],
                    5,
                    &opts,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn leaf_solves(c: &mut Criterion) {
    let model = build_kronecker(1, 1, 128, 16).unwrap();
    let opts = EigenOptions::default();
    let mut group = c.benchmark_group("leaf_solves");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                connes_fack_check(&model, &FieldKind::CosTheta, black_box(0.1), &opts, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn newton_seeds(c: &mut Criterion) {
    let mesh = build_flat_torus(96, 96, 2.0 * PI, 2.0 * PI).unwrap();
    let mut group = c.benchmark_group("newton_seeds");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                find_critical_points_with(&FieldKind::Cos2PlusCos, black_box(&mesh), exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, t_sweep, leaf_solves, newton_seeds);
criterion_main!(benches);
