use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mwconv::doppler::{averaged_polarization, VelocityQuadrature};
use mwconv::model::sodium_d1;
use mwconv::scan::{figure_preset, linspace, run_sweep, SweepSpec};
use mwconv::{DriveFields, Execution};

const MODES: [(&str, Execution); 2] = [
    ("serial", Execution::Serial),
    ("parallel", Execution::Parallel),
];

fn doppler_average(c: &mut Criterion) {
    let medium = sodium_d1();
    let fields = DriveFields::resonant(1.6, 1.2, 0.02, 0.4);
    let mut group = c.benchmark_group("doppler_average");
    for nodes in [64, 128] {
        let quad = VelocityQuadrature::gauss_hermite(nodes, medium.vp).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, nodes), &quad, |b, q| {
                b.iter(|| averaged_polarization(&medium, black_box(&fields), q, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn small_sweep(c: &mut Criterion) {
    let preset = figure_preset("fig4").unwrap();
    let mut spec: SweepSpec = preset.sweep_spec().unwrap();
    spec.values = linspace(-100.0, 100.0, 8);
    spec.base.zeta_end = 100.0;
    let mut group = c.benchmark_group("optical_detuning_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| run_sweep(black_box(&spec), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, doppler_average, small_sweep);
criterion_main!(benches);
