//! Microbenchmarks for the hot kernels: spatial tendencies for both
//! formulations, the stable-step estimate, one full time step per
//! integrator, and the per-step diagnostic updates. All run on a smooth
//! 4096-cell state so the numbers reflect per-cell cost on a realistic
//! production grid.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use nsk1d_bench::{bump_state, law, N_CELLS};
use nsk1d_core::diagnostics::{bd_entropy_report, energy_breakdown, DiagEngine, DiagOptions};
use nsk1d_core::laws::CapillarityRoots;
use nsk1d_core::solver::{
    rhs_effective, rhs_primitive, stable_dt, step, Formulation, SolverConfig, TimeScheme,
};

fn bench_rhs(cr: &mut Criterion) {
    let law = law();
    let (state, grid) = bump_state(0.04);
    let roots = CapillarityRoots::new(0.04).unwrap();

    let mut group = cr.benchmark_group("rhs");
    group.throughput(Throughput::Elements(N_CELLS as u64));
    group.bench_function("primitive_viscous", |b| {
        b.iter(|| rhs_primitive(black_box(&state), &grid, &law, 0.0))
    });
    group.bench_function("primitive_capillary", |b| {
        b.iter(|| rhs_primitive(black_box(&state), &grid, &law, 0.04))
    });
    group.bench_function("effective_capillary", |b| {
        b.iter(|| rhs_effective(black_box(&state), &grid, &law, &roots))
    });
    group.finish();
}

fn bench_step(cr: &mut Criterion) {
    let law = law();
    let (state, grid) = bump_state(0.04);

    let mut group = cr.benchmark_group("step");
    group.throughput(Throughput::Elements(N_CELLS as u64));
    group.bench_function("stable_dt", |b| {
        b.iter(|| stable_dt(black_box(&state), &grid, &law, 0.04, 0.25))
    });

    let cases = [
        (
            "rk2_primitive_viscous",
            Formulation::Primitive,
            TimeScheme::ExplicitRk2,
            0.0,
        ),
        (
            "rk2_effective_capillary",
            Formulation::EffectiveV1,
            TimeScheme::ExplicitRk2,
            0.04,
        ),
        (
            "imex_effective_capillary",
            Formulation::EffectiveV1,
            TimeScheme::ImexBe,
            0.04,
        ),
    ];
    for (name, formulation, time_scheme, c) in cases {
        let config = SolverConfig {
            formulation,
            time_scheme,
            ..SolverConfig::defaults(1.0)
        };
        let dt = stable_dt(&state, &grid, &law, c, config.cfl);
        group.bench_function(name, |b| {
            b.iter(|| step(black_box(&state), &grid, &law, c, dt, &config).unwrap())
        });
    }
    group.finish();
}

fn bench_diagnostics(cr: &mut Criterion) {
    let law = law();
    let c = 0.04;
    let (state, grid) = bump_state(c);
    let opts = DiagOptions::default();
    let (mut engine, _) = DiagEngine::new(&state, &grid, &law, c, &opts, 0.0, 8.5).unwrap();
    let dt = stable_dt(&state, &grid, &law, c, 0.25);

    let mut group = cr.benchmark_group("diagnostics");
    group.throughput(Throughput::Elements(N_CELLS as u64));
    group.bench_function("energy_breakdown", |b| {
        b.iter(|| energy_breakdown(black_box(&state), &grid, &law, c))
    });
    group.bench_function("bd_entropy_report", |b| {
        b.iter(|| bd_entropy_report(black_box(&state), &grid, &law, c))
    });
    group.bench_function("accumulate", |b| {
        b.iter(|| engine.accumulate(black_box(&state), &grid, dt))
    });
    group.bench_function("report_no_windows", |b| {
        b.iter(|| engine.report(black_box(&state), &grid, false).unwrap())
    });
    group.finish();
}

criterion_group!(kernels, bench_rhs, bench_step, bench_diagnostics);
criterion_main!(kernels);
