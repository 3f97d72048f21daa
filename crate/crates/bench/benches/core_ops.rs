//! Throughput benchmarks for the hot paths: gasket construction, harmonic
//! solves (dense and conjugate-gradient regimes), the simulation event loop,
//! solver steps and rate evaluation.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};

use hydro_core::calculus::{corner_values, solve_harmonic};
use hydro_core::graph::build_sg;
use hydro_core::pde::{self, PdeConfig, PdeSolver};
use hydro_core::rate::{rate_symmetric, RateOptions};
use hydro_core::rng::stream;
use hydro_core::tilt::{FieldSpec, TimeShape};
use hydro_core::trajectory::Trajectory;
use hydro_core::wasep::{BoundaryRates, Configuration, SimState, Simulator};

fn bench_build(c: &mut Criterion) {
    c.bench_function("build_sg_level5", |b| {
        b.iter(|| build_sg(5).unwrap());
    });
}

fn bench_harmonic(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_harmonic");
    for level in [4u32, 6] {
        // level 4 runs the dense path, level 6 (1095 vertices) the CG path
        let g = build_sg(level).unwrap();
        group.bench_function(format!("level{level}"), |b| {
            let bv = corner_values(&g, [0.8, 0.2, 0.5]).unwrap();
            b.iter(|| solve_harmonic(&g, &bv).unwrap());
        });
    }
    group.finish();
}

fn bench_simulation_events(c: &mut Criterion) {
    let g = build_sg(3).unwrap();
    let field = FieldSpec::harmonic(&g, [0.6, -0.3, 0.0], TimeShape::Sine, 1e9).unwrap();
    let rates = BoundaryRates::from_rho_bar(&g, &[0.8, 0.2, 0.5], 1.0).unwrap();
    let sim = Simulator::new(&g, &rates, &field, g.time_acceleration()).unwrap();
    let events = 10_000u64;

    let mut group = c.benchmark_group("simulator");
    group.throughput(Throughput::Elements(events));
    group.bench_function("events_level3", |b| {
        b.iter_batched(
            || {
                let mut rng = stream(1, "bench", 0);
                let rho = hydro_core::VertexFunction::constant(g.vertex_count(), 0.5);
                let eta0 = Configuration::sample_profile(&rho, &mut rng);
                SimState::new(&g, eta0, rng).unwrap()
            },
            |mut st| {
                for _ in 0..events {
                    sim.step(&mut st).unwrap();
                }
                st
            },
            BatchSize::SmallInput,
        );
    });
    group.finish();
}

fn bench_pde_step(c: &mut Criterion) {
    let g = build_sg(4).unwrap();
    let bv = corner_values(&g, [0.8, 0.2, 0.5]).unwrap();
    let field = FieldSpec::harmonic(&g, [0.8, -0.4, 0.0], TimeShape::Const, 1.0).unwrap();
    let cfg = PdeConfig { dt: 1e-3, t_end: 1.0, ..Default::default() };
    let solver = PdeSolver::new(&g, cfg, &bv).unwrap();
    let rho0 = solve_harmonic(&g, &bv).unwrap();

    c.bench_function("pde_step_level4", |b| {
        b.iter_batched(
            || solver.initial_state(rho0.clone()).unwrap(),
            |mut st| {
                for _ in 0..10 {
                    solver.step(&mut st, &field, 1e-3).unwrap();
                }
                st
            },
            BatchSize::SmallInput,
        );
    });
}

fn bench_rate(c: &mut Criterion) {
    let g = build_sg(2).unwrap();
    let bv = corner_values(&g, [0.6, 0.4, 0.5]).unwrap();
    let field = FieldSpec::harmonic(&g, [0.8, -0.4, 0.0], TimeShape::Const, 0.2).unwrap();
    let rho0 = solve_harmonic(&g, &bv).unwrap();
    let cfg = PdeConfig { dt: 1e-3, t_end: 0.2, ..Default::default() };
    let ptraj = pde::solve(&g, cfg, &field, rho0, &bv).unwrap();
    let traj = Trajectory::from_pde(&g, &ptraj).unwrap();

    c.bench_function("rate_symmetric_level2", |b| {
        b.iter(|| rate_symmetric(&g, &traj, &RateOptions::default()).unwrap());
    });
}

criterion_group!(
    benches,
    bench_build,
    bench_harmonic,
    bench_simulation_events,
    bench_pde_step,
    bench_rate
);
criterion_main!(benches);
