use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use subcav_bench::{sheared, table1, warmed_state};
use subcav_core::contact::solve_contact_stokes;
use subcav_core::discretization::{assemble_divergence, assemble_jacobian_a};
use subcav_core::geometry::EdgePartition;
use subcav_core::rheology::GlenRheology;
use subcav_core::scenarios::step;

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for n_e in [16, 64] {
        let (mesh, spaces, u) = sheared(n_e);
        let rheo = GlenRheology::new(0.5, 3.0, 1e-10).unwrap();
        g.bench_with_input(BenchmarkId::new("jacobian_n3", n_e), &n_e, |b, _| {
            b.iter(|| assemble_jacobian_a(&mesh, &spaces, &rheo, &u).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("divergence", n_e), &n_e, |b, _| {
            b.iter(|| assemble_divergence(&mesh, &spaces))
        });
    }
    g.finish();
}

fn contact_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("contact_solve");
    g.sample_size(10);
    for n_e in [16, 64] {
        let cfg = table1(n_e);
        let (mesh, spaces, _) = sheared(n_e);
        let partition = EdgePartition::all_attached(n_e);
        g.bench_with_input(BenchmarkId::new("cold_n1", n_e), &n_e, |b, _| {
            b.iter(|| {
                solve_contact_stokes(
                    &mesh,
                    &spaces,
                    &partition,
                    &cfg.rheology,
                    cfg.bc,
                    cfg.effective_pressure,
                    &cfg.solver,
                    None,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

fn time_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("time_step");
    g.sample_size(10);
    for n_e in [16, 32] {
        let cfg = table1(n_e);
        let state = warmed_state(&cfg, 10);
        g.bench_with_input(BenchmarkId::new("warm", n_e), &n_e, |b, _| {
            b.iter_batched(
                || state.clone(),
                |mut s| step(&mut s, &cfg, cfg.effective_pressure).unwrap(),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, contact_solve, time_step);
criterion_main!(benches);
