use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use flowforge::exec;
use flowforge::fem::{FlowSolver, FluidProps, InflowSpec, Model};
use flowforge::functionals::{functional_derivatives, FunctionalConfig, FunctionalContext};
use flowforge::geometry::{build_parallel_flow_field, FlowFieldParams};

fn paths(c: &mut Criterion) {
    let mesh = build_parallel_flow_field(&FlowFieldParams::default(), 0.25e-3).unwrap();
    let solver = FlowSolver::new(&mesh, FluidProps::default(), InflowSpec::default(), Model::Planar).unwrap();
    let state = solver.solve(&mesh, None).unwrap();
    let cfg = FunctionalConfig::default();

    let mut g = c.benchmark_group("assembly");
    g.sample_size(20);
    for (name, sequential) in [("parallel", false), ("sequential", true)] {
        exec::set_sequential(sequential);
        g.bench_function(BenchmarkId::new("jacobian", name), |b| {
            b.iter(|| solver.jacobian(&mesh, &state.x).unwrap())
        });
        g.bench_function(BenchmarkId::new("functional_derivatives", name), |b| {
            let ctx = FunctionalContext::new(&mesh, &solver.disc.space, &cfg, &solver.props, &solver.inflow).unwrap();
            b.iter(|| functional_derivatives(&ctx, &state.x, [1.0, 1.0, 1.0]).unwrap())
        });
    }
    exec::set_sequential(false);
    g.finish();
}

criterion_group!(benches, paths);
criterion_main!(benches);
