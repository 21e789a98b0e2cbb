use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use offload_core::sim::build_grid_mobility;
use offload_core::{solve, solve_monotone, LocationId, MonotoneModel, PenaltyFn, ProblemSpec};

fn grid_instance(steps: usize, horizon: usize) -> (MonotoneModel, ProblemSpec) {
    let wifi: Vec<LocationId> = [4, 11, 13, 16].into_iter().map(LocationId::new).collect();
    let mm = MonotoneModel::new(build_grid_mobility(4, 4, 0.6).unwrap(), &wifi, 1.0, 15.0, 5.0).unwrap();
    let spec = ProblemSpec::on_grid(
        steps,
        horizon,
        1.0,
        PenaltyFn::Quadratic { b: 0.01 },
        LocationId::new(1),
    )
    .unwrap();
    (mm, spec)
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_l16_t60");
    group.sample_size(20);
    for steps in [150, 300, 600] {
        let (mm, spec) = grid_instance(steps, 60);
        group.bench_with_input(BenchmarkId::new("general", steps), &steps, |b, _| {
            b.iter(|| solve(mm.network(), &spec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("monotone", steps), &steps, |b, _| {
            b.iter(|| solve_monotone(&mm, &spec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
