use criterion::{criterion_group, criterion_main, Criterion};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdc_bench::{catalogue, config, program_mesh};
use sdc_core::anneal::Landscape;
use sdc_core::pipeline::path_spec;
use sdc_core::planner::Planner;

fn planner(c: &mut Criterion) {
    let mesh = program_mesh();
    let planner = Planner::new(&mesh, path_spec(&mesh, &catalogue(), &config("high_thrust")).unwrap()).unwrap();
    let state = planner.greedy_init();
    let cost = planner.cost(&state);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("planner/propose", |b| {
        b.iter(|| planner.propose(&state, cost, &mut rng).1)
    });
    c.bench_function("planner/evaluate", |b| b.iter(|| planner.evaluate(&state).0));
    let mut group = c.benchmark_group("planner");
    group.sample_size(10);
    group.bench_function("local_search", |b| b.iter(|| planner.local_search(&state)));
    group.finish();
}

criterion_group!(benches, planner);
criterion_main!(benches);
