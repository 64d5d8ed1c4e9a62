use criterion::{criterion_group, criterion_main, Criterion};
use ppds::bench::{run_experiment_with, ExperimentConfig};
use ppds::par::Execution;

fn config() -> ExperimentConfig {
    ExperimentConfig { nn: 200, m: 10, n: 40, realizations: 4, tolerances: vec![1e-3], ..ExperimentConfig::table2() }
}

fn experiment(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_experiment_with(&cfg, Execution::Sequential).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| run_experiment_with(&cfg, Execution::Parallel).unwrap()));
    group.finish();
}

criterion_group!(benches, experiment);
criterion_main!(benches);
