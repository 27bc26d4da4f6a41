use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mediator_core::capacity::chi_capacity_with;
use mediator_core::harness::{run_experiment, ExperimentConfig, Prepared};
use mediator_core::par::Execution;
use mediator_core::policy::make_epsilon_greedy;

const CONFIG: &str = r#"
[experiment]
id = "bench"
horizon = 5000
replicates = 16
seed = 1
record_every = 5000

[policies]
family = "epsilon-greedy"
n = 16
epsilon = 0.5

[environment]
kind = "bernoulli"
gap = 0.2

[learner]
name = "exp4-fixed"
"#;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn replicates(c: &mut Criterion) {
    let prep = Prepared::new(ExperimentConfig::parse(CONFIG).unwrap(), Path::new(".")).unwrap();
    let mut group = c.benchmark_group("replicates");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_experiment(&prep, exec).unwrap()))
        });
    }
    group.finish();
}

fn capacity_restarts(c: &mut Criterion) {
    let set = make_epsilon_greedy(12, 0.3).unwrap().untagged();
    let mut group = c.benchmark_group("chi_capacity");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(chi_capacity_with(&set, 1e-6, 500, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, replicates, capacity_restarts);
criterion_main!(benches);
