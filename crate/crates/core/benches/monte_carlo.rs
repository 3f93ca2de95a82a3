use std::hint::black_box;

use appe::estimation::lemma_event_frequency;
use appe::exec::Execution;
use appe::protocol::{run_appe, ProtocolConfig};
use appe::rng::SeedTree;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn lemma(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma_event_frequency");
    group.sample_size(10);
    let seeds = SeedTree::new(1);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| lemma_event_frequency(200, 100, 0.1, 0.1, 0.1, black_box(2000), &seeds, exec).unwrap())
        });
    }
    group.finish();
}

fn replicated_runs(c: &mut Criterion) {
    let mut cfg = ProtocolConfig::new(6, 2, vec![1, 2, 3, 5], vec![0.0, 0.9, 1.0, 1.2, 0.0, 1.1], 4000, 1000);
    cfg.vote_rounds = 2000;
    let mut group = c.benchmark_group("protocol_replicates");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                exec.map(16, |s| {
                    let mut c = cfg.clone();
                    c.seed = s as u64;
                    run_appe(&c).unwrap().report.estimate.map(|e| e.theta_hat)
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, lemma, replicated_runs);
criterion_main!(benches);
