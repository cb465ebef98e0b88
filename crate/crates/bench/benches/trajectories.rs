use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use qfinsler_bench::infall;
use qfinsler_core::Mode;

fn infall_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("infall tau 10");
    g.sample_size(20);
    for (name, mode) in [("classical", Mode::Classical), ("quantum", Mode::Quantum)] {
        let (problem, start) = infall(mode, 0.01);
        g.bench_function(name, |b| b.iter_batched(|| start, |s| problem.integrate(&s, 10.0, 1000, 10).unwrap(), BatchSize::SmallInput));
    }
    g.finish();
}

criterion_group!(benches, infall_runs);
criterion_main!(benches);
