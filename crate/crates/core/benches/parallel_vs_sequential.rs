use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use memnet::par;
use memnet::pipeline::{assemble_sqrt, eval_point, BuildConfig};
use memnet::synth;

fn dataset_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_dataset");
    group.sample_size(10);
    for n in [64usize, 256] {
        let ds = synth::classification(n, 2, 16, 1).expect("synthetic dataset");
        let (net, _) = assemble_sqrt(&ds, &BuildConfig::with_seed(1)).expect("build");
        let pts = ds.points();
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| black_box(par::map_seq(pts, |x| eval_point(&net, x).is_ok())))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| black_box(par::map_par(pts, |x| eval_point(&net, x).is_ok())))
        });
    }
    group.finish();
}

criterion_group!(benches, dataset_evaluation);
criterion_main!(benches);
