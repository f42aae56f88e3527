use criterion::{criterion_group, criterion_main, Criterion};
use synproj::fixtures;
use synproj::generator::{generate_dataset, with_gold_answers};

fn batch(c: &mut Criterion) {
    let templates = fixtures::templates();
    let corpus = fixtures::corpus();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let mut group = c.benchmark_group("generate_2000");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| single.install(|| with_gold_answers(generate_dataset(&templates, &corpus, 2000, 42).unwrap(), &corpus)))
    });
    group.bench_function("parallel", |b| b.iter(|| with_gold_answers(generate_dataset(&templates, &corpus, 2000, 42).unwrap(), &corpus)));
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
