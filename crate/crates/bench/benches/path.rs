use bernsvm::{fit_model, fit_path, Engine, SolverOptions};
use bernsvm_bench::Workload;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn path_fits(c: &mut Criterion) {
    let mut group = c.benchmark_group("lasso_path_n100_p200");
    group.sample_size(10);
    for &delta in &[0.5, 2.0] {
        let w = Workload::scenario1(100, 200, delta, 30, 0.05, 7);
        for engine in [Engine::Gcd, Engine::Irls] {
            group.bench_with_input(BenchmarkId::new(engine.name(), delta), &w, |b, w| {
                b.iter(|| fit_path(&w.design, w.y(), &w.loss, &w.penalty, &w.grid, engine, &SolverOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn single_fits(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_fit_n200_p500");
    group.sample_size(10);
    let w = Workload::scenario1(200, 500, 2.0, 10, 0.1, 8);
    let pen = w.penalty.with_lambda1(w.grid[5]).unwrap();
    for engine in [Engine::Gcd, Engine::Irls] {
        group.bench_function(engine.name(), |b| {
            b.iter(|| fit_model(&w.design, w.y(), &w.loss, &pen, engine, &SolverOptions::default(), None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, path_fits, single_fits);
criterion_main!(benches);
