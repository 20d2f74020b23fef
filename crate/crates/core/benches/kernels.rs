//! Hot kernels under a single-thread pool versus the default pool.
//!
//! Build with `--no-default-features` to time the sequential fallback; the
//! `threads=1` group then matches it closely.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use neteffect::emphasis::random_walk_counts;
use neteffect::{
    generate, initial_beliefs, propagate, run_test, sample_priors, CompatibilityMatrix, GeneratorSpec,
    PropagationConfig, SparseWeightedMatrix, TestConfig, WalkConfig,
};

fn pools() -> Vec<(String, Option<rayon::ThreadPool>)> {
    #[cfg(feature = "parallel")]
    {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        vec![
            ("threads=1".to_string(), Some(one)),
            (format!("threads={}", rayon::current_num_threads()), None),
        ]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential".to_string(), None)]
    }
}

fn run<T>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn kernels(c: &mut Criterion) {
    let spec = GeneratorSpec::preset("xophily", 0).unwrap();
    let (g, l) = generate(&spec).unwrap();
    let p = sample_priors(&l, 0.05, 0, false).unwrap();
    let a = SparseWeightedMatrix::adjacency(&g);
    let e = initial_beliefs(&p, &l, true);
    let h = CompatibilityMatrix::centered_identity(l.num_classes());
    let x: Vec<f64> = (0..g.num_nodes() * l.num_classes()).map(|i| (i % 7) as f64).collect();
    let mut y = vec![0.0; x.len()];

    for (name, pool) in pools() {
        let mut group = c.benchmark_group("kernels");
        group.sample_size(10);
        group.bench_function(BenchmarkId::new("spmm", &name), |b| {
            b.iter(|| run(&pool, || a.mul_rows(black_box(&x), l.num_classes(), &mut y)))
        });
        let cfg = PropagationConfig { max_iter: 20, l1_threshold: 1e-300, ..Default::default() };
        group.bench_function(BenchmarkId::new("propagate_20", &name), |b| {
            b.iter(|| run(&pool, || propagate(&a, &h, &e, &cfg).unwrap()))
        });
        group.bench_function(BenchmarkId::new("walks", &name), |b| {
            b.iter(|| run(&pool, || random_walk_counts(&g, &WalkConfig::default()).unwrap()))
        });
        let tc = TestConfig { rounds: 200, ..Default::default() };
        group.bench_function(BenchmarkId::new("chi2_test", &name), |b| {
            b.iter(|| run(&pool, || run_test(&g, &p, &l, &tc).unwrap()))
        });
        group.finish();
    }
}

criterion_group!(benches, kernels);
criterion_main!(benches);
