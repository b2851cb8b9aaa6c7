//! Single-threaded pool against the default rayon pool on the parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use ppcs_core::data::{drop_entries, synthesize, SynthSpec};
use ppcs_core::jsd::{haar_basis, jsd_matrix};
use ppcs_core::recovery::{cross_inverse, maa_complete, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPool;

fn pools() -> Vec<(&'static str, ThreadPool)> {
    let sequential = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", sequential), ("parallel", default)]
}

fn bench_lsq(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (n, t, r) = (50, 2000, 4);
    let mut gauss = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let (l, x1, x2) = (gauss(n, r), gauss(n, t), gauss(n, t));
    let m1 = drop_entries(n, t, 0.5, 2).unwrap();
    let m2 = drop_entries(n, t, 0.5, 3).unwrap();
    let mut group = c.benchmark_group("cross_inverse");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| cross_inverse(&m1, &m2, &l, 0.1, &x1, &x2).unwrap()))
        });
    }
    group.finish();
}

fn bench_maa(c: &mut Criterion) {
    let spec = SynthSpec {
        n: 50,
        t: 120,
        shared_rank: 2,
        private_rank: 1,
        noise_std: 0.01,
        attributes: 2,
        seed: 7,
    };
    let bundle = synthesize(&spec).unwrap();
    let masks = [
        drop_entries(50, 120, 0.6, 4).unwrap(),
        drop_entries(50, 120, 0.6, 5).unwrap(),
    ];
    let s: Vec<_> = bundle
        .matrices
        .iter()
        .zip(&masks)
        .map(|(a, m)| m.mask_values(a.data()))
        .collect();
    let cfg = SolverConfig::new(2)
        .with_private_rank(1)
        .with_lambda(0.03)
        .with_max_iters(50);
    let mut group = c.benchmark_group("maa_complete");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pool.install(|| maa_complete(&s[0], &s[1], &masks[0], &masks[1], &cfg).unwrap())
            })
        });
    }
    group.finish();
}

fn bench_jsd(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, t) = (16, 64);
    let a1 = DMatrix::from_fn(n, t, |_, _| rng.random_range(-1.0..1.0));
    let a2 = DMatrix::from_fn(n, t, |_, _| rng.random_range(-1.0..1.0));
    let basis = haar_basis(n);
    let mut group = c.benchmark_group("jsd_matrix");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| jsd_matrix(&a1, &a2, &basis).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_lsq, bench_maa, bench_jsd);
criterion_main!(benches);
