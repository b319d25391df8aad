//! Criterion benchmarks for the distance kernels and the batch layer.
//!
//! `single_pair` tracks the quadratic forward/backward/gradient kernels over
//! series length. `batch` compares the data-parallel batch layer against the
//! sequential fallback: with the default `parallel` feature the same closure
//! runs inside one-thread and default-size worker pools; built with
//! `--no-default-features` every group runs the genuinely sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use softmsm::averaging::{frechet_loss, SoftKind};
use softmsm::{parallel, soft, Geometry, SoftParams, TimeSeries, TimeSeriesSet};

fn random_series(rng: &mut ChaCha8Rng, m: usize) -> TimeSeries {
    TimeSeries::new((0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, m: usize) -> TimeSeriesSet {
    TimeSeriesSet::new((0..n).map(|_| random_series(rng, m)).collect()).unwrap()
}

fn bench_single_pair(c: &mut Criterion) {
    let params = SoftParams::new(0.1, 1.0).unwrap();
    let mut group = c.benchmark_group("single_pair");
    for m in [64usize, 256, 512] {
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
        let x = random_series(&mut rng, m);
        let y = random_series(&mut rng, m);
        group.bench_with_input(BenchmarkId::new("soft_msm_forward", m), &m, |b, _| {
            b.iter(|| soft::msm::forward(&x, &y, &params).unwrap().objective())
        });
        group.bench_with_input(
            BenchmarkId::new("soft_msm_forward_backward", m),
            &m,
            |b, _| {
                b.iter(|| {
                    let cost = soft::msm::forward(&x, &y, &params).unwrap();
                    soft::msm::alignment(&x, &y, &cost).unwrap().get(0, 0)
                })
            },
        );
        group.bench_with_input(BenchmarkId::new("soft_msm_gradient", m), &m, |b, _| {
            b.iter(|| soft::msm::gradient(&x, &y, &params).unwrap().0)
        });
        group.bench_with_input(BenchmarkId::new("soft_dtw_gradient", m), &m, |b, _| {
            b.iter(|| soft::dtw::gradient(&x, &y, &params).unwrap().0)
        });
    }
    group.finish();
}

/// One objective+gradient sweep over a whole collection, the inner loop of
/// every barycentre iteration.
fn batch_objective_grad(set: &TimeSeriesSet, beta: &TimeSeries, params: &SoftParams) -> f64 {
    let per_series = parallel::map_slice(set.as_slice(), |x| {
        soft::msm::gradient(beta, x, params).unwrap()
    });
    let mut total = 0.0;
    let mut grad = vec![0.0; beta.len()];
    for (f, g) in per_series {
        total += f;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    total + grad[0]
}

fn bench_batch(c: &mut Criterion) {
    let params = SoftParams::new(0.1, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let set = random_set(&mut rng, 32, 128);
    let beta = set.arithmetic_mean();

    let mut group = c.benchmark_group("batch");
    group.sample_size(20);

    for kind in [SoftKind::SoftMsm, SoftKind::SoftDtw] {
        let _ = kind; // both kinds share the batch layer; msm is the heavier one
    }

    group.bench_function("objective_grad/seq", |b| {
        b.iter(|| parallel::run_with_threads(1, || batch_objective_grad(&set, &beta, &params)))
    });
    group.bench_function("objective_grad/par", |b| {
        b.iter(|| parallel::run_with_threads(0, || batch_objective_grad(&set, &beta, &params)))
    });

    group.bench_function("frechet_msm/seq", |b| {
        b.iter(|| {
            parallel::run_with_threads(1, || frechet_loss(&beta, &set, Geometry::Msm, 1.0).unwrap())
        })
    });
    group.bench_function("frechet_msm/par", |b| {
        b.iter(|| {
            parallel::run_with_threads(0, || frechet_loss(&beta, &set, Geometry::Msm, 1.0).unwrap())
        })
    });
    group.finish();
}

criterion_group!(benches, bench_single_pair, bench_batch);
criterion_main!(benches);
