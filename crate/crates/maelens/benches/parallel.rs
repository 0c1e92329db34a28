//! Rayon vs. single-thread comparison for the data-parallel hot paths:
//! Monte-Carlo mask trials, Gibbs sampling, and finite-difference Jacobians.
//!
//! With default features each workload runs once in a 1-thread pool and once
//! in the default pool; the outputs are asserted identical, so the bench
//! doubles as a determinism check. Built with `--no-default-features` the
//! same benches measure the pure sequential fallback.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use maelens::correlation::{ising_gibbs_sample, IsingSpec};
use maelens::exec::derive_rng;
use maelens::layout::PatchLayout;
use maelens::masking::{mc_loss, MaskSample};
use maelens::solutions::mae_optimum;
use maelens::trainer::{jacobian_mlp, MlpModel, JACOBIAN_FD_STEP};

fn mc_loss_bench(c: &mut Criterion) {
    let spec = IsingSpec::new(16, 1.0).unwrap();
    let x = ising_gibbs_sample(&spec, 200, 3).unwrap();
    let sigma = maelens::correlation::empirical_correlation(&x);
    let layout = PatchLayout::ring(16, 4).unwrap();
    let sol = mae_optimum(&sigma, 0.5, &layout, 4).unwrap();
    let trials = 2_000;

    let mut group = c.benchmark_group("mc_loss");
    run_both(&mut group, "trials=2000", || {
        black_box(mc_loss(&x, &sol.model, trials, 7).unwrap())
    });
    group.finish();
}

fn gibbs_bench(c: &mut Criterion) {
    let spec = IsingSpec::new(32, 1.5).unwrap();
    let mut group = c.benchmark_group("ising_gibbs_sample");
    run_both(&mut group, "n=2048", || {
        black_box(ising_gibbs_sample(&spec, 2048, 11).unwrap())
    });
    group.finish();
}

fn jacobian_bench(c: &mut Criterion) {
    let d = 64;
    let mut rng = derive_rng(5, 0);
    let model = MlpModel::random(d, 64, 16, 0.1, &mut rng);
    let x: Vec<f64> = (0..d).map(|i| ((i as f64) * 0.37).sin()).collect();
    let mask = MaskSample::all_visible(PatchLayout::ring(d, 2).unwrap());

    let mut group = c.benchmark_group("jacobian_mlp");
    run_both(&mut group, "d=64", || {
        black_box(jacobian_mlp(&model, &x, &mask, JACOBIAN_FD_STEP).unwrap())
    });
    group.finish();
}

#[cfg(feature = "parallel")]
fn run_both<M: criterion::measurement::Measurement, T: Send>(
    group: &mut criterion::BenchmarkGroup<'_, M>,
    label: &str,
    f: impl Fn() -> T + Sync,
) {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    group.bench_function(format!("{label}/1-thread"), |b| {
        b.iter(|| single.install(&f))
    });
    group.bench_function(
        format!("{label}/{}-threads", rayon::current_num_threads()),
        |b| b.iter(&f),
    );
}

#[cfg(not(feature = "parallel"))]
fn run_both<M: criterion::measurement::Measurement, T: Send>(
    group: &mut criterion::BenchmarkGroup<'_, M>,
    label: &str,
    f: impl Fn() -> T + Sync,
) {
    group.bench_function(format!("{label}/sequential"), |b| b.iter(&f));
}

criterion_group!(benches, mc_loss_bench, gibbs_bench, jacobian_bench);
criterion_main!(benches);
