//! Thread-count invariance: every sampler and Monte-Carlo estimator must
//! return bit-identical results whether run sequentially, in a 1-thread
//! pool, or across many workers.

use maelens::correlation::{gaussian_from_cov, ising_gibbs_sample, IsingSpec};
use maelens::layout::PatchLayout;
use maelens::masking::mc_loss;
use maelens::matrix::SymMatrix;
use maelens::solutions::mae_optimum;
use maelens::trainer::{train_mlp, TrainConfig};

#[cfg(feature = "parallel")]
fn with_pool<T>(threads: usize, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T>(_threads: usize, f: impl FnOnce() -> T) -> T {
    f()
}

#[test]
fn gibbs_sampler_independent_of_thread_count() {
    let spec = IsingSpec::new(16, 1.0).unwrap();
    let runs: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|t| with_pool(t, || ising_gibbs_sample(&spec, 500, 123).unwrap()))
        .collect();
    assert_eq!(runs[0].values(), runs[1].values());
    assert_eq!(runs[0].values(), runs[2].values());
}

#[test]
fn gaussian_sampler_independent_of_thread_count() {
    let sigma = SymMatrix::identity(6);
    let runs: Vec<_> = [1, 3, 8]
        .into_iter()
        .map(|t| with_pool(t, || gaussian_from_cov(&sigma, 300, 9).unwrap()))
        .collect();
    assert_eq!(runs[0].values(), runs[1].values());
    assert_eq!(runs[0].values(), runs[2].values());
}

#[test]
fn mc_loss_independent_of_thread_count() {
    let spec = IsingSpec::new(12, 1.0).unwrap();
    let x = ising_gibbs_sample(&spec, 60, 4).unwrap();
    let sigma = maelens::correlation::empirical_correlation(&x);
    let layout = PatchLayout::ring(12, 3).unwrap();
    let sol = mae_optimum(&sigma, 0.5, &layout, 3).unwrap();
    let runs: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|t| with_pool(t, || mc_loss(&x, &sol.model, 5_000, 31).unwrap()))
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn mlp_training_independent_of_thread_count() {
    let spec = IsingSpec::new(8, 1.0).unwrap();
    let x = ising_gibbs_sample(&spec, 40, 2).unwrap();
    let layout = PatchLayout::ring(8, 2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-3,
        steps: 60,
        init_scale: 0.1,
        seed: 5,
        record_every: 20,
    };
    let runs: Vec<_> = [1, 4]
        .into_iter()
        .map(|t| with_pool(t, || train_mlp(&x, 0.5, &layout, 2, 6, &cfg).unwrap()))
        .collect();
    assert_eq!(runs[0].loss_trace, runs[1].loss_trace);
    assert_eq!(runs[0].model, runs[1].model);
}
