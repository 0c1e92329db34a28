//! Deterministic execution helpers: seeded RNG streams, order-independent
//! parallel maps, and fixed-order reductions.
//!
//! Samplers and Monte-Carlo loops derive one RNG per work item from
//! `(seed, stream_index)`, so splitting work across threads cannot change the
//! numbers. Reductions over floating-point results always run as a pairwise
//! tree in item-index order, which makes the parallel build and the
//! `--no-default-features` sequential build bit-identical.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive an independent RNG for work item `stream` of a run seeded by `seed`.
///
/// ChaCha streams are statistically independent, so chunked samplers get
/// reproducible results regardless of how chunks are scheduled.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Map `f` over `0..n`, preserving index order in the output.
///
/// Runs on rayon when the `parallel` feature is enabled, sequentially
/// otherwise. Both paths return identical vectors.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference implementation of [`map_indexed`].
///
/// Always compiled; the bench suite uses it as the baseline against the
/// rayon path.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Cap the global worker-pool size. Call once at startup, before any
/// parallel work; later calls are ignored. No-op in sequential builds, and
/// results never depend on the value (only timing does).
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}

/// Box-Muller standard normal draw.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 > 0.0 {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Sum `values` by pairwise tree reduction in index order.
///
/// The summation order is a function of `values.len()` alone, so the result
/// is reproducible across runs and thread counts (the values themselves are
/// produced in index order by [`map_indexed`]).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Mean and standard error of the mean, with pairwise summation throughout.
///
/// Returns `(mean, stderr)`; `stderr` is 0 when all values are equal or when
/// `values.len() < 2`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
