//! Gabor feature prediction harness: windowed-harmonic kernels, full-image
//! convolution targets, ridge readout from latent codes, and the masking
//! ratio x spatial scale sweep.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::correlation::{empirical_correlation, DataMatrix};
use crate::exec::{derive_rng, map_indexed};
use crate::layout::PatchLayout;
use crate::solutions::mae_optimum;
use crate::{Error, Result};

/// Gabor kernel parameters: `g(i, j) = exp(-(i^2 + gamma^2 j^2) / (2 sigma^2))
/// * cos(2 pi i f + phi)` on integer offsets `i, j in [-radius, radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborSpec {
    pub frequency: f64,
    pub phase: f64,
    /// Gaussian scale `sigma`.
    pub scale: f64,
    /// Aspect dilation `gamma`.
    pub dilation: f64,
    /// Truncation radius `rho`; the kernel is `(2 rho + 1)` on a side.
    pub radius: usize,
}

impl GaborSpec {
    /// Defaults from the task definition: `phi = 0`, `gamma = 1`, and
    /// truncation at `rho = ceil(4 sigma)` (truncated Gaussian mass below
    /// 3e-4 of the total).
    pub fn new(frequency: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Gabor scale must be positive, got {scale}"
            )));
        }
        Ok(GaborSpec {
            frequency,
            phase: 0.0,
            scale,
            dilation: 1.0,
            radius: ((4.0 * scale).ceil() as usize).max(1),
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || self.radius == 0 {
            return Err(Error::InvalidParameter(
                "Gabor spec needs scale > 0 and radius >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluate the kernel on the integer grid; entry `[(radius + i, radius + j)]`
/// holds `g(i, j)`.
pub fn gabor_kernel(spec: &GaborSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let r = spec.radius as isize;
    let side = 2 * spec.radius + 1;
    let two_sigma_sq = 2.0 * spec.scale * spec.scale;
    Ok(DMatrix::from_fn(side, side, |row, col| {
        let i = row as isize - r;
        let j = col as isize - r;
        let (fi, fj) = (i as f64, j as f64);
        let envelope = (-(fi * fi + spec.dilation * spec.dilation * fj * fj) / two_sigma_sq).exp();
        envelope * (std::f64::consts::TAU * fi * spec.frequency + spec.phase).cos()
    }))
}

/// Convolve every image in `x` with the Gabor kernel (true convolution, zero
/// padding, same spatial size). Channels are averaged into one plane first;
/// the result is an `n x (H * W)` data matrix.
pub fn gabor_target(x: &DataMatrix, spec: &GaborSpec) -> Result<DataMatrix> {
    let Some(&PatchLayout::Grid2D {
        height,
        width,
        channels,
        patch,
    }) = x.layout()
    else {
        return Err(Error::UnsupportedLayout(
            "gabor_target needs data tagged with a grid layout".into(),
        ));
    };
    let kernel = gabor_kernel(spec)?;
    let r = spec.radius as isize;
    let n = x.n();
    let (h, w) = (height as isize, width as isize);

    let rows: Vec<Vec<f64>> = map_indexed(n, |sample| {
        // Channel-averaged image plane.
        let image = DMatrix::from_fn(height, width, |row, col| {
            let pixel = row * width + col;
            (0..channels)
                .map(|ch| x.values()[(sample, pixel * channels + ch)])
                .sum::<f64>()
                / channels as f64
        });
        let mut out = vec![0.0; height * width];
        for or in 0..h {
            for oc in 0..w {
                let mut acc = 0.0;
                for ki in -r..=r {
                    for kj in -r..=r {
                        let (ir, ic) = (or - ki, oc - kj);
                        if ir >= 0 && ir < h && ic >= 0 && ic < w {
                            acc += kernel[((ki + r) as usize, (kj + r) as usize)]
                                * image[(ir as usize, ic as usize)];
                        }
                    }
                }
                out[(or * w + oc) as usize] = acc;
            }
        }
        out
    });

    let values = DMatrix::from_fn(n, height * width, |r, c| rows[r][c]);
    DataMatrix::new(values)?.with_layout(PatchLayout::grid(height, width, 1, patch)?)
}

/// Fitted ridge readout and its split mean squared errors (per entry).
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeReadout {
    /// `k x t` weight matrix mapping latents to targets.
    pub weights: DMatrix<f64>,
    pub train_mse: f64,
    pub test_mse: f64,
}

/// Deterministic 80/20 index split (train, test) from `split_seed`.
pub fn train_test_split(n: usize, split_seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(split_seed, 0);
    order.shuffle(&mut rng);
    let n_train = ((n * 4) / 5).max(1);
    let test = order.split_off(n_train);
    (order, test)
}

/// Closed-form ridge regression of `targets` on `latents` with an 80/20
/// split: `W = (Z^T Z + ridge I)^-1 Z^T Y` on the training rows.
pub fn ridge_readout(
    latents: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    ridge: f64,
    split_seed: u64,
) -> Result<RidgeReadout> {
    let n = latents.nrows();
    if targets.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "latents have {n} rows but targets have {}",
            targets.nrows()
        )));
    }
    if n < 4 {
        return Err(Error::InvalidParameter(
            "ridge readout needs at least 4 samples".into(),
        ));
    }
    if ridge < 0.0 {
        return Err(Error::InvalidParameter("ridge must be >= 0".into()));
    }
    let k = latents.ncols();
    let (train_idx, test_idx) = train_test_split(n, split_seed);

    let select = |m: &DMatrix<f64>, idx: &[usize]| {
        DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
    };
    let z_train = select(latents, &train_idx);
    let y_train = select(targets, &train_idx);
    let z_test = select(latents, &test_idx);
    let y_test = select(targets, &test_idx);

    let normal = z_train.transpose() * &z_train + DMatrix::identity(k, k) * ridge;
    let chol = nalgebra::linalg::Cholesky::new(normal).ok_or_else(|| {
        Error::Singular(
            "normal equations are singular at this ridge; use ridge > 0".into(),
        )
    })?;
    let weights = chol.solve(&(z_train.transpose() * &y_train));

    let mse = |z: &DMatrix<f64>, y: &DMatrix<f64>| {
        (y - z * &weights).norm_squared() / (y.nrows() * y.ncols()) as f64
    };
    Ok(RidgeReadout {
        train_mse: mse(&z_train, &y_train),
        test_mse: mse(&z_test, &y_test),
        weights,
    })
}

/// One configuration of the sweep with its readout errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub m: f64,
    pub p: usize,
    pub sigma: f64,
    pub f: f64,
    pub train_mse: f64,
    pub test_mse: f64,
}

/// Full sweep output, one row per `(m, sigma, f)` in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub rows: Vec<TaskRow>,
}

/// For each masking ratio: solve the closed-form optimum on the empirical
/// second moment, encode the (unmasked) images through `A`, and fit a ridge
/// readout against every Gabor target in the `sigma x f` grid.
#[allow(clippy::too_many_arguments)]
pub fn gabor_sweep(
    x: &DataMatrix,
    sigmas: &[f64],
    freqs: &[f64],
    ms: &[f64],
    p: usize,
    k: usize,
    ridge: f64,
    split_seed: u64,
) -> Result<TaskResult> {
    let Some(&PatchLayout::Grid2D {
        height,
        width,
        channels,
        ..
    }) = x.layout()
    else {
        return Err(Error::UnsupportedLayout(
            "gabor_sweep needs data tagged with a grid layout".into(),
        ));
    };
    if sigmas.is_empty() || freqs.is_empty() || ms.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep lists must be non-empty".into(),
        ));
    }
    let layout = PatchLayout::grid(height, width, channels, p)?;
    let sigma_mat = empirical_correlation(x);

    // Targets do not depend on m; compute each (sigma, f) once.
    let mut targets = Vec::with_capacity(sigmas.len() * freqs.len());
    for &s in sigmas {
        for &f in freqs {
            let spec = GaborSpec::new(f, s)?;
            targets.push((s, f, gabor_target(x, &spec)?));
        }
    }

    let per_m: Vec<Result<Vec<TaskRow>>> = map_indexed(ms.len(), |mi| {
        let m = ms[mi];
        let sol = mae_optimum(&sigma_mat, m, &layout, k)?;
        let latents = x.values() * &sol.model.encoder;
        let mut rows = Vec::with_capacity(targets.len());
        for (s, f, target) in &targets {
            let readout = ridge_readout(&latents, target.values(), ridge, split_seed)?;
            rows.push(TaskRow {
                m,
                p,
                sigma: *s,
                f: *f,
                train_mse: readout.train_mse,
                test_mse: readout.test_mse,
            });
        }
        Ok(rows)
    });

    let mut rows = Vec::new();
    for r in per_m {
        rows.extend(r?);
    }
    Ok(TaskResult { rows })
}
