//! Data generators and second-moment matrices: analytic Ising correlations,
//! Gibbs-sampled Ising rings, Gaussian data with prescribed covariance,
//! empirical correlation matrices, and image spatial autocorrelation.

use nalgebra::DMatrix;
use rand::Rng;

use crate::exec::{derive_rng, map_indexed, standard_normal};
use crate::layout::PatchLayout;
use crate::matrix::{sym_factor, SymMatrix};
use crate::{Error, Result};

/// Samples-by-dimensions matrix of real data (rows are samples), optionally
/// tagged with a spatial layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    layout: Option<PatchLayout>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DimensionMismatch(
                "data matrix must have n >= 1 and d >= 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "data matrix contains non-finite values".into(),
            ));
        }
        Ok(DataMatrix {
            values,
            layout: None,
        })
    }

    /// Attach a layout; its total dims must match the column count.
    pub fn with_layout(mut self, layout: PatchLayout) -> Result<Self> {
        if layout.total_dims() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "layout covers {} dims but data has {}",
                layout.total_dims(),
                self.d()
            )));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn layout(&self) -> Option<&PatchLayout> {
        self.layout.as_ref()
    }
}

/// One-dimensional Ising ring specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingSpec {
    /// Ring length; at least 3.
    pub dims: usize,
    /// Coupling constant `J`.
    pub coupling: f64,
}

impl IsingSpec {
    pub fn new(dims: usize, coupling: f64) -> Result<Self> {
        if dims < 3 {
            return Err(Error::InvalidParameter(format!(
                "Ising ring needs d >= 3, got {dims}"
            )));
        }
        Ok(IsingSpec { dims, coupling })
    }
}

/// Asymptotic Ising pair correlation: entry `(i, j) = tanh(J)^r` with `r`
/// the ring distance; the diagonal is exactly 1.
pub fn ising_correlation(spec: &IsingSpec) -> SymMatrix {
    let t = spec.coupling.tanh();
    let d = spec.dims;
    SymMatrix::from_fn(d, |i, j| {
        let diff = i.abs_diff(j);
        let r = diff.min(d - diff);
        if r == 0 {
            1.0
        } else {
            t.powi(r as i32)
        }
    })
    .expect("dims >= 3")
}

/// Gibbs sweep/thinning schedule for [`ising_gibbs_sample_with`].
#[derive(Debug, Clone, Copy)]
pub struct GibbsConfig {
    /// Full sweeps discarded before the first sample of each chain.
    pub burn_in: usize,
    /// Full sweeps between successive samples.
    pub thinning: usize,
    /// Samples drawn per independent chain; chains are seeded from
    /// `(seed, chain_index)` so output does not depend on thread count.
    pub chunk: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in: 100,
            thinning: 10,
            chunk: 64,
        }
    }
}

/// Sample `n` spin configurations from the ring Ising distribution
/// `p(x) ~ exp(J x_1 x_d + J sum_i x_i x_{i+1})` by single-site Gibbs sweeps
/// with the default burn-in (100 sweeps) and thinning (10 sweeps).
pub fn ising_gibbs_sample(spec: &IsingSpec, n: usize, seed: u64) -> Result<DataMatrix> {
    ising_gibbs_sample_with(spec, n, seed, &GibbsConfig::default())
}

/// [`ising_gibbs_sample`] with an explicit sweep schedule.
pub fn ising_gibbs_sample_with(
    spec: &IsingSpec,
    n: usize,
    seed: u64,
    cfg: &GibbsConfig,
) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1 samples".into()));
    }
    if cfg.chunk == 0 {
        return Err(Error::InvalidParameter("chunk size must be >= 1".into()));
    }
    let d = spec.dims;
    let j = spec.coupling;
    let chunks = n.div_ceil(cfg.chunk);

    let blocks: Vec<Vec<Vec<f64>>> = map_indexed(chunks, |chunk_idx| {
        let mut rng = derive_rng(seed, chunk_idx as u64);
        let take = cfg.chunk.min(n - chunk_idx * cfg.chunk);
        let mut spins: Vec<f64> = (0..d)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let sweep = |spins: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| {
            for i in 0..d {
                let left = spins[(i + d - 1) % d];
                let right = spins[(i + 1) % d];
                // p(x_i = +1 | rest) from the two-neighbor conditional.
                let p_up = 1.0 / (1.0 + (-2.0 * j * (left + right)).exp());
                spins[i] = if rng.random::<f64>() < p_up { 1.0 } else { -1.0 };
            }
        };
        for _ in 0..cfg.burn_in {
            sweep(&mut spins, &mut rng);
        }
        let mut out = Vec::with_capacity(take);
        for s in 0..take {
            if s > 0 {
                for _ in 0..cfg.thinning {
                    sweep(&mut spins, &mut rng);
                }
            }
            out.push(spins.clone());
        }
        out
    });

    let rows: Vec<Vec<f64>> = blocks.into_iter().flatten().collect();
    let values = DMatrix::from_fn(n, d, |r, c| rows[r][c]);
    DataMatrix::new(values)?.with_layout(PatchLayout::ring(d, 1)?)
}

/// Exact nearest-neighbor correlation of the finite Ising ring,
/// `(t + t^(d-1)) / (1 + t^d)` with `t = tanh(J)`.
///
/// Transfer-matrix result; used as an oracle for the Gibbs sampler.
pub fn ising_ring_nn_correlation(spec: &IsingSpec) -> f64 {
    let t = spec.coupling.tanh();
    let d = spec.dims as i32;
    (t + t.powi(d - 1)) / (1.0 + t.powi(d))
}

/// Draw `n` i.i.d. zero-mean Gaussian rows with covariance `sigma`.
///
/// Rows are `z G` where `G^T G = sigma` comes from [`sym_factor`], so the
/// population covariance is exact. Chunked and seeded like the Gibbs
/// sampler.
pub fn gaussian_from_cov(sigma: &SymMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1 samples".into()));
    }
    let d = sigma.dim();
    let g = sym_factor(sigma)?;
    const CHUNK: usize = 64;
    let chunks = n.div_ceil(CHUNK);

    let blocks: Vec<DMatrix<f64>> = map_indexed(chunks, |chunk_idx| {
        let mut rng = derive_rng(seed, chunk_idx as u64);
        let take = CHUNK.min(n - chunk_idx * CHUNK);
        let z = DMatrix::from_fn(take, d, |_, _| standard_normal(&mut rng));
        z * &g
    });

    let mut values = DMatrix::zeros(n, d);
    let mut row = 0;
    for block in blocks {
        values.rows_mut(row, block.nrows()).copy_from(&block);
        row += block.nrows();
    }
    DataMatrix::new(values)
}

/// Raw second-moment matrix `X^T X` (no centering, no `1/n`).
pub fn empirical_correlation(x: &DataMatrix) -> SymMatrix {
    empirical_correlation_with(x, false, false)
}

/// `X^T X` with optional column mean-centering and optional `1/n` scaling.
pub fn empirical_correlation_with(x: &DataMatrix, center: bool, scale: bool) -> SymMatrix {
    let n = x.n();
    let mut values = x.values().clone();
    if center {
        let mean = values.row_mean();
        for mut row in values.row_iter_mut() {
            row -= &mean;
        }
    }
    let mut xtx = values.transpose() * &values;
    if scale {
        xtx /= n as f64;
    }
    SymMatrix::symmetrize(xtx).expect("square by construction")
}

/// Circular spatial autocorrelation of a 2-D image:
/// `(1/(MN)) * sum_xy f(x, y) f(x+dx, y+dy)` with wrap-around indexing.
///
/// `dx` shifts rows (size `M`), `dy` shifts columns (size `N`).
pub fn spatial_autocorrelation(image: &DMatrix<f64>, dx: usize, dy: usize) -> Result<f64> {
    let (m, n) = (image.nrows(), image.ncols());
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch("empty image".into()));
    }
    if dx >= m || dy >= n {
        return Err(Error::IndexOutOfRange(format!(
            "shift ({dx}, {dy}) out of range for {m}x{n} image"
        )));
    }
    let mut acc = 0.0;
    for x in 0..m {
        for y in 0..n {
            acc += image[(x, y)] * image[((x + dx) % m, (y + dy) % n)];
        }
    }
    Ok(acc / (m * n) as f64)
}

/// Pearson-normalized variant of [`spatial_autocorrelation`]: the image is
/// mean-centered and the result divided by its variance, so the zero shift
/// maps to 1 (for non-constant images).
pub fn spatial_autocorrelation_pearson(
    image: &DMatrix<f64>,
    dx: usize,
    dy: usize,
) -> Result<f64> {
    let mean = image.mean();
    let centered = image.map(|v| v - mean);
    let var = spatial_autocorrelation(&centered, 0, 0)?;
    if var == 0.0 {
        return Err(Error::InvalidParameter(
            "Pearson autocorrelation undefined for constant images".into(),
        ));
    }
    Ok(spatial_autocorrelation(&centered, dx, dy)? / var)
}

/// Exponential-decay pixel correlation `exp(-dist / length_scale)` on an
/// `height x width` grid (one channel), using Euclidean pixel distance.
///
/// Supplies desk-scale correlated-image covariances for the Gabor task.
pub fn grid_exp_correlation(height: usize, width: usize, length_scale: f64) -> Result<SymMatrix> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if !(length_scale > 0.0) {
        return Err(Error::InvalidParameter(
            "length scale must be positive".into(),
        ));
    }
    let w = width;
    SymMatrix::from_fn(height * width, |i, j| {
        let (ri, ci) = (i / w, i % w);
        let (rj, cj) = (j / w, j % w);
        let dist = (ri.abs_diff(rj) as f64).hypot(ci.abs_diff(cj) as f64);
        (-dist / length_scale).exp()
    })
}
