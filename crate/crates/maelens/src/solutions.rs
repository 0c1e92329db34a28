//! Closed-form solutions of the linear masked reconstruction objective:
//! the marginal loss, the optimal encoder/decoder pair, the plain and
//! denoising autoencoder specializations, and arbitrary critical points.
//!
//! Everything is expressed through the second-moment matrix `Sigma = X^T X`
//! (or an analytic surrogate), so no raw samples are required. With
//! `V = (1-m) Sigma + m blkdiag(Sigma)`, the optimal decoder rows are the
//! top-k eigenvectors of `Sigma V^-1 Sigma` in the canonical gauge
//! `B = U_k^T`, and the encoder is `A = V^-1 Sigma B^T (B B^T)^-1`. Each
//! critical point picks some other subset of eigenvectors, with loss
//! `trace(Sigma) - (1-m) * sum(selected eigenvalues)`.

use nalgebra::DMatrix;

use crate::layout::PatchLayout;
use crate::matrix::{blkdiag, gen_sym_eig, SymMatrix};
use crate::{Error, Result};

/// Condition-number threshold beyond which `V` is ridge-regularized.
pub const V_COND_LIMIT: f64 = 1e12;

/// Ridge scale: `1e-10 * trace(V) / d` is added to the diagonal when `V` is
/// ill-conditioned.
pub const V_RIDGE_EPS: f64 = 1e-10;

/// Linear encoder/decoder pair with its masking configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Encoder `A`, `d x k`.
    pub encoder: DMatrix<f64>,
    /// Decoder `B`, `k x d`.
    pub decoder: DMatrix<f64>,
    /// Masking ratio `m` in `[0, 1]`.
    pub mask_ratio: f64,
    pub layout: PatchLayout,
}

impl LinearModel {
    pub fn new(
        encoder: DMatrix<f64>,
        decoder: DMatrix<f64>,
        mask_ratio: f64,
        layout: PatchLayout,
    ) -> Result<Self> {
        let (d, k) = (encoder.nrows(), encoder.ncols());
        if k == 0 || k > d {
            return Err(Error::DimensionMismatch(format!(
                "need 1 <= k <= d, got k={k}, d={d}"
            )));
        }
        if decoder.nrows() != k || decoder.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "decoder must be {k}x{d}, got {}x{}",
                decoder.nrows(),
                decoder.ncols()
            )));
        }
        if layout.total_dims() != d {
            return Err(Error::DimensionMismatch(format!(
                "layout covers {} dims but model has d={d}",
                layout.total_dims()
            )));
        }
        if !(0.0..=1.0).contains(&mask_ratio) {
            return Err(Error::InvalidParameter(format!(
                "masking ratio must be in [0, 1], got {mask_ratio}"
            )));
        }
        if encoder.iter().chain(decoder.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "model weights must be finite".into(),
            ));
        }
        Ok(LinearModel {
            encoder,
            decoder,
            mask_ratio,
            layout,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.ncols()
    }

    /// Reconstruction kernel `A B`; entry `(i, j)` is the influence of input
    /// `i` on output `j`.
    pub fn reconstruction_kernel(&self) -> DMatrix<f64> {
        &self.encoder * &self.decoder
    }
}

/// Closed-form optimum together with its loss and spectrum.
#[derive(Debug, Clone)]
pub struct MaeSolution {
    pub model: LinearModel,
    /// Value of the marginal loss at the optimum,
    /// `trace(Sigma) - (1-m) * sum(eigenvalues)`.
    pub loss: f64,
    /// Selected eigenvalues of `Sigma V^-1 Sigma`, descending.
    pub eigenvalues: Vec<f64>,
    /// `A B`.
    pub projection: DMatrix<f64>,
}

/// Expected masked-reconstruction loss as a function of `Sigma` only:
///
/// `trace(S) - 2(1-m) tr(S AB) + (1-m)^2 tr((AB)^T S AB)
///  + m(1-m) tr((AB)^T blkdiag(S) AB)`.
pub fn marginal_loss(sigma: &SymMatrix, model: &LinearModel) -> Result<f64> {
    let d = model.input_dim();
    if sigma.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "Sigma is {}x{} but model has d={d}",
            sigma.dim(),
            sigma.dim()
        )));
    }
    let m = model.mask_ratio;
    let bd = blkdiag(sigma, &model.layout)?;
    let ab = model.reconstruction_kernel();
    let s_ab = sigma.as_matrix() * &ab;
    let recon_cross = s_ab.trace();
    let quad_full = (ab.transpose() * &s_ab).trace();
    let quad_block = (ab.transpose() * bd.as_matrix() * &ab).trace();
    Ok(sigma.trace() - 2.0 * (1.0 - m) * recon_cross
        + (1.0 - m) * (1.0 - m) * quad_full
        + m * (1.0 - m) * quad_block)
}

/// Expected denoising objective `||X - X A B||^2 + n sigma^2 ||A B||_F^2`
/// in trace form.
pub fn dae_loss(sigma: &SymMatrix, model: &LinearModel, noise_var: f64, n: usize) -> Result<f64> {
    let d = model.input_dim();
    if sigma.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "Sigma is {}x{} but model has d={d}",
            sigma.dim(),
            sigma.dim()
        )));
    }
    if noise_var < 0.0 {
        return Err(Error::InvalidParameter(
            "noise variance must be >= 0".into(),
        ));
    }
    let ab = model.reconstruction_kernel();
    let s_ab = sigma.as_matrix() * &ab;
    let ridge = n as f64 * noise_var;
    Ok(sigma.trace() - 2.0 * s_ab.trace()
        + (ab.transpose() * &s_ab).trace()
        + ridge * ab.norm_squared())
}

/// Optimal masked autoencoder for `(Sigma, m, layout)` with latent size `k`.
pub fn mae_optimum(
    sigma: &SymMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    k: usize,
) -> Result<MaeSolution> {
    let bd = blkdiag(sigma, layout)?;
    let v = SymMatrix::new(
        sigma.as_matrix() * (1.0 - mask_ratio) + bd.as_matrix() * mask_ratio,
    )?;
    let subset: Vec<usize> = (0..k).collect();
    solve_subset(sigma, &v, mask_ratio, layout, &subset, k)
}

/// Plain autoencoder optimum: [`mae_optimum`] at `m = 0` (the layout is
/// irrelevant there; a single-patch ring is used).
pub fn ae_optimum(sigma: &SymMatrix, k: usize) -> Result<MaeSolution> {
    let layout = PatchLayout::ring(sigma.dim(), sigma.dim())?;
    mae_optimum(sigma, 0.0, &layout, k)
}

/// Optimal linear denoising autoencoder for additive Gaussian noise of
/// variance `noise_var` over `n` samples: ridge `n * noise_var` on `A B`,
/// optimum from the top-k eigenvectors of `Sigma (Sigma + n sigma^2 I)^-1
/// Sigma`.
pub fn dae_optimum(
    sigma: &SymMatrix,
    noise_var: f64,
    n: usize,
    k: usize,
) -> Result<MaeSolution> {
    if noise_var < 0.0 {
        return Err(Error::InvalidParameter(
            "noise variance must be >= 0".into(),
        ));
    }
    let d = sigma.dim();
    let ridge = n as f64 * noise_var;
    let v = SymMatrix::new(sigma.as_matrix() + DMatrix::identity(d, d) * ridge)?;
    let layout = PatchLayout::ring(d, d)?;
    let subset: Vec<usize> = (0..k).collect();
    solve_subset(sigma, &v, 0.0, &layout, &subset, k)
}

/// Critical point built from an explicit subset of eigenvector indices of
/// `Sigma V^-1 Sigma` (indices into the descending spectrum). Returns the
/// model and its loss `trace(Sigma) - (1-m) * sum(selected eigenvalues)`.
pub fn critical_point(
    sigma: &SymMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    subset: &[usize],
) -> Result<(LinearModel, f64)> {
    let bd = blkdiag(sigma, layout)?;
    let v = SymMatrix::new(
        sigma.as_matrix() * (1.0 - mask_ratio) + bd.as_matrix() * mask_ratio,
    )?;
    let sol = solve_subset(sigma, &v, mask_ratio, layout, subset, subset.len())?;
    Ok((sol.model, sol.loss))
}

/// Shared solver: eigenvectors of `Sigma V^-1 Sigma` selected by `subset`,
/// decoder `B = U_S^T`, encoder `A = V^-1 Sigma B^T (B B^T)^-1`.
fn solve_subset(
    sigma: &SymMatrix,
    v: &SymMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    subset: &[usize],
    k: usize,
) -> Result<MaeSolution> {
    let d = sigma.dim();
    if k == 0 || k > d {
        return Err(Error::DimensionMismatch(format!(
            "need 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    if subset.len() != k {
        return Err(Error::InvalidParameter(format!(
            "subset has {} indices, expected {k}",
            subset.len()
        )));
    }
    let mut seen = vec![false; d];
    for &i in subset {
        if i >= d {
            return Err(Error::IndexOutOfRange(format!(
                "eigen index {i} out of range for d={d}"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidParameter(format!(
                "eigen index {i} repeated in subset"
            )));
        }
        seen[i] = true;
    }

    let v_inv = invert_v(v)?;
    let c_raw = sigma.as_matrix() * &v_inv * sigma.as_matrix();
    let c = SymMatrix::symmetrize(c_raw)?;
    let eig = gen_sym_eig(&c, &SymMatrix::identity(d))?;

    let mut u = DMatrix::zeros(d, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (col, &idx) in subset.iter().enumerate() {
        u.set_column(col, &eig.vectors.column(idx));
        eigenvalues.push(eig.values[idx]);
    }

    let decoder = u.transpose();
    let gram_inv = (&decoder * decoder.transpose())
        .try_inverse()
        .ok_or_else(|| Error::Singular("B B^T is singular".into()))?;
    let encoder = &v_inv * sigma.as_matrix() * &u * gram_inv;

    let loss = sigma.trace() - (1.0 - mask_ratio) * eigenvalues.iter().sum::<f64>();
    let model = LinearModel::new(encoder, decoder, mask_ratio, *layout)?;
    let projection = model.reconstruction_kernel();
    Ok(MaeSolution {
        model,
        loss,
        eigenvalues,
        projection,
    })
}

/// Invert symmetric positive semidefinite `V` through its eigendecomposition,
/// adding the ridge `V_RIDGE_EPS * trace(V) / d` when the condition number
/// exceeds [`V_COND_LIMIT`].
fn invert_v(v: &SymMatrix) -> Result<DMatrix<f64>> {
    let d = v.dim();
    let eig = gen_sym_eig(v, &SymMatrix::identity(d))?;
    let max_e = eig.values[0];
    let min_e = *eig.values.last().expect("d >= 1");
    if !(max_e > 0.0) {
        return Err(Error::Singular(
            "V has no positive eigenvalues".into(),
        ));
    }
    let ill = min_e <= 0.0 || max_e / min_e > V_COND_LIMIT;
    let ridge = if ill {
        let r = V_RIDGE_EPS * v.trace() / d as f64;
        log::warn!(
            "V condition number beyond {V_COND_LIMIT:.0e} (eigenvalues [{min_e:.3e}, {max_e:.3e}]); \
             adding ridge {r:.3e}"
        );
        r
    } else {
        0.0
    };
    if min_e + ridge <= 0.0 {
        return Err(Error::Singular(format!(
            "V numerically singular even after regularization \
             (min eigenvalue {min_e:.3e}, ridge {ridge:.3e})"
        )));
    }
    let mut inv = DMatrix::zeros(d, d);
    for i in 0..d {
        let col = eig.vectors.column(i);
        inv += col * col.transpose() / (eig.values[i] + ridge);
    }
    Ok((&inv + inv.transpose()) * 0.5)
}
