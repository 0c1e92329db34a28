//! Dense symmetric linear algebra: block-diagonal extraction, PSD
//! factorization, and the generalized symmetric eigenvalue solver.
//!
//! The generalized problem `C v = lambda D v` is solved by reduction: factor
//! `D = L L^T`, run a standard symmetric eigendecomposition on
//! `L^-1 C L^-T`, and map the eigenvectors back through `L^-T`. The returned
//! vectors are `D`-orthonormal and carry a deterministic sign convention so
//! downstream results are reproducible.

use nalgebra::{DMatrix, DVector};

use crate::layout::PatchLayout;
use crate::{Error, Result};

/// Absolute tolerance for the symmetry check at construction.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative bound on negative eigenvalues accepted (and clipped) by
/// [`sym_factor`].
pub const PSD_CLIP_REL: f64 = 1e-10;

/// Relative eigenvalue-tie tolerance for the deterministic index tie-break.
pub const EIG_TIE_REL: f64 = 1e-10;

/// Dense symmetric matrix, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Wrap a square matrix, requiring symmetry within [`SYMMETRY_TOL`]
    /// absolute.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square with dim >= 1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let mut max_dev: f64 = 0.0;
        for i in 0..data.nrows() {
            for j in (i + 1)..data.ncols() {
                let dev = (data[(i, j)] - data[(j, i)]).abs();
                if !(dev <= max_dev) {
                    max_dev = dev;
                }
            }
        }
        if !(max_dev <= SYMMETRY_TOL) {
            return Err(Error::NotSymmetric {
                max_dev,
                tol: SYMMETRY_TOL,
            });
        }
        Ok(SymMatrix { data })
    }

    /// Symmetrize `(M + M^T) / 2` and wrap. Use for products that are
    /// symmetric analytically but not to the last bit.
    pub fn symmetrize(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cannot symmetrize a {}x{} matrix",
                data.nrows(),
                data.ncols()
            )));
        }
        let sym = (&data + data.transpose()) * 0.5;
        Ok(SymMatrix { data: sym })
    }

    /// Build from an entry function; `f` is evaluated on `i <= j` and
    /// mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("dim must be >= 1".into()));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(SymMatrix { data: m })
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    /// Largest eigenvalue magnitude (spectral norm for symmetric matrices),
    /// computed from a full eigendecomposition.
    pub fn spectral_norm(&self) -> f64 {
        symmetric_eigenvalues(&self.data)
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// Eigenvalues sorted descending with column `i` of `vectors` paired to
/// `values[i]`.
#[derive(Debug, Clone)]
pub struct EigPair {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Zero every entry of `m` whose row and column fall in different patches.
///
/// The result keeps the diagonal blocks of the patch partition and is
/// symmetric whenever the input is.
pub fn blkdiag(m: &SymMatrix, layout: &PatchLayout) -> Result<SymMatrix> {
    let d = m.dim();
    if layout.total_dims() != d {
        return Err(Error::DimensionMismatch(format!(
            "matrix dim {d} does not match layout dims {}",
            layout.total_dims()
        )));
    }
    let patches: Vec<usize> = (0..d).map(|i| layout.patch_of(i).expect("checked")).collect();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if patches[i] == patches[j] {
                out[(i, j)] = m.as_matrix()[(i, j)];
            }
        }
    }
    Ok(SymMatrix { data: out })
}

/// Factor a PSD matrix as `S = G^T G` via eigendecomposition,
/// `G = sqrt(Lambda) Q^T`.
///
/// Eigenvalues in `[-PSD_CLIP_REL * ||S||, 0)` are clipped to zero; anything
/// more negative is an error.
pub fn sym_factor(s: &SymMatrix) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(s.as_matrix())?;
    let norm = eig.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let bound = PSD_CLIP_REL * norm;
    let mut sqrt_vals = DVector::zeros(s.dim());
    for (i, &v) in eig.0.iter().enumerate() {
        if v < -bound {
            return Err(Error::Indefinite {
                min_eig: v,
                bound,
            });
        }
        sqrt_vals[i] = v.max(0.0).sqrt();
    }
    // G = diag(sqrt(lambda)) Q^T, so G^T G = Q diag(lambda) Q^T = S.
    let mut g = eig.1.transpose();
    for i in 0..s.dim() {
        g.row_mut(i).scale_mut(sqrt_vals[i]);
    }
    Ok(g)
}

/// Solve the generalized symmetric eigenvalue problem `C v = lambda D v`
/// for symmetric `C` and symmetric positive definite `D`.
///
/// Returns the full spectrum, descending. Ties within [`EIG_TIE_REL`]
/// relative are ordered by the index the reduced standard problem assigned
/// them; each vector's first component of magnitude > 1e-9 is made positive.
/// Vectors satisfy `v_i^T D v_j = delta_ij`.
pub fn gen_sym_eig(c: &SymMatrix, d: &SymMatrix) -> Result<EigPair> {
    let n = c.dim();
    if d.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "C is {n}x{n} but D is {}x{}",
            d.dim(),
            d.dim()
        )));
    }

    let identity_d = d.as_matrix() == &DMatrix::<f64>::identity(n, n);
    let (reduced, l_opt) = if identity_d {
        (c.as_matrix().clone(), None)
    } else {
        // Positive-definiteness gate: min eigenvalue must clear
        // 1e-12 * max eigenvalue.
        let d_vals = symmetric_eigenvalues(d.as_matrix());
        let max_e = d_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_e = d_vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_e > 1e-12 * max_e && min_e > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "D has eigenvalue range [{min_e:.3e}, {max_e:.3e}]"
            )));
        }
        let chol = nalgebra::linalg::Cholesky::new(d.as_matrix().clone()).ok_or_else(|| {
            Error::NotPositiveDefinite("Cholesky factorization of D failed".into())
        })?;
        let l = chol.l();
        // M = L^-1 C L^-T, symmetrized against rounding.
        let w = l
            .solve_lower_triangular(c.as_matrix())
            .ok_or_else(|| Error::Singular("triangular solve with L failed".into()))?;
        let m = l
            .solve_lower_triangular(&w.transpose())
            .ok_or_else(|| Error::Singular("triangular solve with L failed".into()))?;
        ((&m + m.transpose()) * 0.5, Some(l))
    };

    let (raw_values, raw_vectors) = symmetric_eigen(&reduced)?;

    // Sort descending; near-ties keep the solver's original index order.
    let order = descending_with_index_ties(&raw_values);

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        values.push(raw_values[idx]);
        vectors.set_column(col, &raw_vectors.column(idx));
    }

    if let Some(l) = l_opt {
        // Map back: v = L^-T y keeps D-orthonormality.
        vectors = l
            .transpose()
            .solve_upper_triangular(&vectors)
            .ok_or_else(|| Error::Singular("triangular solve with L^T failed".into()))?;
    }

    for mut col in vectors.column_iter_mut() {
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-9) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
    }

    Ok(EigPair { values, vectors })
}

/// Standard symmetric eigendecomposition (values unsorted, vectors in
/// columns).
fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or(Error::NonConvergence(0))?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().cloned().collect()
}

/// Indices of `values` sorted descending, with runs of values equal within
/// [`EIG_TIE_REL`] relative reordered by ascending original index.
fn descending_with_index_ties(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let tied = |a: f64, b: f64| (a - b).abs() <= EIG_TIE_REL * a.abs().max(b.abs());
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && tied(values[order[end - 1]], values[order[end]]) {
            end += 1;
        }
        order[start..end].sort_unstable();
        start = end;
    }
    order
}
