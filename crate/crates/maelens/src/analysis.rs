//! Measurement procedures on reconstruction kernels: Jacobian magnitude vs.
//! distance profiles with exponential fits, spatial-entropy histograms, and
//! the patch-boundary emphasis statistic.
//!
//! Column convention throughout: `J[(i, j)]` is the influence of input
//! dimension `i` on output dimension `j`, so an output's input-support
//! distribution is a column. Columns are normalized to unit L1 mass first
//! and then averaged into distance bins.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::layout::{boundary_dims, interior_dims, DistanceMetric, PatchLayout};
use crate::{Error, Result};

/// Floor added before taking logs in the exponential fit.
pub const FIT_LOG_FLOOR: f64 = 1e-12;

/// Ratio cap reported when the interior row mass vanishes.
pub const EMPHASIS_CAP: f64 = 1e12;

/// Mean normalized Jacobian magnitude per spatial distance, with an
/// exponential fit `a * exp(-r / decay)` in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    /// Sorted unique distances observed between input/output pairs.
    pub distances: Vec<f64>,
    /// Mean normalized `|J|` at each distance.
    pub mean_abs: Vec<f64>,
    pub fit_amplitude: f64,
    /// Decay length in the units of the layout metric.
    pub fit_decay: f64,
    pub fit_r2: f64,
    /// Set when effectively all mass sits at distance zero; `fit_decay` is
    /// then the smallest positive float rather than a fitted value.
    pub zero_concentrated: bool,
}

/// Profile of normalized `|J|` against distance, fitted by least squares on
/// `log(mean + FIT_LOG_FLOOR)`.
///
/// Each column is normalized to sum 1 (all-zero columns are skipped), then
/// the normalized weights are pooled into bins of equal distance.
pub fn kernel_profile(
    j: &DMatrix<f64>,
    layout: &PatchLayout,
    metric: DistanceMetric,
) -> Result<KernelProfile> {
    let d = layout.total_dims();
    if j.nrows() != d || j.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian must be {d}x{d} for this layout, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    // Distance values recur exactly (identical arithmetic), so binning by
    // bit pattern is stable.
    let mut bins: std::collections::BTreeMap<u64, (f64, f64, u64)> =
        std::collections::BTreeMap::new();
    let mut used_columns = 0usize;
    for col in 0..d {
        let mass: f64 = (0..d).map(|row| j[(row, col)].abs()).sum();
        if mass == 0.0 {
            continue;
        }
        used_columns += 1;
        for row in 0..d {
            let w = j[(row, col)].abs() / mass;
            let r = metric.distance(layout, row, col)?;
            let entry = bins.entry(r.to_bits()).or_insert((r, 0.0, 0));
            entry.1 += w;
            entry.2 += 1;
        }
    }
    if used_columns == 0 {
        return Err(Error::InvalidParameter(
            "all Jacobian columns are zero".into(),
        ));
    }
    let mut points: Vec<(f64, f64)> = bins
        .into_values()
        .map(|(r, sum, count)| (r, sum / count as f64))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let distances: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mean_abs: Vec<f64> = points.iter().map(|p| p.1).collect();

    let tail_mass: f64 = points.iter().filter(|p| p.0 > 0.0).map(|p| p.1).sum();
    if tail_mass < 1e-9 || points.len() < 2 {
        return Ok(KernelProfile {
            fit_amplitude: mean_abs.first().copied().unwrap_or(0.0),
            fit_decay: f64::MIN_POSITIVE,
            fit_r2: 1.0,
            zero_concentrated: true,
            distances,
            mean_abs,
        });
    }

    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|(r, v)| (*r, (v + FIT_LOG_FLOOR).ln()))
        .collect();
    let (slope, intercept, r2) = linear_fit(&logs);
    let fit_decay = if slope == 0.0 { f64::INFINITY } else { -1.0 / slope };
    Ok(KernelProfile {
        fit_amplitude: intercept.exp(),
        fit_decay,
        fit_r2: r2,
        zero_concentrated: false,
        distances,
        mean_abs,
    })
}

/// Least-squares line through `(x, y)` points: `(slope, intercept, r2)`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return (0.0, mean_y, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    (slope, intercept, r2)
}

/// Shannon entropy (natural log) of the L1-normalized absolute values of one
/// Jacobian column; `0 * log 0 := 0`.
pub fn spatial_entropy(column: &[f64]) -> Result<f64> {
    let mass: f64 = column.iter().map(|v| v.abs()).sum();
    if mass == 0.0 || !mass.is_finite() {
        return Err(Error::InvalidParameter(
            "spatial entropy of a zero (or non-finite) column is undefined".into(),
        ));
    }
    let mut s = 0.0;
    for v in column {
        let q = v.abs() / mass;
        if q > 0.0 {
            s -= q * q.ln();
        }
    }
    Ok(s)
}

/// Histogram of per-output-column spatial entropies over `[0, log d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyHistogram {
    /// `bins + 1` edges spanning `[0, log d]`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// One entropy per output column, in column order.
    pub entropies: Vec<f64>,
}

impl EntropyHistogram {
    pub fn mean_entropy(&self) -> f64 {
        self.entropies.iter().sum::<f64>() / self.entropies.len() as f64
    }
}

/// One spatial entropy per output column of `j`, binned over `[0, log d]`
/// (the top edge is inclusive).
pub fn entropy_histogram(j: &DMatrix<f64>, bins: usize) -> Result<EntropyHistogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let d = j.nrows();
    if d == 0 || j.ncols() == 0 {
        return Err(Error::DimensionMismatch("empty Jacobian".into()));
    }
    let max_s = (d as f64).ln();
    let mut entropies = Vec::with_capacity(j.ncols());
    for col in j.column_iter() {
        let values: Vec<f64> = col.iter().cloned().collect();
        entropies.push(spatial_entropy(&values)?);
    }
    let bin_edges: Vec<f64> = (0..=bins)
        .map(|i| max_s * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0usize; bins];
    for &s in &entropies {
        let idx = if max_s == 0.0 {
            0
        } else {
            (((s / max_s) * bins as f64).floor() as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(EntropyHistogram {
        bin_edges,
        counts,
        entropies,
    })
}

/// Ratio of mean encoder row norms at patch boundaries to the interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEmphasis {
    /// Boundary-to-interior ratio; > 1 means the encoder privileges patch
    /// edges. Capped at [`EMPHASIS_CAP`] when the interior mass vanishes.
    pub ratio: f64,
    pub capped: bool,
}

/// `mean(row L2 of A over boundary dims) / mean(over interior dims)` for a
/// ring layout, with boundary width `width`.
pub fn boundary_emphasis(
    a: &DMatrix<f64>,
    layout: &PatchLayout,
    width: usize,
) -> Result<BoundaryEmphasis> {
    let d = layout.total_dims();
    if a.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "encoder has {} rows but layout covers {d} dims",
            a.nrows()
        )));
    }
    let boundary = boundary_dims(layout, width)?;
    let interior = interior_dims(layout, width)?;
    if boundary.is_empty() || interior.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "patch size {} leaves no interior dims at boundary width {width}",
            layout.patch_size()
        )));
    }
    let mean_norm = |dims: &[usize]| {
        dims.iter().map(|&i| a.row(i).norm()).sum::<f64>() / dims.len() as f64
    };
    let b = mean_norm(&boundary);
    let i = mean_norm(&interior);
    if b == 0.0 && i == 0.0 {
        return Err(Error::InvalidParameter(
            "encoder rows are all zero".into(),
        ));
    }
    if i == 0.0 || b / i > EMPHASIS_CAP {
        return Ok(BoundaryEmphasis {
            ratio: EMPHASIS_CAP,
            capped: true,
        });
    }
    Ok(BoundaryEmphasis {
        ratio: b / i,
        capped: false,
    })
}
