//! Patch layouts and spatial distance metrics.
//!
//! A layout describes how the `d` input dimensions group into patches that
//! are masked as a unit, and how far apart two dimensions are spatially.
//! Two kinds are supported: a 1-D ring of `d` dimensions split into
//! contiguous runs of `p`, and a 2-D pixel grid tiled by `p x p` squares
//! with all channels of a pixel in that pixel's patch.
//!
//! Grid dimension indexing is pixel-major with interleaved channels:
//! `dim = (row * width + col) * channels + channel`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Grouping of input dimensions into patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatchLayout {
    /// `dims` dimensions on a ring, patches are contiguous runs of `patch`.
    Ring1D { dims: usize, patch: usize },
    /// `height x width` pixels with `channels` values each, tiled by
    /// `patch x patch` squares.
    Grid2D {
        height: usize,
        width: usize,
        channels: usize,
        patch: usize,
    },
}

impl PatchLayout {
    /// Ring layout; `dims` must be a positive multiple of `patch`.
    pub fn ring(dims: usize, patch: usize) -> Result<Self> {
        if dims == 0 || patch == 0 || dims % patch != 0 {
            return Err(Error::InvalidParameter(format!(
                "ring layout requires patch | dims, got dims={dims}, patch={patch}"
            )));
        }
        Ok(PatchLayout::Ring1D { dims, patch })
    }

    /// Grid layout; `patch` must divide both `height` and `width`.
    pub fn grid(height: usize, width: usize, channels: usize, patch: usize) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 || patch == 0 {
            return Err(Error::InvalidParameter(
                "grid layout dimensions must be positive".into(),
            ));
        }
        if height % patch != 0 || width % patch != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid layout requires patch | height and patch | width, \
                 got {height}x{width}, patch={patch}"
            )));
        }
        Ok(PatchLayout::Grid2D {
            height,
            width,
            channels,
            patch,
        })
    }

    /// Total number of input dimensions covered by the layout.
    pub fn total_dims(&self) -> usize {
        match *self {
            PatchLayout::Ring1D { dims, .. } => dims,
            PatchLayout::Grid2D {
                height,
                width,
                channels,
                ..
            } => height * width * channels,
        }
    }

    /// Number of patches.
    pub fn num_patches(&self) -> usize {
        match *self {
            PatchLayout::Ring1D { dims, patch } => dims / patch,
            PatchLayout::Grid2D {
                height,
                width,
                patch,
                ..
            } => (height / patch) * (width / patch),
        }
    }

    /// Patch size parameter `p`.
    pub fn patch_size(&self) -> usize {
        match *self {
            PatchLayout::Ring1D { patch, .. } | PatchLayout::Grid2D { patch, .. } => patch,
        }
    }

    /// Index of the patch containing dimension `dim_index`.
    ///
    /// Dimensions in the same patch map to equal indices; the mapping is
    /// stable across calls.
    pub fn patch_of(&self, dim_index: usize) -> Result<usize> {
        self.check_dim(dim_index)?;
        Ok(match *self {
            PatchLayout::Ring1D { patch, .. } => dim_index / patch,
            PatchLayout::Grid2D {
                width,
                channels,
                patch,
                ..
            } => {
                let pixel = dim_index / channels;
                let row = pixel / width;
                let col = pixel % width;
                (row / patch) * (width / patch) + col / patch
            }
        })
    }

    /// Spatial distance between dimensions `i` and `j` under the layout's
    /// natural metric (circular on rings, Euclidean between pixel centers on
    /// grids; channel-agnostic).
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.default_metric().distance(self, i, j)
    }

    /// The metric naturally paired with this layout.
    pub fn default_metric(&self) -> DistanceMetric {
        match self {
            PatchLayout::Ring1D { .. } => DistanceMetric::RingCircular,
            PatchLayout::Grid2D { .. } => DistanceMetric::GridEuclidean,
        }
    }

    fn check_dim(&self, dim_index: usize) -> Result<()> {
        let d = self.total_dims();
        if dim_index >= d {
            return Err(Error::IndexOutOfRange(format!(
                "dimension {dim_index} out of range for layout with {d} dims"
            )));
        }
        Ok(())
    }
}

/// How spatial distance between two input dimensions is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    /// `r = min(|i-j|, d - |i-j|)` on a ring of `d` dimensions.
    RingCircular,
    /// Euclidean distance between pixel centers; all channels of a pixel are
    /// at distance zero from one another.
    GridEuclidean,
}

impl DistanceMetric {
    pub fn distance(&self, layout: &PatchLayout, i: usize, j: usize) -> Result<f64> {
        layout.check_dim(i)?;
        layout.check_dim(j)?;
        match (self, layout) {
            (DistanceMetric::RingCircular, PatchLayout::Ring1D { dims, .. }) => {
                let diff = i.abs_diff(j);
                Ok(diff.min(dims - diff) as f64)
            }
            (
                DistanceMetric::GridEuclidean,
                PatchLayout::Grid2D {
                    width, channels, ..
                },
            ) => {
                let (pi, pj) = (i / channels, j / channels);
                let (ri, ci) = (pi / width, pi % width);
                let (rj, cj) = (pj / width, pj % width);
                let dr = ri.abs_diff(rj) as f64;
                let dc = ci.abs_diff(cj) as f64;
                Ok(dr.hypot(dc))
            }
            _ => Err(Error::UnsupportedLayout(format!(
                "metric {self:?} does not apply to {layout:?}"
            ))),
        }
    }
}

/// Dimensions within ring-distance `width` of a different patch: the first
/// `width` and last `width` dims of every patch.
///
/// Only meaningful for ring layouts with more than one patch.
pub fn boundary_dims(layout: &PatchLayout, width: usize) -> Result<Vec<usize>> {
    let PatchLayout::Ring1D { dims, patch } = *layout else {
        return Err(Error::UnsupportedLayout(
            "boundary_dims is defined for ring layouts only".into(),
        ));
    };
    if width == 0 {
        return Err(Error::InvalidParameter("boundary width must be >= 1".into()));
    }
    if patch == dims {
        // Single patch: no dimension has a neighbor in a different patch.
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for dim in 0..dims {
        let offset = dim % patch;
        // Ring distance to the nearest dim of the previous / next patch.
        let to_other = (offset + 1).min(patch - offset);
        if to_other <= width {
            out.push(dim);
        }
    }
    Ok(out)
}

/// Complement of [`boundary_dims`] within the layout.
pub fn interior_dims(layout: &PatchLayout, width: usize) -> Result<Vec<usize>> {
    let boundary = boundary_dims(layout, width)?;
    let mut is_boundary = vec![false; layout.total_dims()];
    for &b in &boundary {
        is_boundary[b] = true;
    }
    Ok((0..layout.total_dims()).filter(|&d| !is_boundary[d]).collect())
}
