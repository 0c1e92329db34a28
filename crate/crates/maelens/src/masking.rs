//! Patch-level Bernoulli masks and the Monte-Carlo loss oracle.
//!
//! Masks follow the convention of the marginal objective: each patch is
//! zeroed independently with probability `m`, bit 1 means visible (the mask
//! multiplies the input), and the reconstruction target is the full input.
//! An exact-fraction sampler is provided for exploration only; it carries no
//! closed-form guarantee.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::DataMatrix;
use crate::exec::{derive_rng, map_indexed, mean_and_stderr};
use crate::layout::PatchLayout;
use crate::solutions::LinearModel;
use crate::{Error, Result};

/// One sampled mask over the dimensions of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSample {
    /// Per-dimension visibility bits; constant within each patch.
    bits: Vec<bool>,
    pub layout: PatchLayout,
    /// Masking ratio the sample was drawn with.
    pub mask_ratio: f64,
}

impl MaskSample {
    /// Visibility bit of dimension `i` (`true` = visible).
    pub fn is_visible(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Mask with every dimension visible (used when probing trained models).
    pub fn all_visible(layout: PatchLayout) -> Self {
        MaskSample {
            bits: vec![true; layout.total_dims()],
            layout,
            mask_ratio: 0.0,
        }
    }

    /// Element-wise product of the mask with a row vector.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.bits)
            .map(|(v, b)| if *b { *v } else { 0.0 })
            .collect()
    }
}

/// Draw one Bernoulli patch mask: each patch is masked with probability `m`,
/// deterministically in `seed`.
pub fn sample_mask(layout: &PatchLayout, m: f64, seed: u64) -> Result<MaskSample> {
    let mut rng = derive_rng(seed, 0);
    sample_mask_with(layout, m, &mut rng)
}

/// [`sample_mask`] drawing from a caller-supplied RNG stream.
pub fn sample_mask_with<R: Rng>(layout: &PatchLayout, m: f64, rng: &mut R) -> Result<MaskSample> {
    check_ratio(m)?;
    let patch_visible: Vec<bool> = (0..layout.num_patches())
        .map(|_| rng.random::<f64>() >= m)
        .collect();
    expand(layout, m, &patch_visible)
}

/// Exploration-only sampler that masks exactly `round(m * num_patches)`
/// patches, chosen uniformly without replacement.
///
/// Production masked autoencoders mask an exact fraction; the closed-form
/// marginal loss assumes Bernoulli masks, so nothing in this crate treats the
/// two as interchangeable.
pub fn exact_fraction_mask(layout: &PatchLayout, m: f64, seed: u64) -> Result<MaskSample> {
    check_ratio(m)?;
    let patches = layout.num_patches();
    let masked = ((m * patches as f64).round() as usize).min(patches);
    let mut rng = derive_rng(seed, 0);
    let mut order: Vec<usize> = (0..patches).collect();
    order.shuffle(&mut rng);
    let mut patch_visible = vec![true; patches];
    for &p in order.iter().take(masked) {
        patch_visible[p] = false;
    }
    expand(layout, m, &patch_visible)
}

fn check_ratio(m: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidParameter(format!(
            "masking ratio must be in [0, 1], got {m}"
        )));
    }
    Ok(())
}

fn expand(layout: &PatchLayout, m: f64, patch_visible: &[bool]) -> Result<MaskSample> {
    let d = layout.total_dims();
    let mut bits = vec![false; d];
    for (i, bit) in bits.iter_mut().enumerate() {
        *bit = patch_visible[layout.patch_of(i)?];
    }
    Ok(MaskSample {
        bits,
        layout: *layout,
        mask_ratio: m,
    })
}

/// Monte-Carlo estimate of the masked reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Mean of the per-trial losses.
    pub mean: f64,
    /// Standard error of that mean (0 when `trials == 1`).
    pub stderr: f64,
    pub trials: usize,
}

/// Estimate `E_R ||X - (R o X) A B||^2` over `trials` independent mask draws,
/// one fresh mask per sample row per trial.
///
/// Trial `t` uses the RNG stream `(seed, t)`, and the final reduction is a
/// pairwise tree in trial order, so the result is bit-identical for any
/// thread count.
pub fn mc_loss(
    x: &DataMatrix,
    model: &LinearModel,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if x.d() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "data has d={} but model expects {}",
            x.d(),
            model.input_dim()
        )));
    }
    if model.layout.total_dims() != x.d() {
        return Err(Error::DimensionMismatch(
            "model layout does not cover the data dimensions".into(),
        ));
    }
    let ab = model.reconstruction_kernel();
    let m = model.mask_ratio;
    let layout = model.layout;
    let (n, d) = (x.n(), x.d());

    let per_trial: Vec<f64> = map_indexed(trials, |t| {
        let mut rng = derive_rng(seed, t as u64);
        let mut masked = x.values().clone();
        for r in 0..n {
            let mask = sample_mask_with(&layout, m, &mut rng).expect("ratio validated");
            for c in 0..d {
                if !mask.is_visible(c) {
                    masked[(r, c)] = 0.0;
                }
            }
        }
        (x.values() - masked * &ab).norm_squared()
    });

    let (mean, stderr) = mean_and_stderr(&per_trial);
    Ok(McEstimate {
        mean,
        stderr,
        trials,
    })
}

/// Empirical first and second mask moments against their closed-form values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// Max deviation of `E[R_i]` from `1 - m`.
    pub first_moment_max_dev: f64,
    /// Max deviation of `E[R_i R_j]` from `1 - m` over same-patch pairs.
    pub same_patch_max_dev: f64,
    /// Max deviation of `E[R_i R_j]` from `(1 - m)^2` over cross-patch pairs.
    pub cross_patch_max_dev: f64,
    pub mask_ratio: f64,
    pub trials: usize,
}

/// Estimate mask moments over `trials >= 1000` draws (stream `(seed, t)` per
/// trial, fixed-order chunk reduction).
pub fn mask_moment_check(
    layout: &PatchLayout,
    m: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_ratio(m)?;
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "moment check needs >= 1000 trials, got {trials}"
        )));
    }
    let d = layout.total_dims();
    const CHUNK: usize = 1024;
    let chunks = trials.div_ceil(CHUNK);

    let partials: Vec<(Vec<f64>, DMatrix<f64>)> = map_indexed(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(trials);
        let mut first = vec![0.0; d];
        let mut second = DMatrix::zeros(d, d);
        for t in lo..hi {
            let mut rng = derive_rng(seed, t as u64);
            let mask = sample_mask_with(layout, m, &mut rng).expect("ratio validated");
            for i in 0..d {
                if mask.is_visible(i) {
                    first[i] += 1.0;
                    for j in 0..d {
                        if mask.is_visible(j) {
                            second[(i, j)] += 1.0;
                        }
                    }
                }
            }
        }
        (first, second)
    });

    let mut first = vec![0.0; d];
    let mut second = DMatrix::zeros(d, d);
    for (f, s) in partials {
        for i in 0..d {
            first[i] += f[i];
        }
        second += s;
    }
    let t = trials as f64;
    let visible = 1.0 - m;

    let first_moment_max_dev = first
        .iter()
        .map(|c| (c / t - visible).abs())
        .fold(0.0, f64::max);
    let mut same = 0.0_f64;
    let mut cross = 0.0_f64;
    for i in 0..d {
        let pi = layout.patch_of(i)?;
        for j in 0..d {
            let est = second[(i, j)] / t;
            if layout.patch_of(j)? == pi {
                same = same.max((est - visible).abs());
            } else {
                cross = cross.max((est - visible * visible).abs());
            }
        }
    }
    Ok(MomentReport {
        first_moment_max_dev,
        same_patch_max_dev: same,
        cross_patch_max_dev: cross,
        mask_ratio: m,
        trials,
    })
}
