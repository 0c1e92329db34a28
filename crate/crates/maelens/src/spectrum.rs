//! Frequency-domain view of patch masks: direct DFTs, the closed-form
//! Dirichlet magnitude of a rectangular pulse, and the full mask spectrum
//! `|M[k]| = |sin(pi p k / D) / sin(pi k / D)| * |sum_i e^(-j 2 pi k a_i / D)|`.
//!
//! Pulses are placed circularly so the DFT shift theorem holds exactly and
//! the closed form is an identity against the transform of the explicit
//! mask.
//!
//! Only 1-D spectra are provided. A 2-D mask built from square patches is
//! separable (`m2[r, c] = m_rows[r] * m_cols[c]`), so its 2-D spectrum is
//! the outer product of the two 1-D spectra from [`mask_spectrum`]; no
//! dedicated 2-D operation is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::map_indexed;
use crate::{Error, Result};

/// Unnormalized forward DFT of a real signal,
/// `M[k] = sum_n m[n] e^(-j 2 pi k n / D)`. Direct `O(D^2)` evaluation.
pub fn dft(signal: &[f64]) -> Vec<Complex64> {
    let complex: Vec<Complex64> = signal.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    dft_complex(&complex)
}

/// Unnormalized forward DFT of a complex signal.
pub fn dft_complex(signal: &[Complex64]) -> Vec<Complex64> {
    let d = signal.len();
    map_indexed(d, |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, v) in signal.iter().enumerate() {
            let angle = -std::f64::consts::TAU * (k as f64) * (n as f64) / d as f64;
            acc += v * Complex64::from_polar(1.0, angle);
        }
        acc
    })
}

/// Inverse DFT with the `1/D` normalization,
/// `m[n] = (1/D) sum_k M[k] e^(+j 2 pi k n / D)`.
pub fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let d = spectrum.len();
    map_indexed(d, |n| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in spectrum.iter().enumerate() {
            let angle = std::f64::consts::TAU * (k as f64) * (n as f64) / d as f64;
            acc += v * Complex64::from_polar(1.0, angle);
        }
        acc / d as f64
    })
}

/// Magnitude of the DFT of a length-`p` rectangular pulse in a length-`d`
/// signal: `|sin(pi p k / d) / sin(pi k / d)|`, with the limit value `p` at
/// `k = 0`.
pub fn rect_magnitude(p: usize, d: usize, k: usize) -> f64 {
    dirichlet(p, d, k).abs()
}

/// Signed Dirichlet kernel `sin(pi p k / d) / sin(pi k / d)`.
fn dirichlet(p: usize, d: usize, k: usize) -> f64 {
    assert!(p >= 1 && p <= d, "need 1 <= p <= D");
    assert!(k < d, "need 0 <= k < D");
    if k == 0 {
        return p as f64;
    }
    let x = std::f64::consts::PI * k as f64 / d as f64;
    (x * p as f64).sin() / x.sin()
}

/// Magnitudes (and phases) of a mask spectrum per frequency index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    /// Signal length `D`; `magnitude[k]` corresponds to frequency index `k`.
    pub len: usize,
    pub magnitude: Vec<f64>,
    pub phase: Option<Vec<f64>>,
    /// Pulses overlapped, so the summed mask is not 0/1-valued.
    pub overlapping: bool,
}

impl SpectrumTable {
    /// Table from an explicit complex spectrum.
    pub fn from_complex(spectrum: &[Complex64]) -> Self {
        SpectrumTable {
            len: spectrum.len(),
            magnitude: spectrum.iter().map(|c| c.norm()).collect(),
            phase: Some(spectrum.iter().map(|c| c.arg()).collect()),
            overlapping: false,
        }
    }
}

/// Closed-form spectrum of a sum of length-`p` pulses starting at `starts`
/// (circular placement): `M[k] = R[k] * sum_i e^(-j 2 pi k a_i / D)` with
/// `R[k] = e^(-j pi k (p-1)/D) sin(pi p k/D)/sin(pi k/D)`.
///
/// Overlapping pulses are flagged, not rejected; by linearity the closed
/// form still matches the DFT of the summed (multi-valued) mask.
pub fn mask_spectrum(starts: &[usize], p: usize, d: usize) -> Result<SpectrumTable> {
    validate_pulses(starts, p, d)?;
    let coverage = coverage_counts(starts, p, d);
    let overlapping = coverage.iter().any(|c| *c > 1);

    let spectrum: Vec<Complex64> = map_indexed(d, |k| {
        let rect = dirichlet(p, d, k);
        let rect_phase =
            Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 * (p as f64 - 1.0)
                / d as f64);
        let shifts: Complex64 = starts
            .iter()
            .map(|a| {
                Complex64::from_polar(
                    1.0,
                    -std::f64::consts::TAU * k as f64 * (*a as f64) / d as f64,
                )
            })
            .sum();
        rect_phase * rect * shifts
    });

    Ok(SpectrumTable {
        len: d,
        magnitude: spectrum.iter().map(|c| c.norm()).collect(),
        phase: Some(spectrum.iter().map(|c| c.arg()).collect()),
        overlapping,
    })
}

/// Explicit summed mask `m[n] = sum_i r[n - a_i]` with circular wrap; entries
/// count how many pulses cover each position.
pub fn build_mask(starts: &[usize], p: usize, d: usize) -> Result<Vec<f64>> {
    validate_pulses(starts, p, d)?;
    Ok(coverage_counts(starts, p, d)
        .into_iter()
        .map(|c| c as f64)
        .collect())
}

fn validate_pulses(starts: &[usize], p: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("signal length must be >= 1".into()));
    }
    if p == 0 || p > d {
        return Err(Error::InvalidParameter(format!(
            "pulse width must satisfy 1 <= p <= D, got p={p}, D={d}"
        )));
    }
    if let Some(bad) = starts.iter().find(|a| **a >= d) {
        return Err(Error::IndexOutOfRange(format!(
            "pulse start {bad} outside [0, {d})"
        )));
    }
    Ok(())
}

fn coverage_counts(starts: &[usize], p: usize, d: usize) -> Vec<u32> {
    let mut coverage = vec![0u32; d];
    for &a in starts {
        for offset in 0..p {
            coverage[(a + offset) % d] += 1;
        }
    }
    coverage
}
