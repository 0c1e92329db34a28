//! Property tests for the module invariants that hold over whole input
//! families rather than single examples.

use nalgebra::DMatrix;
use proptest::prelude::*;

use maelens::analysis::spatial_entropy;
use maelens::layout::PatchLayout;
use maelens::masking::sample_mask;
use maelens::matrix::{blkdiag, gen_sym_eig, sym_factor, SymMatrix};
use maelens::spectrum::{build_mask, dft, mask_spectrum};

fn psd_matrix(dim: usize, entries: &[f64]) -> SymMatrix {
    let rows = dim + 2;
    let m = DMatrix::from_fn(rows, dim, |r, c| entries[r * dim + c]);
    SymMatrix::symmetrize(m.transpose() * &m).unwrap()
}

/// Circularly disjoint pulse starts: begin from a random subset of slots
/// spaced `p` apart, then apply a common random offset so starts are not
/// aligned to a grid.
fn disjoint_starts(d: usize, p: usize) -> impl Strategy<Value = Vec<usize>> {
    let slots = d / p;
    (proptest::collection::vec(any::<bool>(), slots), 0..d).prop_map(move |(keep, offset)| {
        let starts: Vec<usize> = (0..slots)
            .filter(|s| keep[*s])
            .map(|s| (s * p + offset) % d)
            .collect();
        if starts.is_empty() {
            vec![offset % d]
        } else {
            starts
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sym_factor_roundtrips_psd(dim in 1usize..7, entries in proptest::collection::vec(-1.0f64..1.0, 9 * 7)) {
        let s = psd_matrix(dim, &entries);
        let g = sym_factor(&s).unwrap();
        let back = g.transpose() * &g;
        let denom = s.as_matrix().norm().max(1e-30);
        prop_assert!((&back - s.as_matrix()).norm() / denom < 1e-10);
    }

    #[test]
    fn gen_sym_eig_residuals_and_orthonormality(
        dim in 2usize..6,
        c_entries in proptest::collection::vec(-1.0f64..1.0, 8 * 6),
        d_entries in proptest::collection::vec(-1.0f64..1.0, 8 * 6),
    ) {
        let c = psd_matrix(dim, &c_entries);
        let d = SymMatrix::new(
            psd_matrix(dim, &d_entries).as_matrix() + DMatrix::identity(dim, dim) * 0.5,
        )
        .unwrap();
        let eig = gen_sym_eig(&c, &d).unwrap();
        let c_norm = c.as_matrix().norm();
        for i in 0..dim {
            let v = eig.vectors.column(i);
            let resid = c.as_matrix() * v - d.as_matrix() * v * eig.values[i];
            prop_assert!(resid.norm() <= 1e-8 * c_norm.max(1e-12));
            for j in 0..dim {
                let dot = (v.transpose() * d.as_matrix() * eig.vectors.column(j))[(0, 0)];
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() <= 1e-8);
            }
        }
        for w in eig.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn blkdiag_idempotent_and_trace_preserving(
        patches in 1usize..5,
        patch in 1usize..4,
        entries in proptest::collection::vec(-1.0f64..1.0, 16 * 16),
    ) {
        let dim = patches * patch;
        let m = SymMatrix::from_fn(dim, |i, j| entries[i * dim + j] + entries[j * dim + i]).unwrap();
        let layout = PatchLayout::ring(dim, patch).unwrap();
        let once = blkdiag(&m, &layout).unwrap();
        let twice = blkdiag(&once, &layout).unwrap();
        prop_assert_eq!(once.as_matrix(), twice.as_matrix());
        prop_assert_eq!(once.trace(), m.trace());
    }

    #[test]
    fn mask_bits_follow_patch_structure(
        patches in 1usize..8,
        patch in 1usize..5,
        m in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let layout = PatchLayout::ring(patches * patch, patch).unwrap();
        let mask = sample_mask(&layout, m, seed).unwrap();
        for i in 0..layout.total_dims() {
            for j in 0..layout.total_dims() {
                if layout.patch_of(i).unwrap() == layout.patch_of(j).unwrap() {
                    prop_assert_eq!(mask.is_visible(i), mask.is_visible(j));
                }
            }
        }
    }

    #[test]
    fn entropy_stays_within_bounds_and_scale_invariant(
        column in proptest::collection::vec(-10.0f64..10.0, 1..40),
        scale in prop_oneof![(-1e6f64..-1e-6), (1e-6f64..1e6)],
    ) {
        prop_assume!(column.iter().any(|v| *v != 0.0));
        let s = spatial_entropy(&column).unwrap();
        let d = column.len() as f64;
        prop_assert!(s >= 0.0 && s <= d.ln() + 1e-12);
        let scaled: Vec<f64> = column.iter().map(|v| v * scale).collect();
        prop_assert!((spatial_entropy(&scaled).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn closed_form_spectrum_matches_dft_for_disjoint_pulses(
        p in 1usize..9,
        seeded in (0usize..64).prop_flat_map(|_| disjoint_starts(64, 8)),
    ) {
        // Slots are spaced 8 apart, so any p <= 8 keeps pulses disjoint.
        let d = 64;
        let table = mask_spectrum(&seeded, p, d).unwrap();
        prop_assert!(!table.overlapping);
        let mask = build_mask(&seeded, p, d).unwrap();
        let spec = dft(&mask);
        for k in 0..d {
            prop_assert!((table.magnitude[k] - spec[k].norm()).abs() < 1e-9);
        }
    }
}
