//! Acceptance suite: one test per criterion, each printing a `criterion NN
//! ...: PASS` line (visible with `--nocapture`) after asserting its stated
//! tolerance. Criteria cover the closed-form identities, the oracle
//! equivalences (Monte Carlo, gradient descent, FFT, finite differences),
//! and the qualitative trends at desk scale.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::time::Instant;

use maelens::analysis::{boundary_emphasis, entropy_histogram, kernel_profile, spatial_entropy};
use maelens::correlation::{
    gaussian_from_cov, grid_exp_correlation, ising_correlation, ising_gibbs_sample, IsingSpec,
};
use maelens::exec::derive_rng;
use maelens::gabor::gabor_sweep;
use maelens::layout::{DistanceMetric, PatchLayout};
use maelens::masking::{mc_loss, MaskSample};
use maelens::matrix::{gen_sym_eig, SymMatrix};
use maelens::solutions::{
    ae_optimum, critical_point, mae_optimum, marginal_loss, LinearModel,
};
use maelens::spectrum::{build_mask, dft, mask_spectrum};
use maelens::trainer::{
    jacobian_mlp, marginal_loss_grad, mlp_batch_loss, mlp_grad_flat, train_linear,
    train_mlp_from, MlpModel, TrainConfig, JACOBIAN_FD_STEP,
};

fn random_psd(d: usize, seed: u64) -> SymMatrix {
    let mut rng = derive_rng(seed, 1);
    let m = DMatrix::from_fn(d + 4, d, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::symmetrize(m.transpose() * &m).unwrap()
}

/// Central finite-difference gradient of the marginal loss over all entries
/// of (A, B), flattened A-first in column-major order.
fn fd_marginal_grad(sigma: &SymMatrix, model: &LinearModel, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let (d, k) = (model.input_dim(), model.latent_dim());
    for c in 0..k {
        for r in 0..d {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.encoder[(r, c)] += h;
            minus.encoder[(r, c)] -= h;
            out.push(
                (marginal_loss(sigma, &plus).unwrap() - marginal_loss(sigma, &minus).unwrap())
                    / (2.0 * h),
            );
        }
    }
    for c in 0..d {
        for r in 0..k {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.decoder[(r, c)] += h;
            minus.decoder[(r, c)] -= h;
            out.push(
                (marginal_loss(sigma, &plus).unwrap() - marginal_loss(sigma, &minus).unwrap())
                    / (2.0 * h),
            );
        }
    }
    out
}

#[test]
fn criterion_01_marginal_loss_monte_carlo_equivalence() {
    let (n, d, p, k) = (200usize, 16usize, 4usize, 4usize);
    let layout = PatchLayout::ring(d, p).unwrap();
    let ms = [0.25, 0.5, 0.75];
    for instance in 0..10u64 {
        let start = Instant::now();
        let m = ms[instance as usize % ms.len()];
        let gen_cov = random_psd(d, 500 + instance);
        let x = gaussian_from_cov(&gen_cov, n, 600 + instance).unwrap();
        let sigma = maelens::correlation::empirical_correlation(&x);
        let sol = mae_optimum(&sigma, m, &layout, k).unwrap();
        let closed = marginal_loss(&sigma, &sol.model).unwrap();
        let est = mc_loss(&x, &sol.model, 100_000, 700 + instance).unwrap();
        let z = (est.mean - closed) / est.stderr;
        let elapsed = start.elapsed();
        assert!(
            z.abs() <= 3.0,
            "instance {instance} (m={m}): z = {z:.3}, mc {} +- {} vs closed {closed}",
            est.mean,
            est.stderr
        );
        assert!(
            elapsed.as_secs() < 60,
            "instance {instance} took {elapsed:?} (limit 60 s)"
        );
    }
    println!("criterion 01 (closed-form vs Monte-Carlo loss, 10 instances, 1e5 trials, 3 sigma): PASS");
}

#[test]
fn criterion_02_stationarity_and_gradient_descent() {
    let spec = IsingSpec::new(32, 2.0).unwrap();
    let sigma = ising_correlation(&spec);
    let layout = PatchLayout::ring(32, 8).unwrap();
    let sol = mae_optimum(&sigma, 0.5, &layout, 6).unwrap();

    let fd = fd_marginal_grad(&sigma, &sol.model, 1e-5);
    let max_fd = fd.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let bound = 1e-6 * sigma.trace();
    assert!(
        max_fd < bound,
        "finite-difference gradient at optimum: max |entry| = {max_fd:.3e} vs bound {bound:.3e}"
    );

    for seed in 0..5 {
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::linear_default()
        };
        let (model, _) = train_linear(&sigma, 0.5, &layout, 6, &cfg).unwrap();
        let loss = marginal_loss(&sigma, &model).unwrap();
        let rel = (loss - sol.loss).abs() / sol.loss;
        assert!(
            rel < 1e-3,
            "seed {seed}: GD loss {loss} vs closed form {} (rel {rel:.2e})",
            sol.loss
        );
    }
    println!("criterion 02 (stationarity < 1e-6*trace; GD within 1e-3 of closed form, 5 seeds): PASS");
}

#[test]
fn criterion_03_pca_recovery_at_zero_masking() {
    for instance in 0..20u64 {
        let mut rng = derive_rng(800 + instance, 0);
        let d = 4 + (instance as usize % 9); // 4..=12
        let k = 1 + (instance as usize % (d - 1));
        // Sigma = Q diag(vals) Q^T with known Q: the rank-k eigenprojector
        // oracle is Q_k Q_k^T with no eigensolver in the loop.
        let q = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))
            .qr()
            .q();
        let vals = DVector::from_fn(d, |i, _| 5.0 * 0.8_f64.powi(i as i32) + 0.1);
        let sigma =
            SymMatrix::symmetrize(&q * DMatrix::from_diagonal(&vals) * q.transpose()).unwrap();

        let layout = PatchLayout::ring(d, d).unwrap();
        let sol = mae_optimum(&sigma, 0.0, &layout, k).unwrap();
        let qk = q.columns(0, k);
        let projector = qk * qk.transpose();
        let gap = (&sol.projection - projector).norm();
        assert!(
            gap <= 1e-8,
            "instance {instance} (d={d}, k={k}): ||AB - P||_F = {gap:.3e}"
        );
    }
    println!("criterion 03 (m=0 projection equals rank-k eigenprojector, 20 instances, 1e-8): PASS");
}

#[test]
fn criterion_04_block_diagonal_sigma_collapses_to_ae() {
    for instance in 0..20u64 {
        let mut rng = derive_rng(900 + instance, 0);
        let blocks = 2 + (instance as usize % 3); // 2..=4 blocks
        let p = 3 + (instance as usize % 2); // block size 3 or 4
        let d = blocks * p;
        let k = 1 + (instance as usize % (d / 2));
        let mut data = DMatrix::zeros(d, d);
        for b in 0..blocks {
            let m = DMatrix::from_fn(p + 3, p, |_, _| rng.random_range(-1.0..1.0));
            let block = m.transpose() * &m;
            for i in 0..p {
                for j in 0..p {
                    data[(b * p + i, b * p + j)] = block[(i, j)];
                }
            }
        }
        let sigma = SymMatrix::symmetrize(data).unwrap();
        let layout = PatchLayout::ring(d, p).unwrap();
        let ae = ae_optimum(&sigma, k).unwrap();
        for m in [0.2, 0.8] {
            let mae = mae_optimum(&sigma, m, &layout, k).unwrap();
            let gap = (&mae.projection - &ae.projection).norm();
            assert!(
                gap <= 1e-8,
                "instance {instance} (d={d}, p={p}, k={k}, m={m}): gap {gap:.3e}"
            );
        }
    }
    println!("criterion 04 (block-diagonal Sigma: MAE equals AE at m=0.2/0.8, 20 instances, 1e-8): PASS");
}

#[test]
fn criterion_05_critical_point_enumeration() {
    let sigma = random_psd(6, 1000);
    let layout = PatchLayout::ring(6, 2).unwrap();
    let m = 0.5;
    let top = critical_point(&sigma, m, &layout, &[0, 1]).unwrap().1;
    let mut count = 0;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let (model, loss) = critical_point(&sigma, m, &layout, &[i, j]).unwrap();
            let direct = marginal_loss(&sigma, &model).unwrap();
            let rel = (loss - direct).abs() / direct.abs().max(1e-12);
            assert!(
                rel <= 1e-8,
                "subset {{{i},{j}}}: formula {loss} vs direct {direct} (rel {rel:.2e})"
            );
            assert!(
                loss >= top - 1e-8 * sigma.trace(),
                "subset {{{i},{j}}} undercuts the top-k optimum"
            );
            count += 1;
        }
    }
    assert_eq!(count, 15);
    println!("criterion 05 (all 15 critical points match marginal loss; top-k is minimal): PASS");
}

#[test]
fn criterion_06_boundary_emphasis() {
    let spec = IsingSpec::new(32, 2.0).unwrap();
    let sigma = ising_correlation(&spec);
    let layout = PatchLayout::ring(32, 8).unwrap();
    let mae = mae_optimum(&sigma, 0.5, &layout, 6).unwrap();
    let ae = ae_optimum(&sigma, 6).unwrap();
    let be_mae = boundary_emphasis(&mae.model.encoder, &layout, 1).unwrap();
    let be_ae = boundary_emphasis(&ae.model.encoder, &layout, 1).unwrap();
    assert!(
        be_mae.ratio > 1.0,
        "MAE boundary emphasis {} not > 1",
        be_mae.ratio
    );
    assert!(
        be_mae.ratio > be_ae.ratio,
        "MAE emphasis {} not above AE emphasis {}",
        be_mae.ratio,
        be_ae.ratio
    );
    println!(
        "criterion 06 (boundary emphasis: MAE {:.3} > AE {:.3} and > 1): PASS",
        be_mae.ratio, be_ae.ratio
    );
}

#[test]
fn criterion_07_kernel_decay_trend() {
    let spec = IsingSpec::new(32, 2.0).unwrap();
    let sigma = ising_correlation(&spec);
    let k = 6;
    let lambda = |m: f64, p: usize| {
        let layout = PatchLayout::ring(32, p).unwrap();
        let sol = mae_optimum(&sigma, m, &layout, k).unwrap();
        let prof = kernel_profile(&sol.projection, &layout, DistanceMetric::RingCircular).unwrap();
        (prof.fit_decay, prof.fit_r2)
    };

    // Baseline comparison: the masked-objective kernel decays slower than
    // the AE kernel at p=8, m=0.8.
    let layout8 = PatchLayout::ring(32, 8).unwrap();
    let mae = mae_optimum(&sigma, 0.8, &layout8, k).unwrap();
    let ae = ae_optimum(&sigma, k).unwrap();
    let l_mae = kernel_profile(&mae.projection, &layout8, DistanceMetric::RingCircular)
        .unwrap()
        .fit_decay;
    let l_ae = kernel_profile(&ae.projection, &layout8, DistanceMetric::RingCircular)
        .unwrap()
        .fit_decay;
    assert!(l_mae > l_ae, "lambda_MAE {l_mae:.2} not above lambda_AE {l_ae:.2}");

    let m_sweep: Vec<(f64, f64)> = [0.1, 0.5, 0.9].iter().map(|&m| lambda(m, 4)).collect();
    let p_sweep: Vec<(f64, f64)> = [2usize, 4, 8].iter().map(|&p| lambda(0.5, p)).collect();
    let non_decreasing = |v: &[(f64, f64)]| v.windows(2).all(|w| w[1].0 >= w[0].0);
    let ok_m = non_decreasing(&m_sweep);
    let ok_p = non_decreasing(&p_sweep);
    if ok_m && ok_p {
        println!("criterion 07 (fitted decay non-decreasing in m and p): PASS");
    } else {
        println!(
            "criterion 07 (fitted decay non-decreasing in m and p): FAIL \
             m-sweep (lambda, r2) = {m_sweep:?}, p-sweep = {p_sweep:?} \
             [full-range log fit is degenerate at this configuration; see fit_r2]"
        );
        panic!(
            "lambda trend violated: m-sweep monotone = {ok_m}, p-sweep monotone = {ok_p} \
             (m-sweep {m_sweep:?}, p-sweep {p_sweep:?})"
        );
    }
}

#[test]
fn criterion_08_mask_spectrum_matches_fft() {
    let d = 64;
    let mut rng = derive_rng(1100, 0);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        // Disjoint circular pulses: random subset of p-aligned slots plus a
        // common unaligned offset.
        let p = rng.random_range(1..=8);
        let slots = d / 8;
        let offset = rng.random_range(0..d);
        let mut starts: Vec<usize> = (0..slots)
            .filter(|_| rng.random::<f64>() < 0.4)
            .map(|s| (s * 8 + offset) % d)
            .collect();
        if starts.is_empty() {
            starts.push(offset);
        }
        let table = mask_spectrum(&starts, p, d).unwrap();
        assert!(!table.overlapping);
        let spec = dft(&build_mask(&starts, p, d).unwrap());
        for k in 0..d {
            worst = worst.max((table.magnitude[k] - spec[k].norm()).abs());
        }
    }
    assert!(worst < 1e-9, "max |closed-form - FFT| = {worst:.3e}");
    println!(
        "criterion 08 (closed-form mask spectrum vs FFT, 100 configurations, max err {worst:.2e} < 1e-9): PASS"
    );
}

#[test]
fn criterion_09_entropy_bounds_and_extremes() {
    let d = 10;
    let one_hot = {
        let mut v = vec![0.0; d];
        v[3] = 2.5;
        v
    };
    assert_eq!(spatial_entropy(&one_hot).unwrap(), 0.0);
    let uniform = vec![0.7; d];
    let max_s = (d as f64).ln();
    assert!((spatial_entropy(&uniform).unwrap() - max_s).abs() <= 1e-12);

    let mut rng = derive_rng(1200, 0);
    for _ in 0..200 {
        let dim = rng.random_range(2..40);
        let col: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        if col.iter().all(|v| *v == 0.0) {
            continue;
        }
        let s = spatial_entropy(&col).unwrap();
        assert!(s >= 0.0 && s <= (dim as f64).ln() + 1e-12);
    }
    let j = DMatrix::from_fn(8, 8, |i, k| if i == k { 1.0 } else { 0.3 });
    let hist = entropy_histogram(&j, 5).unwrap();
    assert_eq!(hist.counts.iter().sum::<usize>(), 8);
    println!("criterion 09 (entropy extremes exact; bounds hold on 200 random columns): PASS");
}

/// Criterion-10 data model: high-pass texture noise (Laplacian-filtered
/// white) plus smooth global patterns spiked just below the noise
/// eigenvalue ceiling, so per-mode variance and cross-patch predictability
/// disagree.
fn spiked_image_cov(h: usize, w: usize) -> SymMatrix {
    let d = h * w;
    let mut lap = DMatrix::zeros(d, d);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let i = (r * w as isize + c) as usize;
            lap[(i, i)] = 4.0;
            for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r + dr, c + dc);
                if nr >= 0 && nr < h as isize && nc >= 0 && nc < w as isize {
                    lap[(i, (nr * w as isize + nc) as usize)] = -1.0;
                }
            }
        }
    }
    let noise = SymMatrix::symmetrize(&lap * lap.transpose()).unwrap();
    let noise_top = gen_sym_eig(&noise, &SymMatrix::identity(d)).unwrap().values[0];
    let smooth_eig = gen_sym_eig(
        &grid_exp_correlation(h, w, 6.0).unwrap(),
        &SymMatrix::identity(d),
    )
    .unwrap();
    let mut cov = noise.into_matrix();
    let spikes = 12;
    for j in 0..spikes {
        let frac = j as f64 / (spikes - 1) as f64;
        let s = noise_top * (0.95 - 0.20 * frac);
        let g = smooth_eig.vectors.column(j);
        cov += g * g.transpose() * s;
    }
    SymMatrix::symmetrize(cov).unwrap()
}

#[test]
fn criterion_10_gabor_task_trend() {
    let (h, w, n, k) = (16usize, 16usize, 800usize, 12usize);
    let cov = spiked_image_cov(h, w);
    let layout = PatchLayout::grid(h, w, 1, 2).unwrap();
    let mut wins = 0;
    let mut report = String::new();
    for seed in 0..3u64 {
        let x = gaussian_from_cov(&cov, n, 1300 + seed)
            .unwrap()
            .with_layout(layout)
            .unwrap();
        let result = gabor_sweep(&x, &[1.0, 6.0], &[0.06], &[0.1, 0.9], 2, k, 1e-6, seed).unwrap();
        let mse = |m: f64, s: f64| {
            result
                .rows
                .iter()
                .find(|r| r.m == m && r.sigma == s)
                .unwrap()
                .test_mse
        };
        let (lo, hi) = (mse(0.1, 6.0), mse(0.9, 6.0));
        wins += (hi < lo) as u32;
        report.push_str(&format!(" seed{seed}: sigma6 m0.1={lo:.1} m0.9={hi:.1};"));
    }
    assert!(
        wins >= 2,
        "MSE(m=0.9) < MSE(m=0.1) at sigma=6 in only {wins}/3 seeds:{report}"
    );
    println!("criterion 10 (Gabor sigma=6: high masking wins {wins}/3 seeds):{report} PASS");
}

#[test]
fn criterion_11_jacobian_entropy_grows_in_training() {
    let d = 64;
    let spec = IsingSpec::new(d, 2.0).unwrap();
    let layout = PatchLayout::ring(d, 2).unwrap();
    let mut wins = 0;
    let mut report = String::new();
    for seed in 0..3u64 {
        let x = ising_gibbs_sample(&spec, 128, 50 + seed).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-4,
            steps: 8_000,
            init_scale: 0.1,
            seed,
            record_every: 2_000,
        };
        let mut rng = derive_rng(seed, 0);
        let init = MlpModel::local_init(d, 64, 16, 2.0, cfg.init_scale, &mut rng);
        let out = train_mlp_from(init, &x, 0.8, &layout, &cfg).unwrap();

        let mean_entropy = |model: &MlpModel| {
            let mut acc = 0.0;
            for r in 0..8 {
                let row: Vec<f64> = x.values().row(r).iter().cloned().collect();
                let mask = MaskSample::all_visible(layout);
                let j = jacobian_mlp(model, &row, &mask, JACOBIAN_FD_STEP).unwrap();
                acc += entropy_histogram(&j, 8).unwrap().mean_entropy();
            }
            acc / 8.0
        };
        let (first_step, first_model) = out.checkpoints.first().unwrap();
        let (last_step, last_model) = out.checkpoints.last().unwrap();
        let (e0, e1) = (mean_entropy(first_model), mean_entropy(last_model));
        wins += (e1 > e0) as u32;
        report.push_str(&format!(
            " seed{seed}: S(step {first_step})={e0:.3} -> S(step {last_step})={e1:.3};"
        ));
    }
    assert!(
        wins >= 2,
        "final-checkpoint entropy above first in only {wins}/3 seeds:{report}"
    );
    println!("criterion 11 (Jacobian entropy rises over training, {wins}/3 seeds):{report} PASS");
}

#[test]
fn criterion_12_gradient_oracles() {
    // Linear: analytic marginal-loss gradient vs central differences.
    let sigma = random_psd(6, 1400);
    let layout = PatchLayout::ring(6, 2).unwrap();
    let mut rng = derive_rng(1401, 0);
    let model = LinearModel::new(
        DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0)),
        DMatrix::from_fn(3, 6, |_, _| rng.random_range(-1.0..1.0)),
        0.4,
        layout,
    )
    .unwrap();
    let (ga, gb) = marginal_loss_grad(&sigma, &model).unwrap();
    let analytic: Vec<f64> = ga.iter().chain(gb.iter()).cloned().collect();
    let fd = fd_marginal_grad(&sigma, &model, 1e-5);
    let rel = l2_diff(&analytic, &fd) / l2(&analytic);
    assert!(rel < 1e-5, "linear gradient relative error {rel:.2e}");

    // MLP: backprop vs central differences on a d=6, h=8, k=2 instance.
    let (d, h, k, n) = (6, 8, 2, 5);
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let masked = DMatrix::from_fn(n, d, |r, c| if (r + c) % 4 == 0 { 0.0 } else { x[(r, c)] });
    let mlp = MlpModel::random(d, h, k, 0.3, &mut rng);
    let back = mlp_grad_flat(&mlp, &masked, &x);
    let fd_mlp = fd_mlp_grad(&mlp, &masked, &x, 1e-5);
    let rel_mlp = l2_diff(&back, &fd_mlp) / l2(&back);
    assert!(rel_mlp < 1e-4, "MLP gradient relative error {rel_mlp:.2e}");

    println!(
        "criterion 12 (gradient oracles: linear rel err {rel:.1e} < 1e-5, MLP rel err {rel_mlp:.1e} < 1e-4): PASS"
    );
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Finite-difference gradient over all MLP parameters in the canonical
/// flattening order of `mlp_grad_flat`.
fn fd_mlp_grad(model: &MlpModel, masked: &DMatrix<f64>, x: &DMatrix<f64>, h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let probe = |get: &dyn Fn(&mut MlpModel) -> &mut f64| {
        let mut plus = model.clone();
        *get(&mut plus) += h;
        let mut minus = model.clone();
        *get(&mut minus) -= h;
        (mlp_batch_loss(&plus, masked, x) - mlp_batch_loss(&minus, masked, x)) / (2.0 * h)
    };
    let dims = |m: &MlpModel, idx: usize| match idx {
        0 => (m.w1.nrows(), m.w1.ncols()),
        1 => (m.w2.nrows(), m.w2.ncols()),
        2 => (m.w3.nrows(), m.w3.ncols()),
        _ => (m.w4.nrows(), m.w4.ncols()),
    };
    for w in 0..4 {
        let (rows, cols) = dims(model, w);
        for c in 0..cols {
            for r in 0..rows {
                out.push(probe(&move |m: &mut MlpModel| match w {
                    0 => &mut m.w1[(r, c)],
                    1 => &mut m.w2[(r, c)],
                    2 => &mut m.w3[(r, c)],
                    _ => &mut m.w4[(r, c)],
                }));
            }
        }
    }
    let blens = [
        model.b1.len(),
        model.b2.len(),
        model.b3.len(),
        model.b4.len(),
    ];
    for (b, len) in blens.into_iter().enumerate() {
        for i in 0..len {
            out.push(probe(&move |m: &mut MlpModel| match b {
                0 => &mut m.b1[i],
                1 => &mut m.b2[i],
                2 => &mut m.b3[i],
                _ => &mut m.b4[i],
            }));
        }
    }
    out
}
