//! Gradient-descent oracles: full-batch descent on the deterministic
//! marginal loss for linear models, stochastic masked training for a small
//! tanh MLP, and Jacobian extraction for both.
//!
//! The MLP is a fixed two-layer-each architecture (`d -> h -> k` encoder,
//! `k -> h -> d` decoder, tanh after the first layer of each): big enough
//! to adapt to per-sample structure, small enough to finite-difference.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::correlation::DataMatrix;
use crate::exec::{derive_rng, map_indexed, standard_normal};
use crate::layout::PatchLayout;
use crate::masking::{sample_mask_with, MaskSample};
use crate::matrix::{blkdiag, SymMatrix};
use crate::solutions::{marginal_loss, LinearModel};
use crate::{Error, Result};

/// Default finite-difference step for MLP Jacobians.
pub const JACOBIAN_FD_STEP: f64 = 1e-4;

/// Gradient-descent hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Standard deviation of the Gaussian weight initialization.
    pub init_scale: f64,
    pub seed: u64,
    /// Loss is recorded every this many steps (plus the first and last).
    pub record_every: usize,
}

impl TrainConfig {
    /// Defaults for the linear full-batch trainer.
    pub fn linear_default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            steps: 20_000,
            init_scale: 0.1,
            seed: 0,
            record_every: 100,
        }
    }

    /// Defaults for the MLP trainer.
    pub fn mlp_default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            steps: 20_000,
            init_scale: 0.1,
            seed: 0,
            record_every: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.init_scale > 0.0) {
            return Err(Error::InvalidParameter(
                "learning rate and init scale must be positive".into(),
            ));
        }
        if self.steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "steps and record_every must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Number of consecutive bad records (loss above 10x the initial) that
/// triggers a divergence error.
const DIVERGENCE_PATIENCE: usize = 50;
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Analytic gradient of [`marginal_loss`] with respect to `(A, B)`:
///
/// `dA = -2(1-m) S B^T + 2(1-m)^2 S A B B^T + 2 m(1-m) blkdiag(S) A B B^T`
/// and the mirrored expression for `dB`.
pub fn marginal_loss_grad(
    sigma: &SymMatrix,
    model: &LinearModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if sigma.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "Sigma is {}x{} but model has d={}",
            sigma.dim(),
            sigma.dim(),
            model.input_dim()
        )));
    }
    let m = model.mask_ratio;
    let bd = blkdiag(sigma, &model.layout)?;
    let a = &model.encoder;
    let b = &model.decoder;
    let bbt = b * b.transpose();
    let s_a = sigma.as_matrix() * a;
    let bd_a = bd.as_matrix() * a;

    let grad_a = sigma.as_matrix() * b.transpose() * (-2.0 * (1.0 - m))
        + &s_a * &bbt * (2.0 * (1.0 - m) * (1.0 - m))
        + &bd_a * &bbt * (2.0 * m * (1.0 - m));
    let grad_b = a.transpose() * sigma.as_matrix() * (-2.0 * (1.0 - m))
        + s_a.transpose() * a * b * (2.0 * (1.0 - m) * (1.0 - m))
        + bd_a.transpose() * a * b * (2.0 * m * (1.0 - m));
    Ok((grad_a, grad_b))
}

/// Full-batch gradient descent on the marginal loss.
///
/// Returns the trained model and the recorded `(step, loss)` trace. Errors
/// with the trace attached if the loss stays above ten times its initial
/// value for [`DIVERGENCE_PATIENCE`] consecutive records.
pub fn train_linear(
    sigma: &SymMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    k: usize,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<(usize, f64)>)> {
    cfg.validate()?;
    let d = sigma.dim();
    let mut rng = derive_rng(cfg.seed, 0);
    let mut model = LinearModel::new(
        DMatrix::from_fn(d, k, |_, _| standard_normal(&mut rng) * cfg.init_scale),
        DMatrix::from_fn(k, d, |_, _| standard_normal(&mut rng) * cfg.init_scale),
        mask_ratio,
        *layout,
    )?;

    let initial = marginal_loss(sigma, &model)?;
    let mut trace = vec![(0, initial)];
    let mut bad_records = 0;

    for step in 1..=cfg.steps {
        let (ga, gb) = marginal_loss_grad(sigma, &model)?;
        model.encoder -= ga * cfg.learning_rate;
        model.decoder -= gb * cfg.learning_rate;

        if step % cfg.record_every == 0 || step == cfg.steps {
            let loss = marginal_loss(sigma, &model)?;
            trace.push((step, loss));
            if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial {
                bad_records += 1;
                if bad_records >= DIVERGENCE_PATIENCE || !loss.is_finite() {
                    return Err(Error::Diverged {
                        step,
                        loss,
                        initial,
                        trace,
                    });
                }
            } else {
                bad_records = 0;
            }
        }
    }
    Ok((model, trace))
}

/// Two-layer tanh encoder with a mirrored decoder.
///
/// Forward map for a row `x`:
/// `h1 = tanh(x W1 + b1)`, `z = h1 W2 + b2` (latent),
/// `h3 = tanh(z W3 + b3)`, `out = h3 W4 + b4`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w3: DMatrix<f64>,
    pub b3: DVector<f64>,
    pub w4: DMatrix<f64>,
    pub b4: DVector<f64>,
}

impl MlpModel {
    /// Gaussian weights of standard deviation `init_scale`, zero biases.
    pub fn random<R: Rng>(d: usize, hidden: usize, k: usize, init_scale: f64, rng: &mut R) -> Self {
        let mut gauss = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| standard_normal(rng) * init_scale)
        };
        let w1 = gauss(d, hidden);
        let w2 = gauss(hidden, k);
        let w3 = gauss(k, hidden);
        let w4 = gauss(hidden, d);
        MlpModel {
            w1,
            b1: DVector::zeros(hidden),
            w2,
            b2: DVector::zeros(k),
            w3,
            b3: DVector::zeros(hidden),
            w4,
            b4: DVector::zeros(d),
        }
    }

    /// Locality-biased initialization: units are laid out topographically on
    /// the ring and every weight carries a Gaussian envelope
    /// `exp(-r^2 / (2 width^2))` in the ring distance between the positions
    /// of the units it connects.
    ///
    /// The initial reconstruction kernel is then banded (localized), the
    /// counterpart of the patch-local processing a masked-patch architecture
    /// starts from; training has to widen it to serve the masked objective.
    pub fn local_init<R: Rng>(
        d: usize,
        hidden: usize,
        k: usize,
        width: f64,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        // Unit `i` of a layer with `n` units sits at ring position i * d / n.
        let pos = |i: usize, n: usize| i as f64 * d as f64 / n as f64;
        let envelope = |a: f64, b: f64| {
            let diff = (a - b).abs();
            let r = diff.min(d as f64 - diff);
            (-r * r / (2.0 * width * width)).exp()
        };
        let mut banded = |rows: usize, cols: usize| {
            DMatrix::from_fn(rows, cols, |r, c| {
                standard_normal(rng) * init_scale * envelope(pos(r, rows), pos(c, cols))
            })
        };
        let w1 = banded(d, hidden);
        let w2 = banded(hidden, k);
        let w3 = banded(k, hidden);
        let w4 = banded(hidden, d);
        MlpModel {
            w1,
            b1: DVector::zeros(hidden),
            w2,
            b2: DVector::zeros(k),
            w3,
            b3: DVector::zeros(hidden),
            w4,
            b4: DVector::zeros(d),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn latent_dim(&self) -> usize {
        self.w2.ncols()
    }

    /// Forward pass keeping the activations needed for backprop.
    fn forward_full(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let h1 = add_bias(x * &self.w1, &self.b1).map(f64::tanh);
        let z = add_bias(&h1 * &self.w2, &self.b2);
        let h3 = add_bias(&z * &self.w3, &self.b3).map(f64::tanh);
        let out = add_bias(&h3 * &self.w4, &self.b4);
        (h1, h3, out)
    }

    /// Reconstructions for a batch of rows.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_full(x).2
    }

    /// Reconstruction of a single input vector.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let row = DMatrix::from_fn(1, x.len(), |_, c| x[c]);
        let out = self.forward_batch(&row);
        out.row(0).iter().cloned().collect()
    }
}

fn add_bias(mut m: DMatrix<f64>, bias: &DVector<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        row += bias.transpose();
    }
    m
}

/// Result of [`train_mlp`]: final model, recorded losses, and checkpoints at
/// geometrically spaced steps for evolution-over-training analyses.
#[derive(Debug, Clone)]
pub struct MlpTraining {
    pub model: MlpModel,
    pub loss_trace: Vec<(usize, f64)>,
    pub checkpoints: Vec<(usize, MlpModel)>,
}

/// Squared reconstruction error `||X - f(Xm)||^2` of the MLP on a fixed
/// masked batch. Shared by training and the finite-difference gradient
/// checks.
pub fn mlp_batch_loss(model: &MlpModel, masked: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    (target - model.forward_batch(masked)).norm_squared()
}

struct MlpGrads {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
    w3: DMatrix<f64>,
    b3: DVector<f64>,
    w4: DMatrix<f64>,
    b4: DVector<f64>,
}

/// Backpropagation gradients of [`mlp_batch_loss`]; returns the loss too.
fn mlp_loss_and_grads(
    model: &MlpModel,
    masked: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> (f64, MlpGrads) {
    let (h1, h3, out) = model.forward_full(masked);
    let err = &out - target;
    let loss = err.norm_squared();

    let d_out = err * 2.0;
    let w4 = h3.transpose() * &d_out;
    let b4 = d_out.row_sum().transpose();
    let d_h3 = &d_out * model.w4.transpose();
    let d_z3 = d_h3.zip_map(&h3, |g, h| g * (1.0 - h * h));

    // z is recomputed from h1 rather than stored; cheap at desk scale.
    let z = add_bias(&h1 * &model.w2, &model.b2);
    let w3 = z.transpose() * &d_z3;
    let b3 = d_z3.row_sum().transpose();
    let d_z = &d_z3 * model.w3.transpose();

    let w2 = h1.transpose() * &d_z;
    let b2 = d_z.row_sum().transpose();
    let d_h1 = &d_z * model.w2.transpose();
    let d_z1 = d_h1.zip_map(&h1, |g, h| g * (1.0 - h * h));

    let w1 = masked.transpose() * &d_z1;
    let b1 = d_z1.row_sum().transpose();

    (
        loss,
        MlpGrads {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            w4,
            b4,
        },
    )
}

/// Backpropagation gradients flattened in the canonical parameter order
/// (w1, b1, w2, b2, w3, b3, w4, b4); exposed for gradient-check oracles.
pub fn mlp_grad_flat(model: &MlpModel, masked: &DMatrix<f64>, target: &DMatrix<f64>) -> Vec<f64> {
    let (_, g) = mlp_loss_and_grads(model, masked, target);
    let mut flat = Vec::new();
    for m in [&g.w1, &g.w2, &g.w3, &g.w4] {
        flat.extend(m.iter());
    }
    for b in [&g.b1, &g.b2, &g.b3, &g.b4] {
        flat.extend(b.iter());
    }
    flat
}

/// Stochastic masked training of the MLP: every step draws one fresh
/// Bernoulli patch mask per sample row (stream `(seed, step)`), then takes a
/// full-batch gradient step on `||X - f(R o X)||^2`.
pub fn train_mlp(
    x: &DataMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    k: usize,
    hidden: usize,
    cfg: &TrainConfig,
) -> Result<MlpTraining> {
    if hidden < k {
        return Err(Error::InvalidParameter(format!(
            "hidden width {hidden} must be >= latent size {k}"
        )));
    }
    let mut init_rng = derive_rng(cfg.seed, 0);
    let model = MlpModel::random(x.d(), hidden, k, cfg.init_scale, &mut init_rng);
    train_mlp_from(model, x, mask_ratio, layout, cfg)
}

/// [`train_mlp`] starting from a caller-supplied model (custom
/// initialization or checkpoint resume).
pub fn train_mlp_from(
    mut model: MlpModel,
    x: &DataMatrix,
    mask_ratio: f64,
    layout: &PatchLayout,
    cfg: &TrainConfig,
) -> Result<MlpTraining> {
    cfg.validate()?;
    if layout.total_dims() != x.d() {
        return Err(Error::DimensionMismatch(
            "layout does not cover the data dimensions".into(),
        ));
    }
    if model.input_dim() != x.d() {
        return Err(Error::DimensionMismatch(format!(
            "model expects d={} but data has d={}",
            model.input_dim(),
            x.d()
        )));
    }
    let (n, d) = (x.n(), x.d());

    let checkpoint_steps = geometric_steps(cfg.steps);
    let mut checkpoints = Vec::with_capacity(checkpoint_steps.len());
    let mut trace = Vec::new();
    let mut initial = f64::NAN;
    let mut bad_records = 0;
    let lr = cfg.learning_rate;

    for step in 1..=cfg.steps {
        let mut rng = derive_rng(cfg.seed, step as u64);
        let mut masked = x.values().clone();
        for r in 0..n {
            let mask = sample_mask_with(layout, mask_ratio, &mut rng)?;
            for c in 0..d {
                if !mask.is_visible(c) {
                    masked[(r, c)] = 0.0;
                }
            }
        }
        let (loss, g) = mlp_loss_and_grads(&model, &masked, x.values());
        model.w1 -= g.w1 * lr;
        model.b1 -= g.b1 * lr;
        model.w2 -= g.w2 * lr;
        model.b2 -= g.b2 * lr;
        model.w3 -= g.w3 * lr;
        model.b3 -= g.b3 * lr;
        model.w4 -= g.w4 * lr;
        model.b4 -= g.b4 * lr;

        if step == 1 {
            initial = loss;
        }
        if step == 1 || step % cfg.record_every == 0 || step == cfg.steps {
            trace.push((step, loss));
            if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial {
                bad_records += 1;
                if bad_records >= DIVERGENCE_PATIENCE || !loss.is_finite() {
                    return Err(Error::Diverged {
                        step,
                        loss,
                        initial,
                        trace,
                    });
                }
            } else {
                bad_records = 0;
            }
        }
        if checkpoint_steps.contains(&step) {
            checkpoints.push((step, model.clone()));
        }
    }

    Ok(MlpTraining {
        model,
        loss_trace: trace,
        checkpoints,
    })
}

/// Steps 1, 2, 4, 8, ... plus the final step.
fn geometric_steps(steps: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut s = 1;
    while s < steps {
        out.push(s);
        s *= 2;
    }
    out.push(steps);
    out
}

/// Jacobian of a linear model: exactly `A B`, independent of the input.
/// Entry `(i, j)` is the influence of input `i` on output `j`.
pub fn jacobian_linear(model: &LinearModel) -> DMatrix<f64> {
    model.reconstruction_kernel()
}

/// Central finite-difference Jacobian of the MLP at the masked input
/// `mask o x`, with step `step` (use [`JACOBIAN_FD_STEP`] by default).
pub fn jacobian_mlp(
    model: &MlpModel,
    x: &[f64],
    mask: &MaskSample,
    step: f64,
) -> Result<DMatrix<f64>> {
    let d = model.input_dim();
    if x.len() != d || mask.layout.total_dims() != d {
        return Err(Error::DimensionMismatch(format!(
            "input/mask must have {d} dims, got {} and {}",
            x.len(),
            mask.layout.total_dims()
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(
            "finite-difference step must be positive".into(),
        ));
    }
    let base = mask.apply(x);
    let rows: Vec<Vec<f64>> = map_indexed(d, |i| {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += step;
        minus[i] -= step;
        let fp = model.forward(&plus);
        let fm = model.forward(&minus);
        fp.iter()
            .zip(&fm)
            .map(|(p, m)| (p - m) / (2.0 * step))
            .collect()
    });
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Fresh Bernoulli masks applied to every row of `x` (helper for tests and
/// the CLI; stream `(seed, 0)`).
pub fn mask_rows(
    x: &DataMatrix,
    layout: &PatchLayout,
    mask_ratio: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = derive_rng(seed, 0);
    let mut masked = x.values().clone();
    for r in 0..x.n() {
        let mask = sample_mask_with(layout, mask_ratio, &mut rng)?;
        for c in 0..x.d() {
            if !mask.is_visible(c) {
                masked[(r, c)] = 0.0;
            }
        }
    }
    Ok(masked)
}
