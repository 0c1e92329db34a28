//! Argument structures and the small parsers for layouts and matrix
//! sources.

use clap::{Args, Subcommand, ValueEnum};
use maelens::correlation::{ising_correlation, IsingSpec};
use maelens::layout::PatchLayout;
use maelens::matrix::SymMatrix;

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataModel {
    Ising,
    Gaussian,
}

#[derive(Args)]
pub struct GenDataArgs {
    /// ising needs --d and --J; gaussian needs --cov-file.
    #[arg(long, value_enum)]
    pub model: DataModel,
    /// Ring length for the Ising model.
    #[arg(long)]
    pub d: Option<usize>,
    /// Ising coupling constant.
    #[arg(long = "J", short = 'J')]
    pub coupling: Option<f64>,
    /// Covariance matrix CSV for the Gaussian model.
    #[arg(long)]
    pub cov_file: Option<String>,
    /// Number of sample rows.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path; a `<out>.manifest.json` sidecar is written too.
    #[arg(long)]
    pub out: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveKind {
    Mae,
    Ae,
    Dae,
}

#[derive(Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub sigma: SigmaSource,
    /// Masking ratio (mae only; must stay 0 for ae and dae).
    #[arg(long, default_value_t = 0.0)]
    pub m: f64,
    /// Patch size of the ring layout.
    #[arg(long)]
    pub p: usize,
    /// Latent dimension.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum)]
    pub kind: SolveKind,
    /// Noise variance (dae only).
    #[arg(long)]
    pub noise_var: Option<f64>,
    /// Sample-count factor for the dae ridge `n * noise_var`.
    #[arg(long, default_value_t = 1)]
    pub n_scale: usize,
    /// Prefix for `.A.csv`, `.B.csv`, `.solution.json`, `.manifest.json`.
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub sigma: SigmaSource,
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub k: usize,
    /// Gaussian sample rows drawn from the Sigma source.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Monte-Carlo mask draws (needs >= 2 for the z-test).
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

/// Exactly one second-moment source.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct SigmaSource {
    /// Symmetric matrix CSV.
    #[arg(long)]
    pub sigma_file: Option<String>,
    /// Analytic Ising correlation, written as `d,J` (e.g. `32,2.0`).
    #[arg(long)]
    pub ising: Option<String>,
}

impl SigmaSource {
    pub fn load(&self) -> Result<(SymMatrix, String), CliError> {
        match (&self.sigma_file, &self.ising) {
            (Some(path), None) => {
                let m = maelens::io::read_matrix_csv(path)?;
                let sym = SymMatrix::new(m).map_err(|e| {
                    CliError::runtime(format!("{path} is not a symmetric matrix: {e}"))
                })?;
                Ok((sym, format!("file:{path}")))
            }
            (None, Some(spec)) => {
                let (d, coupling) = parse_ising(spec)?;
                let spec = IsingSpec::new(d, coupling)
                    .map_err(|e| CliError::usage(e.to_string()))?;
                Ok((ising_correlation(&spec), format!("ising:{d},{coupling}")))
            }
            _ => Err(CliError::usage(
                "exactly one of --sigma-file and --ising is required",
            )),
        }
    }
}

fn parse_ising(spec: &str) -> Result<(usize, f64), CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::usage(format!(
            "--ising expects `d,J`, got {spec:?}"
        )));
    }
    let d = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad ring length in --ising {spec:?}")))?;
    let coupling = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad coupling in --ising {spec:?}")))?;
    Ok((d, coupling))
}

/// Layout argument: `ring:d,p` or `grid:h,w,c,p`.
pub fn parse_layout(spec: &str) -> Result<PatchLayout, CliError> {
    let usage = || {
        CliError::usage(format!(
            "--layout expects `ring:d,p` or `grid:h,w,c,p`, got {spec:?}"
        ))
    };
    let (kind, rest) = spec.split_once(':').ok_or_else(usage)?;
    let nums: Vec<usize> = rest
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage())?;
    let layout = match (kind, nums.as_slice()) {
        ("ring", [d, p]) => PatchLayout::ring(*d, *p),
        ("grid", [h, w, c, p]) => PatchLayout::grid(*h, *w, *c, *p),
        _ => return Err(usage()),
    };
    layout.map_err(|e| CliError::usage(e.to_string()))
}

#[derive(Subcommand)]
pub enum AnalyzeCommand {
    /// Jacobian-magnitude profile over distance with an exponential fit.
    Kernel(KernelArgs),
    /// Spatial-entropy histogram of a reconstruction kernel.
    Entropy(EntropyArgs),
    /// Boundary-to-interior encoder row-norm ratio on a ring.
    Boundary(BoundaryArgs),
    /// Closed-form spectrum of a patch mask.
    Spectrum(SpectrumArgs),
    /// Masking-ratio x spatial-scale Gabor readout sweep.
    Gabor(GaborArgs),
}

#[derive(Args)]
pub struct KernelArgs {
    /// Reconstruction kernel CSV (d x d).
    #[arg(long, conflicts_with_all = ["a_file", "b_file"])]
    pub matrix: Option<String>,
    /// Encoder CSV; combined with --b-file to form the kernel A*B.
    #[arg(long, requires = "b_file")]
    pub a_file: Option<String>,
    /// Decoder CSV.
    #[arg(long, requires = "a_file")]
    pub b_file: Option<String>,
    /// `ring:d,p` or `grid:h,w,c,p`.
    #[arg(long)]
    pub layout: String,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args)]
pub struct EntropyArgs {
    /// Reconstruction kernel CSV (d x d).
    #[arg(long)]
    pub matrix: String,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args)]
pub struct BoundaryArgs {
    /// Encoder CSV (d x k).
    #[arg(long)]
    pub a_file: String,
    /// Must be a ring layout.
    #[arg(long)]
    pub layout: String,
    /// Boundary width in ring distance.
    #[arg(long, default_value_t = 1)]
    pub width: usize,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args)]
pub struct SpectrumArgs {
    /// Signal length.
    #[arg(long = "D", visible_alias = "len")]
    pub len: usize,
    /// Pulse width (patch size).
    #[arg(long)]
    pub p: usize,
    /// Comma-separated pulse start indices.
    #[arg(long)]
    pub starts: String,
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args)]
pub struct GaborArgs {
    /// Image data CSV (rows are images).
    #[arg(long)]
    pub data: String,
    /// Grid layout of the images, `grid:h,w,c,p`; its p is the sweep's
    /// patch size.
    #[arg(long)]
    pub layout: String,
    #[arg(long)]
    pub k: usize,
    /// Comma-separated Gabor scales.
    #[arg(long)]
    pub sigmas: String,
    /// Comma-separated Gabor frequencies.
    #[arg(long)]
    pub freqs: String,
    /// Comma-separated masking ratios.
    #[arg(long)]
    pub ms: String,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out_prefix: String,
}

pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| CliError::usage(format!("bad {what} list entry {s:?}")))
        })
        .collect()
}
