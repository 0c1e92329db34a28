//! Implementations of the four subcommands.

use serde::Serialize;

use maelens::analysis::{boundary_emphasis, entropy_histogram, kernel_profile};
use maelens::correlation::{
    empirical_correlation, gaussian_from_cov, ising_gibbs_sample, DataMatrix, IsingSpec,
};
use maelens::gabor::gabor_sweep;
use maelens::io;
use maelens::layout::PatchLayout;
use maelens::masking::mc_loss;
use maelens::matrix::SymMatrix;
use maelens::solutions::{dae_optimum, mae_optimum, marginal_loss, MaeSolution};
use maelens::spectrum::mask_spectrum;

use crate::args::{
    parse_layout, parse_list, AnalyzeCommand, DataModel, GenDataArgs, SolveArgs, SolveKind,
    ValidateArgs,
};
use crate::manifest::ManifestBuilder;
use crate::CliError;

/// Domain separation between the data-sampling and mask-sampling RNG streams
/// of `validate`, which share one user-facing seed.
const MC_SEED_SALT: u64 = 0x4d41_534b;

pub fn gen_data(args: GenDataArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let mut manifest = ManifestBuilder::new("gen-data");
    manifest.seed(args.seed).param("n", args.n).param("seed", args.seed);

    let data = match args.model {
        DataModel::Ising => {
            if args.cov_file.is_some() {
                return Err(CliError::usage("--cov-file does not apply to --model ising"));
            }
            let (Some(d), Some(coupling)) = (args.d, args.coupling) else {
                return Err(CliError::usage("--model ising requires --d and --J"));
            };
            manifest.param("model", "ising").param("d", d).param("J", coupling);
            let spec =
                IsingSpec::new(d, coupling).map_err(|e| CliError::usage(e.to_string()))?;
            ising_gibbs_sample(&spec, args.n, args.seed)?
        }
        DataModel::Gaussian => {
            if args.d.is_some() || args.coupling.is_some() {
                return Err(CliError::usage(
                    "--d/--J do not apply to --model gaussian (dimension comes from --cov-file)",
                ));
            }
            let Some(cov_file) = &args.cov_file else {
                return Err(CliError::usage("--model gaussian requires --cov-file"));
            };
            manifest.param("model", "gaussian").param("cov_file", cov_file);
            let cov = SymMatrix::new(io::read_matrix_csv(cov_file)?).map_err(|e| {
                CliError::runtime(format!("{cov_file} is not a symmetric matrix: {e}"))
            })?;
            gaussian_from_cov(&cov, args.n, args.seed)?
        }
    };

    io::write_data_csv(&args.out, &data)?;
    manifest.param("out", &args.out).output(&args.out);
    manifest.write(&format!("{}.manifest.json", args.out))?;
    println!("wrote {} ({} x {})", args.out, data.n(), data.d());
    Ok(())
}

/// Solution summary written next to the factor CSVs. The solver kind lives
/// in the manifest, so runs that share a code path share these bytes.
#[derive(Serialize)]
struct SolutionJson {
    d: usize,
    k: usize,
    m: f64,
    p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_scale: Option<usize>,
    sigma_source: String,
    trace_sigma: f64,
    loss: f64,
    eigenvalues: Vec<f64>,
}

pub fn solve(args: SolveArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.m) {
        return Err(CliError::usage("--m must lie in [0, 1]"));
    }
    let (sigma, source) = args.sigma.load()?;
    let d = sigma.dim();
    let layout =
        PatchLayout::ring(d, args.p).map_err(|e| CliError::usage(e.to_string()))?;

    let solution: MaeSolution;
    let mut noise_var = None;
    let mut n_scale = None;
    match args.kind {
        SolveKind::Mae => {
            if args.noise_var.is_some() {
                return Err(CliError::usage("--noise-var applies to --kind dae only"));
            }
            solution = mae_optimum(&sigma, args.m, &layout, args.k)?;
        }
        SolveKind::Ae => {
            if args.m != 0.0 {
                return Err(CliError::usage("--kind ae requires --m 0"));
            }
            if args.noise_var.is_some() {
                return Err(CliError::usage("--noise-var applies to --kind dae only"));
            }
            solution = mae_optimum(&sigma, 0.0, &layout, args.k)?;
        }
        SolveKind::Dae => {
            if args.m != 0.0 {
                return Err(CliError::usage(
                    "--kind dae uses --noise-var, not --m (leave --m at 0)",
                ));
            }
            let Some(var) = args.noise_var else {
                return Err(CliError::usage("--kind dae requires --noise-var"));
            };
            solution = dae_optimum(&sigma, var, args.n_scale, args.k)?;
            noise_var = Some(var);
            n_scale = Some(args.n_scale);
        }
    }

    let prefix = &args.out_prefix;
    let (a_path, b_path) = (format!("{prefix}.A.csv"), format!("{prefix}.B.csv"));
    let json_path = format!("{prefix}.solution.json");
    io::write_matrix_csv(&a_path, &solution.model.encoder)?;
    io::write_matrix_csv(&b_path, &solution.model.decoder)?;
    io::write_json(
        &json_path,
        &SolutionJson {
            d,
            k: args.k,
            m: args.m,
            p: args.p,
            noise_var,
            n_scale,
            sigma_source: source.clone(),
            trace_sigma: sigma.trace(),
            loss: solution.loss,
            eigenvalues: solution.eigenvalues.clone(),
        },
    )?;

    let mut manifest = ManifestBuilder::new("solve");
    manifest
        .param("kind", kind_name(args.kind))
        .param("sigma_source", source)
        .param("m", args.m)
        .param("p", args.p)
        .param("k", args.k)
        .param("out_prefix", prefix);
    if let Some(v) = noise_var {
        manifest.param("noise_var", v).param("n_scale", args.n_scale);
    }
    manifest.output(&a_path).output(&b_path).output(&json_path);
    manifest.write(&format!("{prefix}.manifest.json"))?;
    println!(
        "solved {} (d={d}, k={}): loss {:.6e}",
        kind_name(args.kind),
        args.k,
        solution.loss
    );
    Ok(())
}

fn kind_name(kind: SolveKind) -> &'static str {
    match kind {
        SolveKind::Mae => "mae",
        SolveKind::Ae => "ae",
        SolveKind::Dae => "dae",
    }
}

pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    if args.trials < 2 {
        eprintln!(
            "warning: {} trial(s) cannot support a z-test; need --trials >= 2",
            args.trials
        );
        return Err(CliError::usage("refusing z-test with fewer than 2 trials"));
    }
    if !(0.0..=1.0).contains(&args.m) {
        return Err(CliError::usage("--m must lie in [0, 1]"));
    }
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let (sigma_src, source) = args.sigma.load()?;
    let d = sigma_src.dim();
    let layout =
        PatchLayout::ring(d, args.p).map_err(|e| CliError::usage(e.to_string()))?;

    let x = gaussian_from_cov(&sigma_src, args.n, args.seed)?;
    let sigma = empirical_correlation(&x);
    let solution = mae_optimum(&sigma, args.m, &layout, args.k)?;
    let closed = marginal_loss(&sigma, &solution.model)?;
    let est = mc_loss(&x, &solution.model, args.trials, args.seed ^ MC_SEED_SALT)?;

    let diff = est.mean - closed;
    let z = if est.stderr == 0.0 {
        // Deterministic estimate (m = 0): the Monte-Carlo and trace routes
        // agree up to floating-point rounding, which counts as z = 0.
        if diff.abs() <= 1e-12 * closed.abs().max(1e-300) {
            0.0
        } else {
            f64::INFINITY * diff.signum()
        }
    } else {
        diff / est.stderr
    };
    println!("sigma source:  {source}");
    println!("mc mean:       {}", io::fmt_f64(est.mean));
    println!("mc stderr:     {}", io::fmt_f64(est.stderr));
    println!("closed form:   {}", io::fmt_f64(closed));
    println!("z-score:       {z:.4}");
    if z.abs() <= 3.0 {
        println!("within 3 standard errors: OK");
        Ok(())
    } else {
        Err(CliError::statistical(format!(
            "Monte-Carlo mean deviates from the closed form by {z:.2} standard errors"
        )))
    }
}

pub fn analyze(cmd: AnalyzeCommand) -> Result<(), CliError> {
    match cmd {
        AnalyzeCommand::Kernel(args) => {
            let layout = parse_layout(&args.layout)?;
            let (kernel, source) = match (&args.matrix, &args.a_file, &args.b_file) {
                (Some(path), None, None) => (io::read_matrix_csv(path)?, path.clone()),
                (None, Some(a), Some(b)) => {
                    let (am, bm) = (io::read_matrix_csv(a)?, io::read_matrix_csv(b)?);
                    if am.ncols() != bm.nrows() {
                        return Err(CliError::runtime(format!(
                            "encoder is {}x{} but decoder is {}x{}",
                            am.nrows(),
                            am.ncols(),
                            bm.nrows(),
                            bm.ncols()
                        )));
                    }
                    (am * bm, format!("{a} * {b}"))
                }
                _ => {
                    return Err(CliError::usage(
                        "provide either --matrix or both --a-file and --b-file",
                    ))
                }
            };
            let profile = kernel_profile(&kernel, &layout, layout.default_metric())?;
            let prefix = &args.out_prefix;
            let json_path = format!("{prefix}.profile.json");
            let csv_path = format!("{prefix}.profile.csv");
            io::write_json(&json_path, &profile)?;
            io::write_profile_csv(&csv_path, &profile)?;
            let mut manifest = ManifestBuilder::new("analyze kernel");
            manifest
                .param("source", source)
                .param("layout", &args.layout)
                .output(&json_path)
                .output(&csv_path);
            manifest.write(&format!("{prefix}.manifest.json"))?;
            println!(
                "decay {:.6e}, amplitude {:.6e}, r2 {:.4}, zero-concentrated {}",
                profile.fit_decay, profile.fit_amplitude, profile.fit_r2, profile.zero_concentrated
            );
        }
        AnalyzeCommand::Entropy(args) => {
            let kernel = io::read_matrix_csv(&args.matrix)?;
            let hist = entropy_histogram(&kernel, args.bins)?;
            let prefix = &args.out_prefix;
            let json_path = format!("{prefix}.entropy.json");
            io::write_json(&json_path, &hist)?;
            let mut manifest = ManifestBuilder::new("analyze entropy");
            manifest
                .param("matrix", &args.matrix)
                .param("bins", args.bins)
                .output(&json_path);
            manifest.write(&format!("{prefix}.manifest.json"))?;
            println!(
                "mean entropy {:.4} over {} columns (max {:.4})",
                hist.mean_entropy(),
                hist.entropies.len(),
                (kernel.nrows() as f64).ln()
            );
        }
        AnalyzeCommand::Boundary(args) => {
            let layout = parse_layout(&args.layout)?;
            let encoder = io::read_matrix_csv(&args.a_file)?;
            let emphasis = boundary_emphasis(&encoder, &layout, args.width)?;
            let prefix = &args.out_prefix;
            let json_path = format!("{prefix}.boundary.json");
            io::write_json(&json_path, &emphasis)?;
            let mut manifest = ManifestBuilder::new("analyze boundary");
            manifest
                .param("a_file", &args.a_file)
                .param("layout", &args.layout)
                .param("width", args.width)
                .output(&json_path);
            manifest.write(&format!("{prefix}.manifest.json"))?;
            println!(
                "boundary emphasis ratio {:.6}{}",
                emphasis.ratio,
                if emphasis.capped { " (capped)" } else { "" }
            );
        }
        AnalyzeCommand::Spectrum(args) => {
            let starts: Vec<usize> = parse_list(&args.starts, "start")?;
            let table = mask_spectrum(&starts, args.p, args.len)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let prefix = &args.out_prefix;
            let csv_path = format!("{prefix}.spectrum.csv");
            io::write_spectrum_csv(&csv_path, &table)?;
            let mut manifest = ManifestBuilder::new("analyze spectrum");
            manifest
                .param("D", args.len)
                .param("p", args.p)
                .param("starts", &starts)
                .param("overlapping", table.overlapping)
                .output(&csv_path);
            manifest.write(&format!("{prefix}.manifest.json"))?;
            let nonzero = table.magnitude.iter().filter(|m| **m > 1e-9).count();
            println!(
                "spectrum over {} frequencies: {nonzero} above 1e-9{}",
                args.len,
                if table.overlapping {
                    " (pulses overlap)"
                } else {
                    ""
                }
            );
        }
        AnalyzeCommand::Gabor(args) => {
            let layout = parse_layout(&args.layout)?;
            let PatchLayout::Grid2D { patch, .. } = layout else {
                return Err(CliError::usage("analyze gabor needs a grid layout"));
            };
            let data = DataMatrix::new(io::read_matrix_csv(&args.data)?)?
                .with_layout(layout)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let sigmas: Vec<f64> = parse_list(&args.sigmas, "sigma")?;
            let freqs: Vec<f64> = parse_list(&args.freqs, "frequency")?;
            let ms: Vec<f64> = parse_list(&args.ms, "masking ratio")?;
            let result = gabor_sweep(
                &data,
                &sigmas,
                &freqs,
                &ms,
                patch,
                args.k,
                args.ridge,
                args.split_seed,
            )?;
            let prefix = &args.out_prefix;
            let csv_path = format!("{prefix}.task.csv");
            io::write_task_csv(&csv_path, &result)?;
            let mut manifest = ManifestBuilder::new("analyze gabor");
            manifest
                .seed(args.split_seed)
                .param("data", &args.data)
                .param("layout", &args.layout)
                .param("k", args.k)
                .param("sigmas", &sigmas)
                .param("freqs", &freqs)
                .param("ms", &ms)
                .param("ridge", args.ridge)
                .output(&csv_path);
            manifest.write(&format!("{prefix}.manifest.json"))?;
            println!("wrote {} rows to {csv_path}", result.rows.len());
        }
    }
    Ok(())
}
