//! `czlab`: generate measures, decompose densities, verify invariants and run
//! weak (1,1) sweeps from the command line.
//!
//! Exit codes: 0 when everything checked passes, 1 on an invariant or growth
//! violation, 2 on bad input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use czlab::czdecomp::select_cubes;
use czlab::harness::{parse_grid, read_json};
use czlab::operators::{adjoint_transform, empirical_l2_norm, weak_sweep, LambdaGrid, WeakSweep};
use czlab::{
    decompose, gen_density, gen_measure, run_weak11_experiment, truncated_transform, verify_decomposition,
    verify_growth, AtomicMeasure, CzDecomposition, CzOptions, DensitySpec, DensityVector, ExperimentConfig,
    GeneratorKind, GeneratorSpec, Kernel,
};

#[derive(Parser, Debug)]
#[command(name = "czlab", version, about = "Calderón–Zygmund decomposition for non-doubling atomic measures")]
struct Cli {
    /// JSON file supplying any option not given as a flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for generators, densities and randomized estimates.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a measure (and optionally a density).
    Gen(GenArgs),
    /// Check the growth condition μ(B(x,r)) ≤ C0 rⁿ of a measure.
    VerifyGrowth(GrowthArgs),
    /// Decompose a density at level λ.
    Decompose(DecomposeArgs),
    /// Re-check a stored decomposition.
    Verify(VerifyArgs),
    /// Evaluate the truncated transform T_ε f at every atom.
    Transform(TransformArgs),
    /// Sweep the weak (1,1) quasinorm of T_ε over an ε grid.
    Weak11(Weak11Args),
    /// Run a full experiment: decompositions, verification and weak (1,1) sweep.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Generator spec as a JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// grid, cantor, segment_plus_atoms or random (when no spec is given).
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    pieces: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    heavy_atoms: Option<usize>,
    #[arg(long)]
    heavy_weight: Option<f64>,
    /// Growth exponent (defaults to the construction's own).
    #[arg(long)]
    n: Option<f64>,
    /// Growth constant (measured when absent).
    #[arg(long = "c0")]
    c0: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    total_mass: Option<f64>,
    /// Density spec as inline JSON, e.g. '{"kind":"spikes","count":3,"height":50}'.
    #[arg(long)]
    density: Option<String>,
    /// Where to write the density (requires --density).
    #[arg(long)]
    density_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the selection report (cubes, overlap counts, N and N').
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Use the annulus-by-annulus selection around the origin.
    #[arg(long)]
    annulus: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long)]
    dec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// cauchy, riesz, hilbert or negative_control.
    #[arg(long)]
    kernel: Option<String>,
    /// Riesz component.
    #[arg(long)]
    component: Option<usize>,
    /// Kernel order n (Riesz and negative control).
    #[arg(long)]
    order: Option<f64>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    density: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Apply the adjoint T_ε* instead.
    #[arg(long)]
    adjoint: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Weak11Args {
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long)]
    density: Option<PathBuf>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// a:b:steps, geometric.
    #[arg(long)]
    eps_grid: Option<String>,
    /// `auto` or a:b:steps.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Random restarts of the L² estimate per ε (0 skips it).
    #[arg(long)]
    l2_trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV path; defaults to the report path with a .csv extension.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Experiment config; falls back to the `experiment` entry of --config.
    #[arg(long)]
    experiment: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Options read from `--config`; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    measure: Option<PathBuf>,
    density: Option<PathBuf>,
    dec: Option<PathBuf>,
    lambda: Option<f64>,
    eps: Option<f64>,
    eps_grid: Option<String>,
    lambda_grid: Option<String>,
    kernel: Option<String>,
    component: Option<usize>,
    order: Option<f64>,
    l2_trials: Option<usize>,
    annulus: Option<bool>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    selection: Option<PathBuf>,
    generator: Option<GeneratorSpec>,
    density_spec: Option<DensitySpec>,
    density_out: Option<PathBuf>,
    experiment: Option<ExperimentConfig>,
    seed: Option<u64>,
}

/// Anything that should exit with status 1 rather than 2.
#[derive(Debug)]
struct Violation(String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn need<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| anyhow!("missing --{name} (flag or config entry)"))
}

fn load<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    read_json(path).with_context(|| format!("reading {what} from {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn kernel_from(args: &KernelArgs, cfg: &FileConfig, dim: usize) -> Result<Kernel> {
    let name = args.kernel.clone().or(cfg.kernel.clone()).unwrap_or_else(|| {
        if dim == 2 { "cauchy" } else { "riesz" }.to_string()
    });
    let component = args.component.or(cfg.component).unwrap_or(0);
    let order = args.order.or(cfg.order);
    let kernel = match name.as_str() {
        "cauchy" => Kernel::cauchy(),
        "riesz" => Kernel::riesz(dim, order.unwrap_or(1.0), component)?,
        "hilbert" => Kernel::riesz(1, 1.0, 0)?,
        "negative_control" | "negative-control" => Kernel::negative_control(dim, order.unwrap_or(1.0)),
        other => bail!("unknown kernel `{other}` (cauchy, riesz, hilbert, negative_control)"),
    };
    if kernel.dim != dim {
        bail!("kernel {name} is defined in dimension {}, the measure has dimension {dim}", kernel.dim);
    }
    Ok(kernel)
}

fn measure_and_density(
    measure: Option<PathBuf>,
    density: Option<PathBuf>,
    cfg: &FileConfig,
) -> Result<(AtomicMeasure, DensityVector)> {
    let mu: AtomicMeasure = load(&need(measure, cfg.measure.clone(), "measure")?, "measure")?;
    let f: DensityVector = load(&need(density, cfg.density.clone(), "density")?, "density")?;
    f.check_against(&mu)?;
    Ok((mu, f))
}

fn generator_from(args: &GenArgs, cfg: &FileConfig, seed: Option<u64>) -> Result<GeneratorSpec> {
    let mut spec = if let Some(path) = &args.spec {
        load(path, "generator spec")?
    } else if let Some(kind) = &args.kind {
        let dim = args.dim.unwrap_or(2);
        let kind = match kind.as_str() {
            "grid" => GeneratorKind::Grid {
                dim,
                count: args.count.ok_or_else(|| anyhow!("grid needs --count"))?,
                side: args.side.unwrap_or(1.0),
                jitter: args.jitter.unwrap_or(0.0),
            },
            "cantor" => GeneratorKind::Cantor {
                dim,
                depth: args.depth.ok_or_else(|| anyhow!("cantor needs --depth"))?,
                pieces: args.pieces.unwrap_or(4),
                ratio: args.ratio.unwrap_or(0.25),
            },
            "segment_plus_atoms" | "segment-plus-atoms" => GeneratorKind::SegmentPlusAtoms {
                dim,
                segment_atoms: args.count.ok_or_else(|| anyhow!("segment_plus_atoms needs --count"))?,
                length: args.side.unwrap_or(1.0),
                heavy_atoms: args.heavy_atoms.unwrap_or(0),
                heavy_weight: args.heavy_weight.unwrap_or(1.0),
            },
            "random" => GeneratorKind::Random {
                dim,
                count: args.count.ok_or_else(|| anyhow!("random needs --count"))?,
                side: args.side.unwrap_or(1.0),
                weight_decades: 0.0,
            },
            other => bail!("unknown generator `{other}` (grid, cantor, segment_plus_atoms, random)"),
        };
        GeneratorSpec::new(kind)
    } else if let Some(spec) = &cfg.generator {
        spec.clone()
    } else {
        bail!("gen needs --spec, --kind or a `generator` config entry");
    };
    if let Some(n) = args.n {
        spec.n = Some(n);
    }
    if let Some(c0) = args.c0 {
        spec.c0 = Some(c0);
    }
    if let Some(r) = args.r_min {
        spec.r_min = Some(r);
    }
    if let Some(m) = args.total_mass {
        spec.total_mass = m;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn cmd_gen(args: GenArgs, cfg: &FileConfig, seed: Option<u64>) -> Result<ExitCode> {
    let spec = generator_from(&args, cfg, seed)?;
    let mu = gen_measure(&spec)?;
    emit(&mu, args.out.as_deref().or(cfg.out.as_deref()))?;
    let density = match &args.density {
        Some(text) => Some(serde_json::from_str::<DensitySpec>(text).context("parsing --density")?),
        None => cfg.density_spec.clone(),
    };
    let density_out = args.density_out.or(cfg.density_out.clone());
    match (density, density_out) {
        (Some(d), Some(out)) => {
            let f = gen_density(&mu, &d, spec.seed)?;
            emit(&f, Some(&out))?;
        }
        (None, None) => {}
        _ => bail!("--density and --density-out go together"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_growth(args: GrowthArgs, cfg: &FileConfig) -> Result<ExitCode> {
    let mu: AtomicMeasure = load(&need(args.measure, cfg.measure.clone(), "measure")?, "measure")?;
    let report = verify_growth(&mu);
    emit(&report, args.out.as_deref().or(cfg.out.as_deref()))?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Violation(format!(
            "growth condition fails: worst ratio {} exceeds C0 = {} at atom {}",
            report.worst_ratio, report.c0, report.worst_atom
        ))
        .into())
    }
}

fn cz_options(annulus: bool) -> CzOptions {
    CzOptions {
        annulus_min_extent: annulus.then_some(0.0),
        ..CzOptions::default()
    }
}

fn cmd_decompose(args: DecomposeArgs, cfg: &FileConfig) -> Result<ExitCode> {
    let (mu, f) = measure_and_density(args.measure, args.density, cfg)?;
    let lambda = need(args.lambda, cfg.lambda, "lambda")?;
    let opts = cz_options(args.annulus || cfg.annulus.unwrap_or(false));
    let dec = decompose(&mu, &f, lambda, &opts)?;
    emit(&dec, args.out.as_deref().or(cfg.out.as_deref()))?;
    if let Some(path) = args.selection.or(cfg.selection.clone()) {
        let selection = select_cubes(&mu, &f, lambda, &opts)?;
        emit(&selection, Some(&path))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs, cfg: &FileConfig) -> Result<ExitCode> {
    let (mu, f) = measure_and_density(args.measure, args.density, cfg)?;
    let dec: CzDecomposition = load(&need(args.dec, cfg.dec.clone(), "dec")?, "decomposition")?;
    let report = verify_decomposition(&mu, &f, dec.lambda, &dec)?;
    emit(&report, args.out.as_deref().or(cfg.out.as_deref()))?;
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        Err(Violation(format!("violated: {}", names.join(", "))).into())
    }
}

fn cmd_transform(args: TransformArgs, cfg: &FileConfig) -> Result<ExitCode> {
    let (mu, f) = measure_and_density(args.measure, args.density, cfg)?;
    let kernel = kernel_from(&args.kernel, cfg, mu.dim())?;
    let eps = need(args.eps, cfg.eps, "eps")?;
    let values = if args.adjoint {
        adjoint_transform(&mu, &kernel, &f, eps, None)?
    } else {
        truncated_transform(&mu, &kernel, &f, eps, None)?
    };
    emit(&DensityVector::new(values), args.out.as_deref().or(cfg.out.as_deref()))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Weak11Report {
    #[serde(flatten)]
    sweep: WeakSweep,
    l2_norms: Option<Vec<f64>>,
    variation: f64,
}

fn cmd_weak11(args: Weak11Args, cfg: &FileConfig, seed: Option<u64>) -> Result<ExitCode> {
    let (mu, f) = measure_and_density(args.measure, args.density, cfg)?;
    let kernel = kernel_from(&args.kernel, cfg, mu.dim())?;
    let epsilons = parse_grid(&need(args.eps_grid, cfg.eps_grid.clone(), "eps-grid")?)?;
    let lambdas = match args.lambda_grid.or(cfg.lambda_grid.clone()).as_deref() {
        None | Some("auto") => LambdaGrid::Auto,
        Some(text) => LambdaGrid::Fixed(parse_grid(text)?),
    };
    let sweep = weak_sweep(&mu, &kernel, &f, &epsilons, &lambdas)?;
    let trials = args.l2_trials.or(cfg.l2_trials).unwrap_or(0);
    let l2_norms = (trials > 0)
        .then(|| {
            epsilons
                .iter()
                .map(|&e| empirical_l2_norm(&mu, &kernel, e, trials, seed.unwrap_or(0)))
                .collect::<czlab::Result<Vec<f64>>>()
        })
        .transpose()?;
    let out = args.out.or(cfg.out.clone());
    let csv = args.csv.or(cfg.csv.clone()).or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(path) = &csv {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        sweep.write_csv(file)?;
    }
    let variation = sweep.variation();
    let finite = sweep.is_finite();
    emit(&Weak11Report { sweep, l2_norms, variation }, out.as_deref())?;
    if finite {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Violation("non-finite quasinorm in the sweep".into()).into())
    }
}

fn cmd_report(args: ReportArgs, cfg: &FileConfig, seed: Option<u64>) -> Result<ExitCode> {
    let mut config = match (&args.experiment, &cfg.experiment) {
        (Some(path), _) => load::<ExperimentConfig>(path, "experiment config")?,
        (None, Some(c)) => c.clone(),
        (None, None) => bail!("report needs --experiment or an `experiment` config entry"),
    };
    if let Some(s) = seed {
        config.seed = s;
        config.measure.seed = s;
    }
    let report = match run_weak11_experiment(&config) {
        Ok(r) => r,
        Err(e @ czlab::Error::InvariantFailed { .. }) => return Err(Violation(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    let out = args.out.or(cfg.out.clone());
    let csv = args.csv.or(cfg.csv.clone()).or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
    if let Some(path) = &csv {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        report.write_csv(file)?;
    }
    emit(&report, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg: FileConfig = match &cli.config {
        Some(path) => load(path, "config")?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed);
    match cli.command {
        Command::Gen(a) => cmd_gen(a, &cfg, seed),
        Command::VerifyGrowth(a) => cmd_verify_growth(a, &cfg),
        Command::Decompose(a) => cmd_decompose(a, &cfg),
        Command::Verify(a) => cmd_verify(a, &cfg),
        Command::Transform(a) => cmd_transform(a, &cfg),
        Command::Weak11(a) => cmd_weak11(a, &cfg, seed),
        Command::Report(a) => cmd_report(a, &cfg, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.is::<Violation>() => {
            eprintln!("czlab: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("czlab: {e:#}");
            ExitCode::from(2)
        }
    }
}

