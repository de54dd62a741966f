//! `conical`: locate eigenvalue-degeneracy points of parametric matrix
//! families from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use conical_cli::config::{
    format_from, load_file_config, parse_circle, parse_mode, parse_param, parse_point,
    parse_ranges, parse_starts, resolve_family, resolve_mode, FileConfig, RunSpec, StartSpec,
};
use conical_cli::run;
use conical_core::{Region2D, SolverConfig};

#[derive(Parser)]
#[command(
    name = "conical",
    version,
    about = "Locates isolated eigenvalue-multiplicity points (conical / Dirac points) of parametric matrix families",
    after_help = "Exit codes: 0 all runs converged; 2 at least one avoided crossing; \
                  3 at least one non-converging run; 4 only budget exhaustion; 1 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newton iteration from one or many start points
    Locate(LocateArgs),
    /// Berry-phase grid scan over a 2-parameter region, refining candidates
    Scan(ScanArgs),
    /// Non-degeneracy certificate at a claimed multiplicity point
    Certify(CertifyArgs),
    /// Newton iteration versus quasi-Newton gap minimization, per start
    Compare(CompareArgs),
    /// List the builtin family registry
    ListBuiltins,
}

#[derive(Args)]
struct FamilyArgs {
    /// Builtin family name (see list-builtins)
    #[arg(long)]
    family: Option<String>,
    /// JSON family file
    #[arg(long, value_name = "PATH")]
    family_file: Option<PathBuf>,
    /// Builtin parameter as key=value; repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// JSON config file providing defaults for any option
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Multiplicity mode: auto, double2d, hermitian3d, inversion2d, triple5d
    #[arg(long, default_value = "auto")]
    mode: String,
    /// 1-based index of the first eigenvalue of the coalescing group;
    /// defaults to the group with the smallest spread at each start
    #[arg(long)]
    pair: Option<usize>,
}

#[derive(Args, Default)]
struct SolverArgs {
    /// Iteration budget
    #[arg(long)]
    max_iter: Option<usize>,
    /// Gap tolerance (scaled by 1 + ||A||)
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Step-norm tolerance (scaled by 1 + ||r||)
    #[arg(long)]
    step_tol: Option<f64>,
    /// Relative singular-value cutoff for the pseudoinverse fallback
    #[arg(long)]
    pinv_threshold: Option<f64>,
    /// Trailing window length for the oscillation detector
    #[arg(long)]
    oscillation_window: Option<usize>,
    /// Required shrink factor between successive step windows
    #[arg(long)]
    oscillation_factor: Option<f64>,
    /// Optional cap on the Newton step length
    #[arg(long)]
    max_step_norm: Option<f64>,
}

#[derive(Args)]
struct StartArgs {
    /// Explicit start points: "x,y;x,y;..."
    #[arg(long)]
    starts: Option<String>,
    /// Per-axis sampling box: "lo:hi,lo:hi[,...]"
    #[arg(long, value_name = "RANGES")]
    sample_box: Option<String>,
    /// Sampling circle: "cx,cy,radius"
    #[arg(long, value_name = "CX,CY,R")]
    sample_circle: Option<String>,
    /// Number of sampled starts
    #[arg(long)]
    count: Option<usize>,
    /// Seed for reproducible sampling
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Trace file path; with no --out the trace goes to stdout and the
    /// summary to stderr
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Trace format: trace-json-lines (default) or csv
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct LocateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    starts: StartArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Scan region: "x0:x1,y0:y1"
    #[arg(long, value_name = "RANGES")]
    region: String,
    /// Cells per side
    #[arg(long, default_value_t = 16)]
    resolution: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Point to certify: "x,y[,...]"
    #[arg(long)]
    point: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    starts: StartArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Baseline iteration budget
    #[arg(long)]
    baseline_max_iter: Option<usize>,
    /// Baseline gradient tolerance
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Baseline finite-difference step
    #[arg(long)]
    fd_step: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn merge_solver(base: Option<SolverConfig>, args: &SolverArgs) -> SolverConfig {
    let mut cfg = base.unwrap_or_default();
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.gap_tol {
        cfg.gap_tol = v;
    }
    if let Some(v) = args.step_tol {
        cfg.step_tol = v;
    }
    if let Some(v) = args.pinv_threshold {
        cfg.pinv_rel_threshold = v;
    }
    if let Some(v) = args.oscillation_window {
        cfg.oscillation_window = v;
    }
    if let Some(v) = args.oscillation_factor {
        cfg.oscillation_factor = v;
    }
    if let Some(v) = args.max_step_norm {
        cfg.max_step_norm = Some(v);
    }
    cfg
}

fn start_spec(args: &StartArgs, file: &FileConfig) -> Result<StartSpec> {
    let count = args
        .count
        .or_else(|| file.sample.as_ref().and_then(|s| s.count))
        .unwrap_or(10);
    let seed = args
        .seed
        .or_else(|| file.sample.as_ref().and_then(|s| s.seed))
        .unwrap_or(0);
    if let Some(text) = &args.starts {
        return Ok(StartSpec::Explicit(parse_starts(text)?));
    }
    if let Some(text) = &args.sample_box {
        return Ok(StartSpec::Box {
            ranges: parse_ranges(text)?,
            count,
            seed,
        });
    }
    if let Some(text) = &args.sample_circle {
        let (center, radius) = parse_circle(text)?;
        return Ok(StartSpec::Circle {
            center,
            radius,
            count,
            seed,
        });
    }
    if let Some(explicit) = &file.starts {
        return Ok(StartSpec::Explicit(explicit.clone()));
    }
    if let Some(sample) = &file.sample {
        if let Some(ranges) = &sample.box_ranges {
            let ranges = ranges
                .iter()
                .map(|r| match r.as_slice() {
                    [lo, hi] if lo < hi => Ok((*lo, *hi)),
                    _ => Err(anyhow!("config sample box ranges must be [lo, hi] pairs")),
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(StartSpec::Box {
                ranges,
                count,
                seed,
            });
        }
        if let Some(circle) = &sample.circle {
            if circle.center.len() != 2 {
                bail!("config circle center must have 2 coordinates");
            }
            return Ok(StartSpec::Circle {
                center: (circle.center[0], circle.center[1]),
                radius: circle.radius,
                count,
                seed,
            });
        }
    }
    bail!("no start points: use --starts, --sample-box, --sample-circle or the config file")
}

fn build_spec(
    family_args: &FamilyArgs,
    start_args: Option<&StartArgs>,
    solver_args: &SolverArgs,
    output_args: Option<&OutputArgs>,
) -> Result<RunSpec> {
    let file = load_file_config(family_args.config.as_ref())?;
    let params = family_args
        .params
        .iter()
        .map(|s| parse_param(s))
        .collect::<Result<Vec<_>>>()?;
    let family = resolve_family(
        family_args.family.as_deref(),
        family_args.family_file.as_ref(),
        &params,
        file.family.as_ref(),
    )?;
    let kind = match family_args.mode.as_str() {
        "auto" => match &file.mode {
            Some(m) => parse_mode(m)?,
            None => None,
        },
        other => parse_mode(other)?,
    };
    let pair = family_args.pair.or(file.pair);
    let mode = resolve_mode(&family, kind, pair)?;
    let starts = match start_args {
        Some(args) => start_spec(args, &file)?.materialize(family.d())?,
        None => Vec::new(),
    };
    let solver = merge_solver(file.solver.clone(), solver_args);
    let baseline = file.baseline.clone().unwrap_or_default();
    let (out, format) = match output_args {
        Some(args) => (
            args.out.clone().or_else(|| file.out.clone()),
            format_from(args.format.as_deref(), file.format.as_deref())?,
        ),
        None => (None, format_from(None, file.format.as_deref())?),
    };
    Ok(RunSpec {
        family,
        mode,
        starts,
        solver,
        baseline,
        out,
        format,
    })
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Locate(args) => {
            let spec = build_spec(
                &args.family,
                Some(&args.starts),
                &args.solver,
                Some(&args.output),
            )?;
            let output = run::run_locate(&spec)?;
            conical_cli::deliver(spec.out.as_deref(), &output)?;
            Ok(output.exit_code)
        }
        Command::Scan(args) => {
            let mut spec = build_spec(&args.family, None, &args.solver, Some(&args.output))?;
            let ranges = parse_ranges(&args.region)?;
            if ranges.len() != 2 {
                bail!("--region needs exactly two ranges, x and y");
            }
            let region = Region2D::new(ranges[0].0, ranges[0].1, ranges[1].0, ranges[1].1)?;
            // Transport follows the requested pair, or the tightest pair at
            // the region center.
            let pair = match args.family.pair {
                Some(k) => k,
                None => {
                    let center = conical_core::ParameterPoint::new(vec![
                        0.5 * (region.x_min + region.x_max),
                        0.5 * (region.y_min + region.y_max),
                    ])?;
                    conical_core::diagnostics::default_scan_pair(&spec.family, &center)?
                }
            };
            spec.mode = conical_core::MultiplicityMode::with_pair(spec.mode.kind, pair);
            let output = run::run_scan(&spec, &region, args.resolution, pair)?;
            conical_cli::deliver(spec.out.as_deref(), &output)?;
            Ok(output.exit_code)
        }
        Command::Certify(args) => {
            let spec = build_spec(&args.family, None, &SolverArgs::default(), None)?;
            let alpha = parse_point(&args.point)?;
            let output = run::run_certify(&spec, &alpha)?;
            print!("{}", output.summary);
            Ok(output.exit_code)
        }
        Command::Compare(args) => {
            let mut spec = build_spec(
                &args.family,
                Some(&args.starts),
                &args.solver,
                Some(&args.output),
            )?;
            if let Some(v) = args.baseline_max_iter {
                spec.baseline.max_iter = v;
            }
            if let Some(v) = args.grad_tol {
                spec.baseline.grad_tol = v;
            }
            if let Some(v) = args.fd_step {
                spec.baseline.fd_step = Some(v);
            }
            let output = run::run_compare(&spec)?;
            conical_cli::deliver(spec.out.as_deref(), &output)?;
            Ok(output.exit_code)
        }
        Command::ListBuiltins => {
            print!("{}", run::list_builtins());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            // Usage problems exit 1; help and version requests are not
            // errors.
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
