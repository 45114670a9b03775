//! `decolab` — decohering n-slit interference patterns, coherence, and
//! decoherence-time extraction from the command line.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
//! failure (including a failed `verify`), 4 measurement protocol not
//! applicable.

// validity checks are written as `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use clap::{Args, Parser, Subcommand};
use decolab::coherence::{coherence_analytic_with, tau_d_from_intensities_with_product};
use decolab::engine::{Coupling, Evaluator, EvaluationMode, Normalization};
use decolab::model::{
    load_config, load_preset, preset_names, render_config, DetectorMode, DetectorOverlaps,
    DimensionlessInstance, ExperimentConfig,
};
use decolab::oracle::{compare_to_analytic, init_density, Evolution, SolverParams};
use decolab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "decolab",
    version,
    about = "Decohering n-slit interference: patterns, coherence, decoherence times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List or show the built-in experiment presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Sample a screen pattern and write it as CSV (optionally SVG).
    Pattern(PatternArgs),
    /// Tabulate the coherence C(kappa) over a range of t/tau_d.
    Coherence(CoherenceArgs),
    /// Invert measured two-slit intensities into a decoherence time.
    Taud(TaudArgs),
    /// Evolve the master-equation oracle and compare with the closed form.
    Verify(VerifyArgs),
    /// Sweep one parameter and tabulate the coherence.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum PresetAction {
    /// Print the preset names, one per line.
    List,
    /// Print a preset as a config file.
    Show { name: String },
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in preset name (see `preset list`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the slit count (equal amplitudes, recentered screen).
    #[arg(long)]
    slits: Option<usize>,
}

impl SourceArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let cfg = match (&self.preset, &self.config) {
            (Some(name), None) => load_preset(name)?,
            (None, Some(path)) => load_config(path)?,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "source",
                    reason: "exactly one of --preset or --config is required".to_string(),
                })
            }
        };
        Ok(match self.slits {
            Some(n) => cfg.with_slit_count(n),
            None => cfg,
        })
    }
}

#[derive(Args)]
struct TimeArgs {
    /// Decoherence strength kappa = t/tau_d at the flight time.
    #[arg(long)]
    kappa: Option<f64>,
    /// Friction coefficient gamma (1/s); pairs with --t-s.
    #[arg(long = "gamma-per-s")]
    gamma_per_s: Option<f64>,
    /// Evolution time (s); pairs with --gamma-per-s.
    #[arg(long = "t-s")]
    t_s: Option<f64>,
}

impl TimeArgs {
    /// Resolve to an evolution time and coupling. `kappa` and the physical
    /// pair are mutually exclusive; with neither, kappa = 0.
    fn resolve(&self, cfg: &ExperimentConfig) -> Result<(f64, Coupling), Error> {
        match (self.kappa, self.gamma_per_s, self.t_s) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(Error::InvalidParameter {
                name: "time",
                reason: "--kappa cannot be combined with --gamma-per-s/--t-s".to_string(),
            }),
            (Some(kappa), None, None) => {
                let t = cfg.flight_time();
                Ok((t, Coupling::from_kappa(kappa, cfg.slits.spacing, t)?))
            }
            (None, Some(gamma), Some(t)) => {
                let mut with_gamma = cfg.clone();
                with_gamma.environment.gamma = gamma;
                Ok((t, Coupling::from_environment(&with_gamma)))
            }
            (None, None, None) => {
                let t = cfg.flight_time();
                Ok((t, Coupling::from_kappa(0.0, cfg.slits.spacing, t)?))
            }
            _ => Err(Error::InvalidParameter {
                name: "time",
                reason: "--gamma-per-s and --t-s must be given together".to_string(),
            }),
        }
    }
}

#[derive(Args)]
struct PatternArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    time: TimeArgs,
    /// Evaluation mode.
    #[arg(long, default_value = "farfield")]
    mode: String,
    /// Override the screen grid point count.
    #[arg(long)]
    points: Option<usize>,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Emit the raw probability density instead of peak-normalized values.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct CoherenceArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// kappa range as start:stop:step.
    #[arg(long = "kappa-range")]
    kappa_range: String,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TaudArgs {
    /// Primary-maximum intensity with indistinguishable paths.
    #[arg(long = "imax-par")]
    imax_par: f64,
    /// Primary-maximum intensity with fully distinguishable paths.
    #[arg(long = "imax-perp")]
    imax_perp: f64,
    /// De Broglie wavelength (m).
    #[arg(long = "lambda-m")]
    lambda_m: f64,
    /// Slit-to-screen distance (m).
    #[arg(long = "L-m")]
    l_m: f64,
    /// Particle mass (kg).
    #[arg(long = "mass-kg")]
    mass_kg: f64,
    /// Amplitude product |c1 c2| (1/2 for a symmetric two-slit).
    #[arg(long, default_value_t = 0.5)]
    c1c2: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Slit count of the dimensionless verification instance.
    #[arg(long, default_value_t = 2)]
    slits: usize,
    /// Decoherence strength at the flight time.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Oracle grid points per axis (power of two).
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Relative L2 tolerance.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    time: TimeArgs,
    /// Parameter to sweep: t_over_taud | T_K | gamma_per_s | n.
    #[arg(long)]
    param: String,
    /// Range as start:stop:step.
    #[arg(long)]
    range: String,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to DECOLAB_JOBS or the CPU count).
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap exits 2 for usage errors and 0 for --help/--version
            err.exit();
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Numerical { .. } | Error::Divergence { .. } | Error::GridMismatch { .. } => 3,
        Error::ProtocolInapplicable { .. } => 4,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Preset { action } => match action {
            PresetAction::List => {
                for name in preset_names() {
                    println!("{name}");
                }
                Ok(())
            }
            PresetAction::Show { name } => {
                let cfg = load_preset(&name)?;
                print!("{}", render_config(&cfg));
                Ok(())
            }
        },
        Command::Pattern(args) => run_pattern(args),
        Command::Coherence(args) => run_coherence(args),
        Command::Taud(args) => run_taud(args),
        Command::Verify(args) => run_verify(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run_pattern(args: PatternArgs) -> Result<(), Error> {
    let mut cfg = args.source.resolve()?;
    if let Some(points) = args.points {
        cfg.screen.points = points;
    }
    let (t, coupling) = args.time.resolve(&cfg)?;
    let mode: EvaluationMode = args.mode.parse()?;
    let normalization = if args.raw {
        Normalization::Raw
    } else {
        Normalization::PeakNormalized
    };
    let profile = Evaluator::with_coupling(&cfg, t, coupling, mode)?.pattern(normalization)?;
    write_file(&args.out, &output::render_pattern_csv(&profile))?;
    eprintln!("wrote {} ({} rows)", args.out.display(), profile.x.len());
    if let Some(svg_path) = &args.svg {
        write_file(svg_path, &output::render_svg(&profile))?;
        eprintln!("wrote {}", svg_path.display());
    }
    Ok(())
}

/// Parse `start:stop:step` into an ascending inclusive grid.
fn parse_range(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter {
            name: "range",
            reason: format!("expected start:stop:step, got `{spec}`"),
        });
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| Error::InvalidParameter {
                name: "range",
                reason: format!("`{p}` is not a number"),
            })
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidParameter {
            name: "range",
            reason: "requires start <= stop and step > 0".to_string(),
        });
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn run_coherence(args: CoherenceArgs) -> Result<(), Error> {
    let cfg = args.source.resolve()?;
    let kappas = parse_range(&args.kappa_range)?;
    let rows: Vec<(f64, f64)> = kappas
        .iter()
        .map(|&kappa| {
            decolab::coherence::coherence_analytic_at_kappa(&cfg, kappa).map(|c| (kappa, c))
        })
        .collect::<Result<_, _>>()?;
    write_file(&args.out, &output::render_series_csv("t_over_taud", "C", &rows))?;
    eprintln!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(())
}

fn run_taud(args: TaudArgs) -> Result<(), Error> {
    let coherence = (args.imax_par - args.imax_perp) / args.imax_perp;
    let tau = tau_d_from_intensities_with_product(
        args.imax_par,
        args.imax_perp,
        args.lambda_m,
        args.l_m,
        args.mass_kg,
        args.c1c2,
    )?;
    println!("C = {coherence:.16e}");
    println!("tau_d_s = {tau:.16e}");
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<(), Error> {
    let inst = DimensionlessInstance::synthetic(
        args.slits,
        0.15,
        10.0,
        1e-3,
        args.kappa,
        DetectorOverlaps::parallel(args.slits),
    );
    let params = SolverParams::for_instance(&inst, args.grid, 1.0)?;
    let mut grid = init_density(&inst, DetectorMode::Parallel, &params)?;
    let mut evolution = Evolution::new(&inst, &params)?;
    let start = std::time::Instant::now();
    let drift = evolution.evolve(&mut grid, 1.0, params.dt_hat)?;
    let cmp = compare_to_analytic(&grid, &inst)?;
    println!(
        "relative_l2 = {:.6e}\nsup = {:.6e}\ntrace_drift = {:.3e}\nhermiticity = {:.3e}\nsteps = {}\nseconds = {:.1}",
        cmp.l2_relative,
        cmp.sup_relative,
        drift.trace_drift,
        drift.hermiticity_defect,
        drift.steps,
        start.elapsed().as_secs_f64()
    );
    if !cmp.within(args.tol) {
        return Err(Error::Numerical {
            reason: format!(
                "oracle disagrees with the closed form: relative L2 {:.3e} > tol {:.3e}",
                cmp.l2_relative, args.tol
            ),
        });
    }
    println!("within tol = {:.3e}", args.tol);
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Error> {
    let cfg = args.source.resolve()?;
    let grid = parse_range(&args.range)?;
    let jobs = resolve_jobs(args.jobs)?;

    enum Param {
        Kappa,
        Temperature,
        Gamma,
        SlitCount,
    }
    let param = match args.param.as_str() {
        "t_over_taud" => Param::Kappa,
        "T_K" => Param::Temperature,
        "gamma_per_s" => Param::Gamma,
        "n" => Param::SlitCount,
        other => {
            return Err(Error::InvalidParameter {
                name: "param",
                reason: format!(
                    "unknown sweep parameter `{other}`; expected t_over_taud|T_K|gamma_per_s|n"
                ),
            })
        }
    };

    // the swept evaluation for one grid value
    let eval_one = |value: f64| -> Result<f64, Error> {
        match param {
            Param::Kappa => decolab::coherence::coherence_analytic_at_kappa(&cfg, value),
            Param::Temperature => {
                let mut c = cfg.clone();
                c.environment.temperature = value;
                let (t, coupling) = args.time.resolve(&c)?;
                // kappa-style time resolution would override the swept
                // environment, so require the physical pair or default to
                // the flight time with the stored gamma
                let coupling = match args.time.kappa {
                    Some(_) => {
                        return Err(Error::InvalidParameter {
                            name: "param",
                            reason: "--kappa fixes t/tau_d and cannot be mixed with a T_K sweep"
                                .to_string(),
                        })
                    }
                    None if args.time.gamma_per_s.is_some() => coupling,
                    None => Coupling::from_environment(&c),
                };
                let t = if args.time.t_s.is_some() { t } else { c.flight_time() };
                coherence_analytic_with(&c, t, &coupling)
            }
            Param::Gamma => {
                if args.time.kappa.is_some() {
                    return Err(Error::InvalidParameter {
                        name: "param",
                        reason: "--kappa fixes t/tau_d and cannot be mixed with a gamma sweep"
                            .to_string(),
                    });
                }
                let mut c = cfg.clone();
                c.environment.gamma = value;
                let t = args.time.t_s.unwrap_or_else(|| c.flight_time());
                coherence_analytic_with(&c, t, &Coupling::from_environment(&c))
            }
            Param::SlitCount => {
                let n = value.round() as usize;
                if n < 2 || (value - n as f64).abs() > 1e-9 {
                    return Err(Error::InvalidParameter {
                        name: "range",
                        reason: format!("slit count sweep needs integers >= 2, got {value}"),
                    });
                }
                let c = cfg.with_slit_count(n);
                let (t, coupling) = args.time.resolve(&c)?;
                coherence_analytic_with(&c, t, &coupling)
            }
        }
    };

    // evaluate concurrently in index chunks; assembly stays ordered
    let mut values = vec![0.0f64; grid.len()];
    let chunk = grid.len().div_ceil(jobs);
    let mut first_err: Option<Error> = None;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (slot, points) in values.chunks_mut(chunk).zip(grid.chunks(chunk)) {
            handles.push(scope.spawn(move || -> Result<(), Error> {
                for (v, p) in slot.iter_mut().zip(points) {
                    *v = eval_one(*p)?;
                }
                Ok(())
            }));
        }
        for h in handles {
            if let Err(e) = h.join().expect("sweep worker panicked") {
                first_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }

    let rows: Vec<(f64, f64)> = grid.into_iter().zip(values).collect();
    write_file(&args.out, &output::render_series_csv(&args.param, "C", &rows))?;
    eprintln!("wrote {} ({} rows)", args.out.display(), rows.len());
    Ok(())
}

fn resolve_jobs(flag: Option<usize>) -> Result<usize, Error> {
    if let Some(j) = flag {
        if j == 0 {
            return Err(Error::InvalidParameter {
                name: "jobs",
                reason: "must be at least 1".to_string(),
            });
        }
        return Ok(j);
    }
    match std::env::var("DECOLAB_JOBS") {
        Ok(v) => v.parse::<usize>().ok().filter(|j| *j >= 1).ok_or_else(|| {
            Error::InvalidParameter {
                name: "DECOLAB_JOBS",
                reason: format!("`{v}` is not a positive integer"),
            }
        }),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}
