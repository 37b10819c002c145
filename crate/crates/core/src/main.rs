use clap::{Parser, Subcommand};
use rotocav::sweeps::{self, SweepAxis, SweepSpec};
use rotocav::{
    derive_quantities, evaluate_point, steady_state, Error, ParameterSet, CONSTANTS,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rotocav",
    about = "Stationary correlations and entanglement of a rotating-mirror cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single operating point and print its entanglement report.
    Point {
        /// Configuration file (flat key-value document).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Cross-check the direct Lyapunov solution against the
        /// elimination solver.
        #[arg(long)]
        verify_solvers: bool,
    },
    /// Run a parameter sweep and write CSV, SVG and provenance files.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path prefix for the rendered files.
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Sweep axis: temperature, detuning, angular_momentum or mass.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        verify_solvers: bool,
    },
    /// Print the stability verdict and the bistability roots.
    Stability {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the randomized cross-solver verification suite.
    Verify {
        /// RNG seed for reproducible draws.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of three-way solver comparisons on stable draws.
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Number of stability-consistency draws.
        #[arg(long, default_value_t = 2000)]
        rh_draws: usize,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn load(config: &Option<PathBuf>) -> Result<(ParameterSet, Option<SweepSpec>), Error> {
    match config {
        None => Ok((ParameterSet::default(), None)),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            sweeps::parse_config(&text)
        }
    }
}

fn parse_axis(name: &str) -> Result<SweepAxis, Error> {
    match name {
        "temperature" => Ok(SweepAxis::Temperature),
        "detuning" => Ok(SweepAxis::Detuning),
        "angular_momentum" => Ok(SweepAxis::AngularMomentum),
        "mass" => Ok(SweepAxis::Mass),
        other => Err(Error::Config(format!(
            "unknown sweep axis `{other}` (expected temperature, detuning, angular_momentum or mass)"
        ))),
    }
}

fn cmd_point(config: &Option<PathBuf>, verify_solvers: bool) -> Result<u8, Error> {
    let (p, _) = load(config)?;
    let ev = evaluate_point(&p, verify_solvers)?;
    println!("a_s            = {:.6e}", ev.steady.amplitude);
    println!("G              = {:.6e} rad/s", ev.steady.coupling_eff);
    println!("omega_eff      = {:.6e} rad/s", ev.response.omega_eff);
    println!("D_eff          = {:.6e}", ev.response.d_eff);
    println!("nbar           = {:.6e}", ev.response.nbar);
    println!("T_eff          = {:.6e} K", ev.response.t_eff);
    println!("T_crossover    = {:.6e} K", ev.response.t_crossover);
    println!(
        "stable         = {}",
        ev.verdict.spectral_abscissa < 0.0
    );
    println!(
        "spectral_abscissa = {:.6e} rad/s",
        ev.verdict.spectral_abscissa
    );
    match ev.report {
        Some(r) => {
            println!("sigma          = {:.12e}", r.sigma);
            println!("det_C          = {:.12e}", r.det_c);
            println!("eta_minus      = {:.12e}", r.eta_minus);
            println!("E_N            = {:.12e}", r.log_negativity);
            println!("nu_min         = {:.12e}", r.nu_min);
            Ok(0)
        }
        None => {
            eprintln!("error: operating point is dynamically unstable");
            Ok(EXIT_NUMERICAL)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &Option<PathBuf>,
    out: &PathBuf,
    axis: &Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    points: Option<usize>,
    verify_solvers: bool,
) -> Result<u8, Error> {
    let (base, file_sweep) = load(config)?;
    let mut spec = match (axis, file_sweep) {
        (Some(name), _) => {
            let axis = parse_axis(name)?;
            let (min, max, points) = match (min, max, points) {
                (Some(a), Some(b), Some(n)) => (a, b, n),
                _ => {
                    return Err(Error::Config(
                        "--axis requires --min, --max and --points".into(),
                    ))
                }
            };
            SweepSpec::from_range(axis, base, min, max, points)?
        }
        (None, Some(mut s)) => {
            if let (Some(a), Some(b), Some(n)) = (min, max, points) {
                s = SweepSpec::from_range(s.axis, s.base, a, b, n)?;
            }
            s
        }
        (None, None) => {
            return Err(Error::Config(
                "no sweep requested: pass --axis/--min/--max/--points or a [sweep] config section"
                    .into(),
            ))
        }
    };
    spec.verify_solvers = verify_solvers;
    let result = sweeps::run_sweep(&spec)?;
    let paths = sweeps::render_outputs(&result, out)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if let Some(threshold) = sweeps::find_threshold(&result, "E_N") {
        println!("E_N threshold at {} = {:.9e}", result.axis.name(), threshold);
    }
    Ok(0)
}

fn cmd_stability(config: &Option<PathBuf>) -> Result<u8, Error> {
    let (p, _) = load(config)?;
    let ev = evaluate_point(&p, false)?;
    let v = &ev.verdict;
    println!("routh_hurwitz_pass = {}", v.routh_hurwitz_pass);
    println!("rh_condition_1     = {:.6e}", v.inequality_values[0]);
    println!("rh_condition_2     = {:.6e}", v.inequality_values[1]);
    println!("spectral_abscissa  = {:.6e} rad/s", v.spectral_abscissa);
    println!("consistent         = {}", v.consistent);
    let d = derive_quantities(&p, &CONSTANTS);
    let ss = steady_state(&p, &d)?;
    let roots = rotocav::bistability_roots(&p, &d, ss.delta_bare);
    println!("bistability_roots  = {}", roots.len());
    for (i, r) in roots.iter().enumerate() {
        println!("  root[{i}] phi_s = {r:.9e} rad");
    }
    Ok(0)
}

fn cmd_verify(seed: u64, instances: usize, rh_draws: usize) -> Result<u8, Error> {
    let s = rotocav::run_verification(seed, instances, rh_draws)?;
    println!("instances                   = {}", s.instances);
    println!("worst direct vs elimination = {:.3e}", s.worst_direct_vs_elimination);
    println!("worst direct vs quadrature  = {:.3e}", s.worst_direct_vs_quadrature);
    println!("worst Lyapunov residual     = {:.3e}", s.worst_residual);
    println!("worst structural identity   = {:.3e}", s.worst_structural_identity);
    println!("stability draws             = {}", s.rh_draws);
    println!("stability disagreements     = {}", s.rh_disagreements);
    let pass = s.worst_direct_vs_elimination <= 1e-10
        && s.worst_direct_vs_quadrature <= 1e-8
        && s.worst_residual <= 1e-10
        && s.worst_structural_identity <= 1e-9
        && s.rh_disagreements == 0;
    println!("verdict                     = {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Point { config, verify_solvers } => cmd_point(config, *verify_solvers),
        Command::Sweep {
            config,
            out,
            axis,
            min,
            max,
            points,
            verify_solvers,
        } => cmd_sweep(config, out, axis, *min, *max, *points, *verify_solvers),
        Command::Stability { config } => cmd_stability(config),
        Command::Verify { seed, instances, rh_draws } => {
            cmd_verify(*seed, *instances, *rh_draws)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
