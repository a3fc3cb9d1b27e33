use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use strang_split::error::{ErrorKind, SplitError};
use strang_split::field::{NormKind, State};
use strang_split::problems::{Brusselator, BrusselatorParams, KdV, KdVConfig, ToyOde};
use strang_split::scheme::{CoefficientMode, SchemeSpec, SplitProblem, DEFAULT_INNER_TOL};
use strang_split::study::{
    dyadic_taus, format_csv, gnuplot_script, integrate, reference_solution, run_study,
    ReferenceSpec, StudyConfig,
};
use strang_split::verify;

#[derive(Parser)]
#[command(
    name = "strang-split",
    version,
    about = "Operator splitting integrators and convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the step size, measure errors against a reference and fit the order.
    Study(StudyArgs),
    /// Integrate once and print the error against the reference.
    Run(RunArgs),
    /// Run the built-in property checks.
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemId {
    Brusselator,
    KdvSoliton,
    KdvSchwartz,
    ToyOde,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeId {
    Lie,
    Strang,
    /// S^(i) with i = --iterations
    IterStrang,
    /// triple jump with Strang as base
    TripleJump,
    /// triple jump with S^(i) as base
    IterTripleJump,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    Inf,
    L2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoeffArg {
    Real,
    Complex,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReferenceArg {
    /// exact solution when the problem has one, self-reference otherwise
    Auto,
    Exact,
    #[value(name = "self")]
    SelfRef,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum)]
    problem: ProblemId,
    #[arg(long, value_enum, default_value = "strang")]
    scheme: SchemeId,
    /// Fixed-point iterations of the iterated Strang base.
    #[arg(long, default_value_t = 4)]
    iterations: usize,
    /// Points per dimension [default: brusselator 128, kdv-soliton 1024, kdv-schwartz 2048; toy-ode is fixed at 8]
    #[arg(long)]
    n: Option<usize>,
    /// Final time [default: brusselator 0.25, kdv-soliton 0.4, kdv-schwartz 0.05, toy-ode 0.5]
    #[arg(long)]
    tmax: Option<f64>,
    /// Error norm [default: brusselator inf, kdv-* l2, toy-ode inf]
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Triple-jump coefficient branch [default: brusselator complex, others real]
    #[arg(long, value_enum)]
    coeffs: Option<CoeffArg>,
    /// Tolerance of inexact partial flows (KdV transport).
    #[arg(long, default_value_t = DEFAULT_INNER_TOL)]
    inner_tol: f64,
    /// Stop fixed-point iterations early below this increment (0 = never).
    #[arg(long, default_value_t = 0.0)]
    fixed_point_tol: f64,
    #[arg(long, value_enum, default_value = "auto")]
    reference: ReferenceArg,
    /// Self-reference step is the smallest step divided by this factor.
    #[arg(long, default_value_t = 10)]
    ref_factor: usize,
    /// Largest accepted disagreement between the two self-reference runs.
    #[arg(long, default_value_t = 1e-6)]
    ref_floor_max: f64,
    /// Worker threads [default: all cores]
    #[arg(long, env = "STRANG_SPLIT_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    /// Largest step [default: T/16, toy-ode T/8]
    #[arg(long)]
    tau_max: Option<f64>,
    /// Smallest step; must be tau-max / 2^m (overrides --tau-count)
    #[arg(long)]
    tau_min: Option<f64>,
    /// Number of dyadic steps [default: 6]
    #[arg(long)]
    tau_count: Option<usize>,
    /// CSV output path [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script drawing the CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Step size [default: T/64]
    #[arg(long)]
    tau: Option<f64>,
}

struct Defaults {
    n: usize,
    tmax: f64,
    norm: NormKind,
    coeffs: CoefficientMode,
}

fn defaults(problem: ProblemId) -> Defaults {
    match problem {
        ProblemId::Brusselator => Defaults {
            n: 128,
            tmax: 0.25,
            norm: NormKind::DiscreteInfinity,
            coeffs: CoefficientMode::Complex,
        },
        ProblemId::KdvSoliton => Defaults {
            n: 1024,
            tmax: 0.4,
            norm: NormKind::DiscreteL2,
            coeffs: CoefficientMode::Real,
        },
        ProblemId::KdvSchwartz => Defaults {
            n: 2048,
            tmax: 0.05,
            norm: NormKind::DiscreteL2,
            coeffs: CoefficientMode::Real,
        },
        ProblemId::ToyOde => Defaults {
            n: 8,
            tmax: 0.5,
            norm: NormKind::DiscreteInfinity,
            coeffs: CoefficientMode::Real,
        },
    }
}

struct Setup {
    problem: Box<dyn SplitProblem>,
    u0: State,
    scheme: SchemeSpec,
    tmax: f64,
    norm: NormKind,
    coeffs: CoefficientMode,
    reference: ReferenceSpec,
}

fn setup(c: &Common) -> Result<Setup, SplitError> {
    let d = defaults(c.problem);
    let n = c.n.unwrap_or(d.n);
    let (problem, u0): (Box<dyn SplitProblem>, State) = match c.problem {
        ProblemId::Brusselator => {
            let p = Brusselator::new(BrusselatorParams::default(), n)?;
            let u0 = p.initial()?;
            (Box::new(p), u0)
        }
        ProblemId::KdvSoliton | ProblemId::KdvSchwartz => {
            let config = if c.problem == ProblemId::KdvSoliton {
                KdVConfig::soliton()
            } else {
                KdVConfig::schwartzian()
            };
            let p = KdV::new(config.with_n(n).with_inner_tol(c.inner_tol))?;
            let u0 = p.initial()?;
            (Box::new(p), u0)
        }
        ProblemId::ToyOde => {
            if c.n.is_some_and(|n| n != d.n) {
                return Err(SplitError::InvalidConfig(
                    "toy-ode uses a fixed 8-point grid".into(),
                ));
            }
            let p = ToyOde::new();
            let u0 = p.initial()?;
            (Box::new(p), u0)
        }
    };
    let coeffs = match c.coeffs {
        Some(CoeffArg::Real) => CoefficientMode::Real,
        Some(CoeffArg::Complex) => CoefficientMode::Complex,
        None => d.coeffs,
    };
    let iterated = || SchemeSpec::iterated_strang(c.iterations);
    let scheme = match c.scheme {
        SchemeId::Lie => SchemeSpec::lie(),
        SchemeId::Strang => SchemeSpec::strang(),
        SchemeId::IterStrang => iterated()?,
        SchemeId::TripleJump => SchemeSpec::triple_jump(SchemeSpec::strang(), 2, coeffs)?,
        SchemeId::IterTripleJump => SchemeSpec::triple_jump(iterated()?, 2, coeffs)?,
    }
    .with_inner_tol(c.inner_tol)
    .with_fixed_point_tol(c.fixed_point_tol);
    let has_exact = matches!(c.problem, ProblemId::KdvSoliton | ProblemId::ToyOde);
    let reference = match c.reference {
        ReferenceArg::Exact => ReferenceSpec::Exact,
        ReferenceArg::Auto if has_exact => ReferenceSpec::Exact,
        _ => ReferenceSpec::SelfReference {
            factor: c.ref_factor,
        },
    };
    let norm = match c.norm {
        Some(NormArg::Inf) => NormKind::DiscreteInfinity,
        Some(NormArg::L2) => NormKind::DiscreteL2,
        None => d.norm,
    };
    Ok(Setup {
        problem,
        u0,
        scheme,
        tmax: c.tmax.unwrap_or(d.tmax),
        norm,
        coeffs,
        reference,
    })
}

fn sweep(args: &StudyArgs, tmax: f64, problem: ProblemId) -> Result<Vec<f64>, SplitError> {
    let default_div = if problem == ProblemId::ToyOde {
        8.0
    } else {
        16.0
    };
    let tau_max = args.tau_max.unwrap_or(tmax / default_div);
    let count = match (args.tau_min, args.tau_count) {
        (Some(tau_min), _) => {
            let ratio = (tau_max / tau_min).log2();
            if !(ratio.is_finite() && ratio >= 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
                return Err(SplitError::InvalidConfig(format!(
                    "tau-max / tau-min = {} is not a power of two",
                    tau_max / tau_min
                )));
            }
            ratio.round() as usize + 1
        }
        (None, Some(count)) => count,
        (None, None) => 6,
    };
    Ok(dyadic_taus(tau_max, count))
}

fn study(args: &StudyArgs) -> Result<(), SplitError> {
    let s = setup(&args.common)?;
    let taus = sweep(args, s.tmax, args.common.problem)?;
    let mut config = StudyConfig::new(s.scheme, s.tmax, taus, s.norm);
    config.reference = s.reference;
    config.reference_mode = s.coeffs;
    config.max_ref_floor = args.common.ref_floor_max;
    config.threads = args.common.threads;
    let result = run_study(s.problem.as_ref(), &s.u0, &config)?;
    let csv = format_csv(&result);
    match &args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(plot) = &args.plot {
        let csv_name = args
            .out
            .as_ref()
            .map_or_else(|| "study.csv".to_string(), |p| p.display().to_string());
        let image = plot.with_extension("png").display().to_string();
        let script = gnuplot_script(&[(csv_name, result.scheme.clone())], &[2, 3, 4], &image);
        std::fs::write(plot, script)?;
    }
    match result.fitted_order {
        Some(p) => eprintln!(
            "fitted order {p:.3} over {} rows (reference floor {:.2e})",
            result.fit_window.len(),
            result.ref_floor
        ),
        None => eprintln!("too few rows inside the fit window for an order estimate"),
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), SplitError> {
    let s = setup(&args.common)?;
    let tau = args.tau.unwrap_or(s.tmax / 64.0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.common.threads.unwrap_or(0))
        .build()
        .map_err(|e| SplitError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        let (u, diag) = integrate(s.problem.as_ref(), &s.scheme, tau, s.tmax, &s.u0)?;
        let reference = reference_solution(
            s.problem.as_ref(),
            s.tmax,
            &s.u0,
            s.reference,
            tau,
            s.coeffs,
            args.common.inner_tol,
            s.norm,
            args.common.ref_floor_max,
        )?;
        let error = u.distance(&reference.state, s.norm)?;
        println!("problem={}", s.problem.name());
        println!("scheme={}", s.scheme.name());
        println!("tau={tau:e}");
        println!("steps={}", diag.steps);
        println!("iterations={}", diag.iterations_used);
        if let Some(q) = diag.max_contraction_ratio {
            println!("max_contraction_ratio={q:e}");
        }
        println!("error={error:e}");
        println!("ref_floor={:e}", reference.floor);
        for w in &diag.warnings {
            eprintln!("warning: {w}");
        }
        Ok(())
    })
}

fn report(err: &SplitError) {
    let (step, inner) = match err {
        SplitError::AtStep { index, source } => (format!(" step={index}"), source.as_ref()),
        _ => (String::new(), err),
    };
    let message = inner.to_string().replace('"', "'");
    eprintln!("error kind={}{step} message=\"{message}\"", err.kind());
}

fn exit_code(err: &SplitError) -> ExitCode {
    match err.kind() {
        ErrorKind::Config | ErrorKind::Io => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Study(args) => study(args),
        Command::Run(args) => run(args),
        Command::Verify => {
            let checks = verify::run_all();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if checks.iter().all(|c| c.passed) {
                return ExitCode::SUCCESS;
            }
            eprintln!("error kind=VERIFY message=\"built-in checks failed\"");
            return ExitCode::from(3);
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            exit_code(&e)
        }
    }
}
