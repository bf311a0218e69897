use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::solver::{integrate, terminal_error, IvProblem, SolverConfig, Strategy};
use crate::stability::stability_region_grid;
use crate::tableau::{order_of, CollocationKernel, Family};

use super::{
    accuracy_sweep, format_number, parse_rhs, problem_from_expr, resolve_precision,
    stability_sweep, write_accuracy_csv, write_region_csv, write_stability_csv, ProblemRegistry,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "colloc",
    version,
    about = "Collocation Runge-Kutta methods: tableaus, integration, stability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a Butcher tableau.
    Tableau {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        s: usize,
        /// Emit JSON instead of the text layout.
        #[arg(long)]
        json: bool,
    },
    /// Integrate a problem with fixed steps.
    Solve(SolveArgs),
    /// Run an accuracy or stability sweep and write CSV.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Sample |r(z)| on a grid and write CSV.
    Region(RegionArgs),
    /// Print the order report of a collocation method.
    Order {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        s: usize,
    },
}

#[derive(Debug, Args)]
pub struct StepperArgs {
    #[arg(long, default_value = "fixed-point")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 1e-14)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    pub max_iter: usize,
}

impl StepperArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            strategy: self.strategy,
            jacobian: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Built-in problem name.
    #[arg(long, conflicts_with = "rhs", required_unless_present = "rhs")]
    pub problem: Option<String>,
    /// Scalar right-hand side in `t` and `y`, e.g. "2*y/t^3".
    #[arg(long)]
    pub rhs: Option<String>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long)]
    pub tf: Option<f64>,
    #[arg(long, default_value = "cc")]
    pub family: Family,
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[command(flatten)]
    pub stepper: StepperArgs,
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// Terminal error against the number of stages.
    Accuracy {
        #[arg(long, default_value = "example2")]
        problem: String,
        /// Comma-separated family tags.
        #[arg(long, value_delimiter = ',', default_value = "cc,gl,nc")]
        families: Vec<Family>,
        #[arg(long = "s-min")]
        s_min: Option<usize>,
        #[arg(long = "s-max")]
        s_max: Option<usize>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[command(flatten)]
        stepper: StepperArgs,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest real part of the Clenshaw-Curtis stability poles.
    Stability {
        #[arg(long = "s-min", default_value_t = 2)]
        s_min: usize,
        #[arg(long = "s-max", default_value_t = 78)]
        s_max: usize,
        /// Mantissa bits; falls back to COLLOC_PRECISION_BITS, then 256.
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, default_value = "cc")]
    pub family: Family,
    #[arg(long)]
    pub s: usize,
    #[arg(long = "re-min", default_value_t = -5.0, allow_negative_numbers = true)]
    pub re_min: f64,
    #[arg(long = "re-max", default_value_t = 5.0, allow_negative_numbers = true)]
    pub re_max: f64,
    #[arg(long = "im-min", default_value_t = -5.0, allow_negative_numbers = true)]
    pub im_min: f64,
    #[arg(long = "im-max", default_value_t = 5.0, allow_negative_numbers = true)]
    pub im_max: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 101)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn open_output<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn solve_problem(args: &SolveArgs) -> Result<IvProblem> {
    if let Some(text) = &args.rhs {
        let expr = parse_rhs(text)?;
        return Ok(problem_from_expr(
            expr,
            args.t0.unwrap_or(0.0),
            args.y0.unwrap_or(1.0),
            args.tf.unwrap_or(1.0),
        ));
    }
    let name = args.problem.as_deref().unwrap_or_default();
    let base = ProblemRegistry::builtin().get(name)?;
    if args.t0.is_none() && args.y0.is_none() && args.tf.is_none() {
        return Ok(base);
    }
    let mut p = IvProblem {
        t0: args.t0.unwrap_or(base.t0),
        y0: args.y0.map_or(base.y0.clone(), |y| vec![y]),
        tf: args.tf.unwrap_or(base.tf),
        exact: None,
        ..base.clone()
    };
    // the exact solution survives only if it still passes through (t0, y0)
    if let Some(exact) = base.exact {
        let e = exact.clone();
        if let Ok(with) = p.clone().with_exact(move |t| e(t)) {
            p = with;
        }
    }
    Ok(p)
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Tableau { family, s, json } => {
            let t = family.tableau(s)?;
            if json {
                writeln!(stdout, "{}", t.to_json()?)?;
            } else {
                writeln!(stdout, "{t}")?;
            }
        }
        Command::Solve(args) => {
            let problem = solve_problem(&args)?;
            let tableau = args.family.tableau(args.s)?;
            let out = integrate(&problem, &tableau, args.steps, &args.stepper.config())?;
            let y: Vec<String> = out.y_final.iter().map(|v| format_number(*v)).collect();
            writeln!(stdout, "problem: {}", problem.name)?;
            writeln!(
                stdout,
                "method: {} s={} steps={}",
                args.family, args.s, args.steps
            )?;
            writeln!(stdout, "t: {}", format_number(problem.tf))?;
            writeln!(stdout, "y: {}", y.join(" "))?;
            if problem.exact.is_some() {
                writeln!(
                    stdout,
                    "error: {}",
                    format_number(terminal_error(&problem, &out.y_final)?)
                )?;
            }
            writeln!(stdout, "iterations: {}", out.total_iterations())?;
        }
        Command::Sweep(SweepCommand::Accuracy {
            problem,
            families,
            s_min,
            s_max,
            steps,
            stepper,
            out,
        }) => {
            let p = ProblemRegistry::builtin().get(&problem)?;
            let range = match (s_min, s_max) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or(1), hi.unwrap_or(super::MAX_SWEEP_STAGES))),
            };
            let rows = accuracy_sweep(&p, &families, range, steps, &stepper.config())?;
            let mut w = open_output(&out, stdout)?;
            write_accuracy_csv(&rows, &mut w)?;
            w.flush()?;
        }
        Command::Sweep(SweepCommand::Stability {
            s_min,
            s_max,
            bits,
            out,
        }) => {
            let bits = resolve_precision(bits)?;
            let reports = stability_sweep(s_min, s_max, bits)?;
            let mut w = open_output(&out, stdout)?;
            write_stability_csv(&reports, &mut w)?;
            w.flush()?;
        }
        Command::Region(args) => {
            if !(args.re_min <= args.re_max && args.im_min <= args.im_max) {
                return Err(Error::Domain("grid ranges must satisfy min <= max".into()));
            }
            let t = args.family.tableau(args.s)?;
            let grid = stability_region_grid(
                &t,
                (args.re_min, args.re_max),
                (args.im_min, args.im_max),
                (args.resolution, args.resolution),
            )?;
            let mut w = open_output(&args.out, stdout)?;
            write_region_csv(&grid, &mut w)?;
            w.flush()?;
        }
        Command::Order { family, s } => {
            let kernel = match family {
                Family::ClenshawCurtis => CollocationKernel::clenshaw_curtis(s)?,
                _ => CollocationKernel::for_tableau(&family.tableau(s)?),
            };
            writeln!(stdout, "{}", order_of(&kernel))?;
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 for bad input, 2 for numerical
/// failures.
pub fn cli_main<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USER
            }
        }
    }
}
