//! Reproduction harness: built-in problems, accuracy and stability sweeps,
//! CSV output and the command-line front end.

pub mod cli;
pub mod expr;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{integrate_unchecked, terminal_error, IvProblem, SolverConfig};
use crate::stability::{
    a_stability_scan, RegionGrid, StabilityReport, DEFAULT_PRECISION_BITS, MIN_PRECISION_BITS,
};
use crate::tableau::Family;

pub use expr::{parse_rhs, Expr};

pub const PRECISION_ENV: &str = "COLLOC_PRECISION_BITS";
pub const MAX_SWEEP_STAGES: usize = 60;

/// `y' = y`, `y(0) = 1` on `[0, 1]`.
pub fn example1() -> IvProblem {
    IvProblem::new(
        "example1",
        |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0],
        0.0,
        vec![1.0],
        1.0,
    )
    .with_exact(|t| vec![t.exp()])
    .expect("exact solution matches y0")
}

/// `y' = 2y/t³`, `y(1) = 1` on `[1, 3]`, solution `exp(1 - 1/t²)`.
pub fn example2() -> IvProblem {
    IvProblem::new(
        "example2",
        |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = 2.0 * y[0] / t.powf(3.0),
        1.0,
        vec![1.0],
        3.0,
    )
    .with_exact(|t| vec![(1.0 - 1.0 / (t * t)).exp()])
    .expect("exact solution matches y0")
}

/// Named problems. The built-ins cannot be replaced.
#[derive(Clone, Debug)]
pub struct ProblemRegistry {
    problems: BTreeMap<String, IvProblem>,
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProblemRegistry {
    pub const BUILTIN: [&'static str; 2] = ["example1", "example2"];

    pub fn builtin() -> Self {
        let problems = [example1(), example2()]
            .into_iter()
            .map(|p| (p.name.clone(), p))
            .collect();
        Self { problems }
    }

    pub fn get(&self, name: &str) -> Result<IvProblem> {
        self.problems
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownProblem(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.problems.keys().map(String::as_str)
    }

    pub fn register(&mut self, problem: IvProblem) -> Result<()> {
        if self.problems.contains_key(&problem.name) {
            return Err(Error::Domain(format!(
                "problem `{}` already exists",
                problem.name
            )));
        }
        self.problems.insert(problem.name.clone(), problem);
        Ok(())
    }
}

/// Scalar problem `y' = expr(t, y)`; it has no exact solution.
pub fn problem_from_expr(expr: Expr, t0: f64, y0: f64, tf: f64) -> IvProblem {
    let name = expr.to_string();
    let expr = Arc::new(expr);
    IvProblem::new(
        name,
        move |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = expr.eval(t, y[0]),
        t0,
        vec![y0],
        tf,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub family: Family,
    pub s: usize,
    /// Terminal error of the last iterate; NaN only if that iterate is not
    /// finite.
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Default stage range per family.
pub fn default_stage_range(family: Family) -> (usize, usize) {
    match family {
        Family::NewtonCotes => (2, 40),
        Family::ClenshawCurtis => (2, 60),
        Family::GaussLegendre | Family::Custom => (1, 40),
    }
}

/// Terminal error for every `(family, s)` cell. Cells run in parallel; rows
/// come back ordered by family (as given) then `s`. Stage iterations that
/// fail to converge are recorded, not fatal.
pub fn accuracy_sweep(
    problem: &IvProblem,
    families: &[Family],
    s_range: Option<(usize, usize)>,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if problem.exact.is_none() {
        return Err(Error::MissingExactSolution(problem.name.clone()));
    }
    let mut cells = Vec::new();
    for &family in families {
        if family == Family::Custom {
            return Err(Error::Domain(
                "sweeps need a named family (cc, gl or nc)".into(),
            ));
        }
        let (lo, hi) = s_range.unwrap_or_else(|| default_stage_range(family));
        if lo > hi || hi > MAX_SWEEP_STAGES {
            return Err(Error::Domain(format!(
                "stage range {lo}..{hi} must be increasing and end at or below {MAX_SWEEP_STAGES}"
            )));
        }
        cells.extend((lo.max(family.min_stages())..=hi).map(|s| (family, s)));
    }
    cells
        .into_par_iter()
        .map(|(family, s)| {
            let tableau = family.tableau(s)?;
            let out = integrate_unchecked(problem, &tableau, n_steps, config)?;
            let error = if out.y_final.iter().all(|v| v.is_finite()) {
                terminal_error(problem, &out.y_final)?
            } else {
                f64::NAN
            };
            Ok(SweepRow {
                family,
                s,
                error,
                iterations: out.total_iterations(),
                converged: out.converged,
            })
        })
        .collect()
}

/// Least-squares slope of `log10(error)` against `s` over the leading rows
/// of `family` whose error stays above `floor`.
pub fn pre_floor_slope(rows: &[SweepRow], family: Family, floor: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.family == family)
        .take_while(|r| r.error.is_finite() && r.error > floor)
        .map(|r| (r.s as f64, r.error.log10()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    Some(crate::solver::least_squares_slope(&points))
}

/// Precision for stability scans: the explicit value if given, otherwise
/// `COLLOC_PRECISION_BITS`, otherwise the default.
pub fn resolve_precision(flag: Option<u32>) -> Result<u32> {
    let bits = match flag {
        Some(b) => b,
        None => match std::env::var(PRECISION_ENV) {
            Ok(text) => text.trim().parse::<u32>().map_err(|_| {
                Error::Domain(format!(
                    "{PRECISION_ENV} must be a positive integer, got `{text}`"
                ))
            })?,
            Err(_) => DEFAULT_PRECISION_BITS,
        },
    };
    if bits < MIN_PRECISION_BITS {
        return Err(Error::Domain(format!(
            "precision must be at least {MIN_PRECISION_BITS} bits, got {bits}"
        )));
    }
    Ok(bits)
}

pub fn stability_sweep(
    s_min: usize,
    s_max: usize,
    precision_bits: u32,
) -> Result<Vec<StabilityReport>> {
    a_stability_scan(s_min, s_max, precision_bits)
}

/// Shortest round-trip decimal; scientific when `|x| < 1e-3` or `|x| >= 1e6`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn write_accuracy_csv(rows: &[SweepRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "family,s,error,iterations,converged")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.family.tag(),
            r.s,
            format_number(r.error),
            r.iterations,
            r.converged
        )?;
    }
    Ok(())
}

pub fn write_stability_csv(reports: &[StabilityReport], mut out: impl Write) -> Result<()> {
    writeln!(out, "s,min_re,a_stable,precision_bits")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{}",
            r.s,
            format_number(r.min_re),
            r.a_stable,
            r.precision_bits
        )?;
    }
    Ok(())
}

pub fn write_region_csv(grid: &RegionGrid, mut out: impl Write) -> Result<()> {
    writeln!(out, "re,im,abs_r")?;
    for (re, im, abs_r) in grid.samples() {
        writeln!(
            out,
            "{},{},{}",
            format_number(re),
            format_number(im),
            format_number(abs_r)
        )?;
    }
    Ok(())
}
