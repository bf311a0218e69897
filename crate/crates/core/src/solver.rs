//! Fixed-step implicit Runge-Kutta integration.
//!
//! One step solves the stage system
//! `Y_i = y_n + h Σ_j a_ij f(t_n + c_j h, Y_j)` and advances
//! `y_{n+1} = y_n + h Σ_j b_j f(t_n + c_j h, Y_j)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tableau::ButcherTableau;

/// Right-hand side `f(t, y)` of `y' = f(t, y)`, written into `dy`.
pub trait Rhs: Send + Sync {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self(t, y, dy)
    }
}

pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// Jacobian `∂f/∂y` at `(t, y)`, row-major `n × n`.
pub type JacobianFn = Arc<dyn Fn(f64, &[f64]) -> DMatrix<f64> + Send + Sync>;

/// Tolerance for `exact(t0) == y0` when an exact solution is attached.
const EXACT_MATCH_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct IvProblem {
    pub name: String,
    pub rhs: Arc<dyn Rhs>,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub tf: f64,
    pub exact: Option<ExactFn>,
}

impl fmt::Debug for IvProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvProblem")
            .field("name", &self.name)
            .field("t0", &self.t0)
            .field("y0", &self.y0)
            .field("tf", &self.tf)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl IvProblem {
    pub fn new(
        name: impl Into<String>,
        rhs: impl Rhs + 'static,
        t0: f64,
        y0: Vec<f64>,
        tf: f64,
    ) -> Self {
        Self {
            name: name.into(),
            rhs: Arc::new(rhs),
            t0,
            y0,
            tf,
            exact: None,
        }
    }

    /// Attach an exact solution; it must reproduce `y0` at `t0`.
    pub fn with_exact(
        mut self,
        exact: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let at_t0 = exact(self.t0);
        if at_t0.len() != self.y0.len() {
            return Err(Error::LengthMismatch {
                expected: self.y0.len(),
                got: at_t0.len(),
            });
        }
        let worst = max_abs_diff(&at_t0, &self.y0);
        if !(worst <= EXACT_MATCH_TOL) {
            return Err(Error::Domain(format!(
                "exact solution of `{}` misses y0 by {worst:e}",
                self.name
            )));
        }
        self.exact = Some(Arc::new(exact));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.y0.is_empty() {
            return Err(Error::Domain("state dimension must be at least 1".into()));
        }
        if !(self.tf > self.t0) {
            return Err(Error::Domain(format!(
                "final time {} must exceed initial time {}",
                self.tf, self.t0
            )));
        }
        Ok(())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    #[default]
    FixedPoint,
    SimplifiedNewton,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fixed-point" | "fixedpoint" | "fp" => Ok(Strategy::FixedPoint),
            "newton" | "simplified-newton" | "simplifiednewton" => Ok(Strategy::SimplifiedNewton),
            other => Err(Error::Domain(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone)]
pub struct SolverConfig {
    /// Stage residual tolerance, max norm scaled by `1 + ‖y_n‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
    /// Finite differences are used when absent.
    pub jacobian: Option<JacobianFn>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iter: 100,
            strategy: Strategy::FixedPoint,
            jacobian: None,
        }
    }
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("tol", &self.tol)
            .field("max_iter", &self.max_iter)
            .field("strategy", &self.strategy)
            .field("jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SolverConfig {
    pub fn newton() -> Self {
        Self {
            strategy: Strategy::SimplifiedNewton,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub y_next: Vec<f64>,
    pub stages: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Last scaled stage residual.
    pub residual: f64,
}

/// One implicit step; fails with [`Error::NonConvergence`] when the stage
/// iteration does not reach `config.tol`.
pub fn irk_step(
    tableau: &ButcherTableau,
    rhs: &dyn Rhs,
    tn: f64,
    yn: &[f64],
    h: f64,
    config: &SolverConfig,
) -> Result<StepResult> {
    let out = irk_step_unchecked(tableau, rhs, tn, yn, h, config)?;
    if out.converged {
        Ok(out)
    } else {
        Err(Error::NonConvergence {
            step: None,
            iterations: out.iterations,
            residual: out.residual,
        })
    }
}

/// Like [`irk_step`] but returns the last iterate with `converged == false`
/// instead of failing.
pub fn irk_step_unchecked(
    tableau: &ButcherTableau,
    rhs: &dyn Rhs,
    tn: f64,
    yn: &[f64],
    h: f64,
    config: &SolverConfig,
) -> Result<StepResult> {
    config.validate()?;
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "step size must be positive, got {h}"
        )));
    }
    if yn.is_empty() {
        return Err(Error::Domain("state dimension must be at least 1".into()));
    }
    let mut stage = StageSystem::new(tableau, rhs, tn, yn, h);
    let (iterations, converged, residual) = match config.strategy {
        Strategy::FixedPoint => stage.fixed_point(config),
        Strategy::SimplifiedNewton => stage.simplified_newton(config),
    };
    let y_next = stage.advance();
    Ok(StepResult {
        y_next,
        stages: stage.y,
        iterations,
        converged,
        residual,
    })
}

struct StageSystem<'a> {
    tableau: &'a ButcherTableau,
    rhs: &'a dyn Rhs,
    tn: f64,
    yn: &'a [f64],
    h: f64,
    /// stage values Y_i
    y: Vec<Vec<f64>>,
    /// f(t_n + c_i h, Y_i)
    f: Vec<Vec<f64>>,
    scale: f64,
}

impl<'a> StageSystem<'a> {
    fn new(tableau: &'a ButcherTableau, rhs: &'a dyn Rhs, tn: f64, yn: &'a [f64], h: f64) -> Self {
        let s = tableau.s;
        let n = yn.len();
        Self {
            tableau,
            rhs,
            tn,
            yn,
            h,
            y: vec![yn.to_vec(); s],
            f: vec![vec![0.0; n]; s],
            scale: 1.0 + max_norm(yn),
        }
    }

    fn eval_stages(&mut self) {
        for (i, (yi, fi)) in self.y.iter().zip(self.f.iter_mut()).enumerate() {
            self.rhs.eval(self.tn + self.tableau.c[i] * self.h, yi, fi);
        }
    }

    /// `y_n + h Σ_j a_ij F_j` for each stage.
    fn stage_map(&self) -> Vec<Vec<f64>> {
        let n = self.yn.len();
        self.tableau
            .a
            .iter()
            .map(|row| {
                let mut out = self.yn.to_vec();
                for (aij, fj) in row.iter().zip(&self.f) {
                    if *aij == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        out[k] += self.h * aij * fj[k];
                    }
                }
                out
            })
            .collect()
    }

    fn fixed_point(&mut self, config: &SolverConfig) -> (usize, bool, f64) {
        let mut residual = f64::INFINITY;
        for it in 1..=config.max_iter {
            self.eval_stages();
            let next = self.stage_map();
            residual = self
                .y
                .iter()
                .zip(&next)
                .map(|(a, b)| max_abs_diff(a, b))
                .fold(0.0, f64::max)
                / self.scale;
            self.y = next;
            if residual <= config.tol {
                return (it, true, residual);
            }
            if !residual.is_finite() {
                return (it, false, residual);
            }
        }
        (config.max_iter, false, residual)
    }

    fn jacobian(&self, config: &SolverConfig) -> DMatrix<f64> {
        if let Some(jac) = &config.jacobian {
            return jac(self.tn, self.yn);
        }
        let n = self.yn.len();
        let mut f0 = vec![0.0; n];
        self.rhs.eval(self.tn, self.yn, &mut f0);
        let mut jac = DMatrix::zeros(n, n);
        let mut y = self.yn.to_vec();
        let mut f1 = vec![0.0; n];
        for k in 0..n {
            let delta = f64::EPSILON.sqrt() * (1.0 + self.yn[k].abs());
            y[k] = self.yn[k] + delta;
            self.rhs.eval(self.tn, &y, &mut f1);
            for i in 0..n {
                jac[(i, k)] = (f1[i] - f0[i]) / delta;
            }
            y[k] = self.yn[k];
        }
        jac
    }

    /// Newton on the stage increments `Z_i = Y_i - y_n` with the Jacobian
    /// frozen at `(t_n, y_n)`: `(I - h A⊗J) ΔZ = -(Z - h A F)`.
    fn simplified_newton(&mut self, config: &SolverConfig) -> (usize, bool, f64) {
        let s = self.tableau.s;
        let n = self.yn.len();
        let jac = self.jacobian(config);
        let dim = s * n;
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for i in 0..s {
            for j in 0..s {
                let aij = self.tableau.a[i][j];
                if aij == 0.0 {
                    continue;
                }
                for p in 0..n {
                    for q in 0..n {
                        m[(i * n + p, j * n + q)] -= self.h * aij * jac[(p, q)];
                    }
                }
            }
        }
        let lu = m.lu();
        let mut residual = f64::INFINITY;
        for it in 1..=config.max_iter {
            self.eval_stages();
            let mapped = self.stage_map();
            let mut defect = DVector::zeros(dim);
            for i in 0..s {
                for p in 0..n {
                    defect[i * n + p] = self.y[i][p] - mapped[i][p];
                }
            }
            residual = defect.amax() / self.scale;
            if residual <= config.tol {
                return (it, true, residual);
            }
            if !residual.is_finite() {
                return (it, false, residual);
            }
            let Some(delta) = lu.solve(&(-defect)) else {
                return (it, false, residual);
            };
            for i in 0..s {
                for p in 0..n {
                    self.y[i][p] += delta[i * n + p];
                }
            }
        }
        (config.max_iter, false, residual)
    }

    /// `y_n + h Σ_j b_j f(t_n + c_j h, Y_j)` from the accepted stages.
    fn advance(&mut self) -> Vec<f64> {
        self.eval_stages();
        let mut out = self.yn.to_vec();
        for (bj, fj) in self.tableau.b.iter().zip(&self.f) {
            for (o, v) in out.iter_mut().zip(fj) {
                *o += self.h * bj * v;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integration {
    pub y_final: Vec<f64>,
    /// Stage iterations spent on each step.
    pub iterations: Vec<usize>,
    pub converged: bool,
    /// Index of the first step whose stage iteration did not converge.
    pub first_failure: Option<usize>,
    pub last_residual: f64,
}

impl Integration {
    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }
}

/// Fixed-step integration with `h = (tf - t0)/n_steps`; the first
/// non-convergent step aborts with its index.
pub fn integrate(
    problem: &IvProblem,
    tableau: &ButcherTableau,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Integration> {
    let out = integrate_unchecked(problem, tableau, n_steps, config)?;
    match out.first_failure {
        None => Ok(out),
        Some(step) => Err(Error::NonConvergence {
            step: Some(step),
            iterations: out.iterations[step],
            residual: out.last_residual,
        }),
    }
}

/// Runs every step even when stage iterations fail to converge, recording
/// the failure instead.
pub fn integrate_unchecked(
    problem: &IvProblem,
    tableau: &ButcherTableau,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Integration> {
    problem.validate()?;
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let h = (problem.tf - problem.t0) / n_steps as f64;
    let mut y = problem.y0.clone();
    let mut iterations = Vec::with_capacity(n_steps);
    let mut first_failure = None;
    let mut last_residual = 0.0;
    for k in 0..n_steps {
        let tn = problem.t0 + k as f64 * h;
        let step = irk_step_unchecked(tableau, problem.rhs.as_ref(), tn, &y, h, config)?;
        iterations.push(step.iterations);
        last_residual = step.residual;
        if !step.converged {
            first_failure.get_or_insert(k);
            if first_failure == Some(k) && !step.y_next.iter().all(|v| v.is_finite()) {
                y = step.y_next;
                break;
            }
        }
        y = step.y_next;
    }
    Ok(Integration {
        y_final: y,
        iterations,
        converged: first_failure.is_none(),
        first_failure,
        last_residual,
    })
}

/// Max-norm distance between `y_final` and the exact solution at `tf`.
pub fn terminal_error(problem: &IvProblem, y_final: &[f64]) -> Result<f64> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::MissingExactSolution(problem.name.clone()))?;
    let y = exact(problem.tf);
    if y.len() != y_final.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            got: y_final.len(),
        });
    }
    Ok(max_abs_diff(&y, y_final))
}

/// Least-squares slope of `ln(error)` against `ln(h)` over the given step
/// counts; a method of order `p` gives a slope close to `p`.
pub fn estimate_order(
    tableau: &ButcherTableau,
    problem: &IvProblem,
    step_counts: &[usize],
    config: &SolverConfig,
) -> Result<f64> {
    if step_counts.len() < 3 {
        return Err(Error::Domain(
            "order estimation needs at least 3 step counts".into(),
        ));
    }
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::MissingExactSolution(problem.name.clone()))?;
    let floor = 100.0 * f64::EPSILON * (1.0 + max_norm(&exact(problem.tf)));
    let mut points = Vec::with_capacity(step_counts.len());
    for &n in step_counts {
        let out = integrate(problem, tableau, n, config)?;
        let err = terminal_error(problem, &out.y_final)?;
        if err <= floor {
            return Err(Error::RoundingFloor(err));
        }
        let h = (problem.tf - problem.t0) / n as f64;
        points.push((h.ln(), err.ln()));
    }
    Ok(least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
