//! Collocation Butcher tableaus and the moment-based order test.
//!
//! All coefficients are assembled in extended precision and rounded to `f64`
//! only when the [`ButcherTableau`] is returned.

use std::fmt;
use std::str::FromStr;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::chebyshev::chebyshev_points_mp;
use crate::error::{Error, Result};
use crate::mp::{self, TABLEAU_PRECISION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "cc")]
    ClenshawCurtis,
    #[serde(rename = "gl")]
    GaussLegendre,
    #[serde(rename = "nc")]
    NewtonCotes,
    #[serde(rename = "custom")]
    Custom,
}

impl Family {
    pub const STANDARD: [Family; 3] = [
        Family::GaussLegendre,
        Family::ClenshawCurtis,
        Family::NewtonCotes,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::ClenshawCurtis => "cc",
            Family::GaussLegendre => "gl",
            Family::NewtonCotes => "nc",
            Family::Custom => "custom",
        }
    }

    /// Smallest node count the family's node formula accepts.
    pub fn min_stages(self) -> usize {
        match self {
            Family::GaussLegendre | Family::Custom => 1,
            Family::ClenshawCurtis | Family::NewtonCotes => 2,
        }
    }

    pub fn tableau(self, s: usize) -> Result<ButcherTableau> {
        match self {
            Family::ClenshawCurtis => cc_tableau(s),
            Family::GaussLegendre => gl_tableau(s),
            Family::NewtonCotes => nc_tableau(s),
            Family::Custom => Err(Error::Domain(
                "custom tableaus are built from explicit nodes".into(),
            )),
        }
    }

    fn is_symmetric(self) -> bool {
        !matches!(self, Family::Custom)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cc" | "clenshaw-curtis" => Ok(Family::ClenshawCurtis),
            "gl" | "gauss-legendre" => Ok(Family::GaussLegendre),
            "nc" | "newton-cotes" => Ok(Family::NewtonCotes),
            "custom" => Ok(Family::Custom),
            other => Err(Error::Domain(format!("unknown family `{other}`"))),
        }
    }
}

/// Runge-Kutta coefficients `(A, b, c)` of an `s`-stage method.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub s: usize,
    pub family: Family,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    /// Row-major `s × s` stage matrix.
    pub a: Vec<Vec<f64>>,
}

impl ButcherTableau {
    /// Check the structural invariants every collocation tableau satisfies.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let s = self.s;
        let bad = |msg: String| Err(Error::InvalidTableau(msg));
        if self.c.len() != s || self.b.len() != s || self.a.len() != s {
            return bad("dimension mismatch".into());
        }
        if self.a.iter().any(|row| row.len() != s) {
            return bad("stage matrix is not square".into());
        }
        if !self.c.windows(2).all(|w| w[0] < w[1]) {
            return bad("nodes are not strictly increasing".into());
        }
        if matches!(self.family, Family::ClenshawCurtis | Family::NewtonCotes)
            && (self.c[0] != 0.0 || self.c[s - 1] != 1.0)
        {
            return bad("endpoint nodes are not exactly 0 and 1".into());
        }
        let bsum: f64 = self.b.iter().sum();
        if (bsum - 1.0).abs() > tol {
            return bad(format!("weights sum to {bsum}"));
        }
        for (i, row) in self.a.iter().enumerate() {
            let r: f64 = row.iter().sum();
            if (r - self.c[i]).abs() > tol {
                return bad(format!("row {i} sums to {r}, node is {}", self.c[i]));
            }
        }
        if self.family.is_symmetric() {
            for i in 0..s {
                let j = s - 1 - i;
                if (self.c[i] + self.c[j] - 1.0).abs() > tol {
                    return bad(format!("nodes {i} and {j} are not symmetric"));
                }
                if (self.b[i] - self.b[j]).abs() > tol {
                    return bad(format!("weights {i} and {j} are not symmetric"));
                }
            }
        }
        if self.c[s - 1] == 1.0 && self.b != self.a[s - 1] {
            return bad("last node is 1 but b differs from the last row of A".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TableauJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TableauJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    /// Largest entrywise difference against another tableau of equal size.
    pub fn max_abs_diff(&self, other: &ButcherTableau) -> f64 {
        assert_eq!(self.s, other.s);
        let mut m: f64 = 0.0;
        for i in 0..self.s {
            m = m.max((self.c[i] - other.c[i]).abs());
            m = m.max((self.b[i] - other.b[i]).abs());
            for j in 0..self.s {
                m = m.max((self.a[i][j] - other.a[i][j]).abs());
            }
        }
        m
    }
}

impl fmt::Display for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family {} s = {}", self.family, self.s)?;
        for (ci, row) in self.c.iter().zip(&self.a) {
            write!(f, "{ci:>24.17e} |")?;
            for a in row {
                write!(f, " {a:>24.17e}")?;
            }
            writeln!(f)?;
        }
        write!(f, "{:>24} |", "")?;
        for b in &self.b {
            write!(f, " {b:>24.17e}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TableauJson {
    s: usize,
    family: Family,
    c: Vec<String>,
    b: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
}

fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidTableau(format!("`{s}` is not a number")))
}

impl From<&ButcherTableau> for TableauJson {
    fn from(t: &ButcherTableau) -> Self {
        let strs = |v: &[f64]| v.iter().copied().map(fmt_exact).collect();
        TableauJson {
            s: t.s,
            family: t.family,
            c: strs(&t.c),
            b: strs(&t.b),
            a: t.a.iter().map(|row| strs(row)).collect(),
        }
    }
}

impl TryFrom<TableauJson> for ButcherTableau {
    type Error = Error;

    fn try_from(raw: TableauJson) -> Result<Self> {
        let nums = |v: &[String]| v.iter().map(|x| parse_num(x)).collect::<Result<Vec<_>>>();
        let t = ButcherTableau {
            s: raw.s,
            family: raw.family,
            c: nums(&raw.c)?,
            b: nums(&raw.b)?,
            a: raw.a.iter().map(|row| nums(row)).collect::<Result<_>>()?,
        };
        if t.c.len() != t.s
            || t.b.len() != t.s
            || t.a.len() != t.s
            || t.a.iter().any(|r| r.len() != t.s)
        {
            return Err(Error::InvalidTableau(
                "array lengths disagree with `s`".into(),
            ));
        }
        Ok(t)
    }
}

fn round_matrix(a: &[Vec<Float>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| row.iter().map(Float::to_f64).collect())
        .collect()
}

/// Clenshaw-Curtis tableau from the closed-form cosine sums.
///
/// With `θ_i = (i-1)π/(s-1)` and `ξ_i = -cos θ_i`:
///
/// ```text
/// a_ij = w_j/(s-1) Σ''_k cos((k-1)θ_j) J_{i,k-1},   w_j = 1/2 on the two boundary columns, 1 otherwise
/// J_i0 = 2c_i
/// J_i1 = (1 - cos 2θ_i)/4
/// J_ik = (1 - cos (k+1)θ_i)/(2(k+1)) - (1 - cos (k-1)θ_i)/(2(k-1)),   k > 1
/// ```
///
/// `J_ik = (-1)^k ∫_{-1}^{ξ_i} T_k`, the sign absorbing `T_k(ξ_j) = (-1)^k cos kθ_j`.
/// `b` is the last row of `A` since `c_s = 1`.
pub fn cc_tableau(s: usize) -> Result<ButcherTableau> {
    if s < 2 {
        return Err(Error::Domain(format!(
            "Clenshaw-Curtis tableaus need s >= 2, got {s}"
        )));
    }
    let prec = TABLEAU_PRECISION;
    let n = s - 1;
    let period = 2 * n;
    let cos = mp::cos_table(n, prec);
    let cos_at = |m: usize| &cos[m % period];

    let xi = chebyshev_points_mp(s, prec)?;
    let c: Vec<Float> = xi
        .iter()
        .map(|x| (Float::with_val(prec, 1) + x) / 2u32)
        .collect();

    // J[i][k]
    let table: Vec<Vec<Float>> = (0..s)
        .map(|i| {
            (0..s)
                .map(|k| match k {
                    0 => Float::with_val(prec, &c[i] * 2u32),
                    1 => (Float::with_val(prec, 1) - cos_at(2 * i)) / 4u32,
                    _ => {
                        let up =
                            (Float::with_val(prec, 1) - cos_at((k + 1) * i)) / (2 * (k + 1)) as u32;
                        let down =
                            (Float::with_val(prec, 1) - cos_at((k - 1) * i)) / (2 * (k - 1)) as u32;
                        up - down
                    }
                })
                .collect()
        })
        .collect();

    let a: Vec<Vec<Float>> = (0..s)
        .map(|i| {
            (0..s)
                .map(|j| {
                    let mut sum = Float::new(prec);
                    for k in 0..s {
                        let term = Float::with_val(prec, cos_at(k * j) * &table[i][k]);
                        if k == 0 || k == n {
                            sum += term / 2u32;
                        } else {
                            sum += term;
                        }
                    }
                    let boundary = j == 0 || j == n;
                    let denom = if boundary { 2 * n } else { n } as u32;
                    sum / denom
                })
                .collect()
        })
        .collect();

    let a = round_matrix(&a);
    let b = a[n].clone();
    Ok(ButcherTableau {
        s,
        family: Family::ClenshawCurtis,
        c: c.iter().map(Float::to_f64).collect(),
        b,
        a,
    })
}

/// Collocation tableau for arbitrary distinct nodes in `[0, 1]`:
/// `a_ij = ∫_0^{c_i} l_j`, `b_j = ∫_0^1 l_j` with Lagrange basis `l_j`.
pub fn collocation_tableau(nodes: &[f64]) -> Result<ButcherTableau> {
    let prec = TABLEAU_PRECISION;
    let mp_nodes: Vec<Float> = nodes.iter().map(|&x| mp::float(prec, x)).collect();
    collocation_tableau_mp(&mp_nodes, Family::Custom)
}

fn validate_nodes(nodes: &[Float]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Domain(
            "at least one collocation node is required".into(),
        ));
    }
    for (i, w) in nodes.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(Error::DuplicateNodes { index: i + 1 });
        }
    }
    if nodes[0] < 0 || nodes[nodes.len() - 1] > 1 {
        return Err(Error::Domain("collocation nodes must lie in [0, 1]".into()));
    }
    Ok(())
}

fn collocation_tableau_mp(nodes: &[Float], family: Family) -> Result<ButcherTableau> {
    validate_nodes(nodes)?;
    let s = nodes.len();
    let prec = nodes[0].prec();

    // barycentric weights 1/∏_{k≠j}(c_j - c_k)
    let weights: Vec<Float> = (0..s)
        .map(|j| {
            let mut p = Float::with_val(prec, 1);
            for k in (0..s).filter(|&k| k != j) {
                p *= Float::with_val(prec, &nodes[j] - &nodes[k]);
            }
            p.recip()
        })
        .collect();

    // Gauss-Legendre with s/2 + 1 points is exact for degree s - 1
    let (qx, qw) = legendre_rule_mp(s / 2 + 1, prec)?;

    let integrate_to = |upper: &Float| -> Vec<Float> {
        let mut acc = vec![Float::new(prec); s];
        if upper.is_zero() {
            return acc;
        }
        let half = Float::with_val(prec, upper / 2u32);
        let mut prefix = vec![Float::new(prec); s + 1];
        let mut suffix = vec![Float::new(prec); s + 1];
        for (x, w) in qx.iter().zip(&qw) {
            let t = Float::with_val(prec, x + 1u32) * &half;
            prefix[0] = Float::with_val(prec, 1);
            for k in 0..s {
                prefix[k + 1] = Float::with_val(prec, &t - &nodes[k]) * &prefix[k];
            }
            suffix[s] = Float::with_val(prec, 1);
            for k in (0..s).rev() {
                suffix[k] = Float::with_val(prec, &t - &nodes[k]) * &suffix[k + 1];
            }
            let scale = Float::with_val(prec, w * &half);
            for j in 0..s {
                let l = Float::with_val(prec, &prefix[j] * &suffix[j + 1]) * &weights[j];
                acc[j] += l * &scale;
            }
        }
        acc
    };

    let a: Vec<Vec<Float>> = nodes.iter().map(integrate_to).collect();
    let a = round_matrix(&a);
    let b = if nodes[s - 1] == 1 {
        a[s - 1].clone()
    } else {
        integrate_to(&Float::with_val(prec, 1))
            .iter()
            .map(Float::to_f64)
            .collect()
    };
    Ok(ButcherTableau {
        s,
        family,
        c: nodes.iter().map(Float::to_f64).collect(),
        b,
        a,
    })
}

/// Legendre `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let d = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, d)
}

fn legendre_mp(n: usize, x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut prev = Float::with_val(prec, 1);
    let mut cur = x.clone();
    if n == 0 {
        return (prev, Float::new(prec));
    }
    for k in 1..n {
        let next = (Float::with_val(prec, x * &cur) * (2 * k + 1) as u32
            - Float::with_val(prec, &prev * k as u32))
            / (k + 1) as u32;
        prev = cur;
        cur = next;
    }
    let x2m1 = Float::with_val(prec, x * x) - 1u32;
    let d = (Float::with_val(prec, x * &cur) - &prev) * n as u32 / x2m1;
    (cur, d)
}

/// Positive roots (descending) of `P_n` on `(-1, 1)` in double precision by
/// damped Newton from Chebyshev-angle guesses.
fn legendre_roots_f64(n: usize) -> Result<Vec<f64>> {
    let half = n.div_ceil(2);
    let mut roots = Vec::with_capacity(half);
    for k in 1..=half {
        let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre_f64(n, x);
            let mut step = p / dp;
            // backtrack while the step does not reduce |P_n|
            let mut tries = 0;
            while tries < 30 && legendre_f64(n, x - step).0.abs() > p.abs() && step.abs() > 1e-15 {
                step *= 0.5;
                tries += 1;
            }
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::LegendreNonConvergence(n));
        }
        roots.push(x);
    }
    Ok(roots)
}

/// Gauss-Legendre rule on `[-1, 1]` in extended precision, nodes ascending.
fn legendre_rule_mp(n: usize, prec: u32) -> Result<(Vec<Float>, Vec<Float>)> {
    let guesses = legendre_roots_f64(n)?;
    let tol = mp::pow2_neg(prec, prec.saturating_sub(8));
    let mut positive = Vec::with_capacity(guesses.len());
    for (idx, g) in guesses.iter().enumerate() {
        let mut x = if n % 2 == 1 && idx == guesses.len() - 1 {
            Float::new(prec)
        } else {
            mp::float(prec, *g)
        };
        let mut converged = x.is_zero();
        for _ in 0..60 {
            if converged {
                break;
            }
            let (p, dp) = legendre_mp(n, &x);
            let step = p / dp;
            x -= &step;
            converged = Float::with_val(prec, step.abs_ref()) <= tol;
        }
        if !converged {
            return Err(Error::LegendreNonConvergence(n));
        }
        let (_, dp) = legendre_mp(n, &x);
        let one_minus_x2 = Float::with_val(prec, 1) - Float::with_val(prec, &x * &x);
        let w = Float::with_val(prec, 2) / (one_minus_x2 * dp.square());
        positive.push((x, w));
    }
    // assemble ascending, mirroring the positive half
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (x, w) in &positive {
        if !x.is_zero() {
            nodes.push(-x.clone());
            weights.push(w.clone());
        }
    }
    for (x, w) in positive.iter().rev() {
        nodes.push(x.clone());
        weights.push(w.clone());
    }
    Ok((nodes, weights))
}

fn gauss_legendre_nodes_mp(s: usize, prec: u32) -> Result<Vec<Float>> {
    if s < 1 {
        return Err(Error::Domain("Gauss-Legendre needs s >= 1".into()));
    }
    let (x, _) = legendre_rule_mp(s, prec)?;
    let mut c: Vec<Float> = x
        .iter()
        .map(|x| (Float::with_val(prec, x + 1u32)) / 2u32)
        .collect();
    for i in 0..s / 2 {
        c[s - 1 - i] = Float::with_val(prec, 1) - &c[i];
    }
    Ok(c)
}

/// Roots of the degree-`s` Legendre polynomial shifted to `(0, 1)`, ascending.
pub fn gauss_legendre_nodes(s: usize) -> Result<Vec<f64>> {
    Ok(gauss_legendre_nodes_mp(s, TABLEAU_PRECISION)?
        .iter()
        .map(Float::to_f64)
        .collect())
}

/// Equispaced nodes `(i-1)/(s-1)`.
pub fn newton_cotes_nodes(s: usize) -> Result<Vec<f64>> {
    if s < 2 {
        return Err(Error::Domain(format!(
            "Newton-Cotes nodes need s >= 2, got {s}"
        )));
    }
    Ok((0..s).map(|i| i as f64 / (s - 1) as f64).collect())
}

fn newton_cotes_nodes_mp(s: usize, prec: u32) -> Vec<Float> {
    (0..s)
        .map(|i| Float::with_val(prec, i as u32) / (s - 1) as u32)
        .collect()
}

pub fn gl_tableau(s: usize) -> Result<ButcherTableau> {
    let c = gauss_legendre_nodes_mp(s, TABLEAU_PRECISION)?;
    collocation_tableau_mp(&c, Family::GaussLegendre)
}

pub fn nc_tableau(s: usize) -> Result<ButcherTableau> {
    newton_cotes_nodes(s)?;
    collocation_tableau_mp(
        &newton_cotes_nodes_mp(s, TABLEAU_PRECISION),
        Family::NewtonCotes,
    )
}

/// Clenshaw-Curtis tableau through the generic Lagrange-integral path.
pub fn cc_tableau_by_quadrature(s: usize) -> Result<ButcherTableau> {
    let xi = chebyshev_points_mp(s, TABLEAU_PRECISION)?;
    let c: Vec<Float> = xi
        .iter()
        .map(|x| (Float::with_val(TABLEAU_PRECISION, 1) + x) / 2u32)
        .collect();
    collocation_tableau_mp(&c, Family::ClenshawCurtis)
}

/// The monic-up-to-`1/s!` node polynomial `M_s(τ) = (1/s!) ∏ (τ - c_i)`,
/// stored as ascending monomial coefficients.
#[derive(Clone, Debug)]
pub struct CollocationKernel {
    pub s: usize,
    pub coeffs: Vec<Float>,
}

impl CollocationKernel {
    fn precision_for(s: usize) -> u32 {
        256 + 8 * s as u32
    }

    pub fn from_nodes(nodes: &[f64]) -> Self {
        let prec = Self::precision_for(nodes.len());
        let mp_nodes: Vec<Float> = nodes.iter().map(|&c| mp::float(prec, c)).collect();
        Self::from_nodes_mp(&mp_nodes)
    }

    pub fn from_nodes_mp(nodes: &[Float]) -> Self {
        let s = nodes.len();
        let prec = Self::precision_for(s).max(nodes.first().map_or(0, Float::prec));
        let mut coeffs = vec![Float::with_val(prec, 1)];
        for c in nodes {
            let mut next = vec![Float::new(prec); coeffs.len() + 1];
            for (k, a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= Float::with_val(prec, a * c);
            }
            coeffs = next;
        }
        let fact = Float::with_val(prec, rug::Integer::from(rug::Integer::factorial(s as u32)));
        for a in &mut coeffs {
            *a /= &fact;
        }
        Self { s, coeffs }
    }

    pub fn for_tableau(tableau: &ButcherTableau) -> Self {
        Self::from_nodes(&tableau.c)
    }

    /// Clenshaw-Curtis kernel built from extended-precision Chebyshev points.
    pub fn clenshaw_curtis(s: usize) -> Result<Self> {
        let prec = Self::precision_for(s);
        let xi = chebyshev_points_mp(s, prec)?;
        let c: Vec<Float> = xi
            .iter()
            .map(|x| (Float::with_val(prec, 1) + x) / 2u32)
            .collect();
        Ok(Self::from_nodes_mp(&c))
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec()
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let t = mp::float(self.prec(), tau);
        let mut acc = Float::new(self.prec());
        for a in self.coeffs.iter().rev() {
            acc = acc * &t + a;
        }
        acc.to_f64()
    }

    /// `M_s^{(m)}(τ)` for `τ ∈ {0, 1}` given as the exact endpoint flag.
    fn derivative_at_endpoint(&self, m: usize, at_one: bool) -> Float {
        let prec = self.prec();
        if !at_one {
            let fact = Float::with_val(prec, rug::Integer::from(rug::Integer::factorial(m as u32)));
            return fact * &self.coeffs[m];
        }
        let mut acc = Float::new(prec);
        for k in m..self.coeffs.len() {
            // k!/(k-m)!
            let mut falling = rug::Integer::from(1);
            for t in (k + 1 - m)..=k {
                falling *= t as u32;
            }
            acc += Float::with_val(prec, &self.coeffs[k] * &falling);
        }
        acc
    }

    /// Stability polynomials `N(z) = Σ_j M^{(s-j)}(1) z^j` and
    /// `D(z) = Σ_j M^{(s-j)}(0) z^j`, ascending in `z`.
    pub fn stability_polynomials(&self) -> (Vec<Float>, Vec<Float>) {
        let s = self.s;
        let num = (0..=s)
            .map(|j| self.derivative_at_endpoint(s - j, true))
            .collect();
        let den = (0..=s)
            .map(|j| self.derivative_at_endpoint(s - j, false))
            .collect();
        (num, den)
    }

    /// `∫_0^1 M_s(τ) τ^j dτ`.
    pub fn moment(&self, j: usize) -> Float {
        let prec = self.prec();
        let mut acc = Float::new(prec);
        for (k, a) in self.coeffs.iter().enumerate() {
            acc += Float::with_val(prec, a / (k + j + 1) as u32);
        }
        acc
    }

    /// `‖M_s‖_2` on `[0, 1]`.
    pub fn l2_norm(&self) -> Float {
        let prec = self.prec();
        let mut acc = Float::new(prec);
        for (k, a) in self.coeffs.iter().enumerate() {
            for (l, b) in self.coeffs.iter().enumerate() {
                acc += Float::with_val(prec, a * b) / (k + l + 1) as u32;
            }
        }
        acc.abs().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderReport {
    pub s: usize,
    /// Number of leading moments that vanish.
    pub m: usize,
    pub order: usize,
    /// `∫_0^1 M_s τ^j`, `j = 0..s`.
    pub moments: Vec<f64>,
}

impl fmt::Display for OrderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "s = {}", self.s)?;
        writeln!(f, "vanishing moments m = {}", self.m)?;
        writeln!(f, "order = {}", self.order)?;
        for (j, v) in self.moments.iter().enumerate() {
            writeln!(f, "  moment[{j}] = {v:e}")?;
        }
        Ok(())
    }
}

/// Moments below this fraction of the Cauchy-Schwarz bound
/// `‖M_s‖‖τ^j‖` count as zero. Loose enough for nodes rounded to `f64`.
const MOMENT_TOL: f64 = 1e-9;

/// Order `s + m` of the collocation method, `m` the count of leading
/// vanishing moments of the node polynomial.
pub fn order_of(kernel: &CollocationKernel) -> OrderReport {
    let s = kernel.s;
    let prec = kernel.prec();
    let norm = kernel.l2_norm();
    let moments: Vec<Float> = (0..s).map(|j| kernel.moment(j)).collect();
    let m = moments
        .iter()
        .enumerate()
        .take_while(|(j, mom)| {
            // ‖τ^j‖ = 1/sqrt(2j+1)
            let bound =
                Float::with_val(prec, &norm) / Float::with_val(prec, (2 * j + 1) as u32).sqrt();
            Float::with_val(prec, mom.abs_ref()) <= bound * MOMENT_TOL
        })
        .count();
    OrderReport {
        s,
        m,
        order: s + m,
        moments: moments.iter().map(Float::to_f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn cc_two_is_trapezoidal() {
        let t = cc_tableau(2).unwrap();
        assert_eq!(t.c, vec![0.0, 1.0]);
        assert_close(t.a[0][0], 0.0, 1e-16);
        assert_close(t.a[0][1], 0.0, 1e-16);
        assert_close(t.a[1][0], 0.5, 1e-16);
        assert_close(t.a[1][1], 0.5, 1e-16);
        assert_eq!(t.b, t.a[1]);
    }

    #[test]
    fn cc_three_is_lobatto_iiia() {
        let t = cc_tableau(3).unwrap();
        assert_eq!(t.c, vec![0.0, 0.5, 1.0]);
        let expected = [
            [0.0, 0.0, 0.0],
            [5.0 / 24.0, 1.0 / 3.0, -1.0 / 24.0],
            [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(t.a[i][j], expected[i][j], 1e-15);
            }
        }
        assert_eq!(t.b, t.a[2]);
        assert!(matches!(cc_tableau(1), Err(Error::Domain(_))));
    }

    #[test]
    fn collocation_examples() {
        let trap = collocation_tableau(&[0.0, 1.0]).unwrap();
        assert_eq!(trap.a, vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
        assert_eq!(trap.b, vec![0.5, 0.5]);

        let mid = collocation_tableau(&[0.5]).unwrap();
        assert_eq!(mid.a, vec![vec![0.5]]);
        assert_eq!(mid.b, vec![1.0]);

        let cc3 = collocation_tableau(&cc_tableau(3).unwrap().c).unwrap();
        assert!(cc3.max_abs_diff(&cc_tableau(3).unwrap()) <= 1e-12);
    }

    #[test]
    fn collocation_rejects_bad_nodes() {
        assert!(matches!(
            collocation_tableau(&[0.0, 0.5, 0.5]),
            Err(Error::DuplicateNodes { index: 2 })
        ));
        assert!(matches!(
            collocation_tableau(&[0.6, 0.2]),
            Err(Error::DuplicateNodes { .. })
        ));
        assert!(matches!(collocation_tableau(&[]), Err(Error::Domain(_))));
        assert!(matches!(
            collocation_tableau(&[0.0, 1.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_matches_lagrange_integrals() {
        for s in 2..=12 {
            let closed = cc_tableau(s).unwrap();
            let oracle = cc_tableau_by_quadrature(s).unwrap();
            let diff = closed.max_abs_diff(&oracle);
            assert!(diff <= 1e-15, "s={s}: {diff}");
        }
    }

    /// A tempting variant, prefactor `1/(2 - δ_1j - δ_sj) · 1/(2(s-1))` with
    /// sign-flipped integral terms, does not reproduce collocation.
    #[test]
    fn variant_prefactor_is_rejected() {
        let s = 3;
        let oracle = cc_tableau_by_quadrature(s).unwrap();
        let n = (s - 1) as f64;
        let th = |i: usize| i as f64 * std::f64::consts::PI / n;
        let variant_i = |i: usize, k: usize| -> f64 {
            let ci = 0.5 * (1.0 - th(i).cos());
            match k {
                0 => 2.0 * ci,
                1 => 0.25 * ((2.0 * th(i)).cos() - 1.0),
                _ => {
                    let sg = if k % 2 == 0 { 1.0 } else { -1.0 };
                    ((k as f64 + 1.0) * th(i)).cos() / (2.0 * (k as f64 + 1.0))
                        + sg / (2.0 * (k as f64 + 1.0))
                        - (((k as f64 - 1.0) * th(i)).cos() + sg) / (2.0 * (k as f64 - 1.0))
                }
            }
        };
        let mut worst: f64 = 0.0;
        for i in 0..s {
            for j in 0..s {
                let mut sum = 0.0;
                for k in 0..s {
                    let w = if k == 0 || k == s - 1 { 0.5 } else { 1.0 };
                    sum += w * (k as f64 * th(j)).cos() * variant_i(i, k);
                }
                let boundary = if j == 0 || j == s - 1 { 1.0 } else { 0.0 };
                let a = sum / ((2.0 - boundary) * 2.0 * n);
                worst = worst.max((a - oracle.a[i][j]).abs());
            }
        }
        assert!(worst > 1e-2);
    }

    #[test]
    fn gauss_legendre_examples() {
        assert_eq!(gauss_legendre_nodes(1).unwrap(), vec![0.5]);
        let two = gauss_legendre_nodes(2).unwrap();
        let r = 3f64.sqrt() / 6.0;
        assert_close(two[0], 0.5 - r, 1e-16);
        assert_close(two[1], 0.5 + r, 1e-16);
        assert_eq!(gauss_legendre_nodes(3).unwrap()[1], 0.5);
        assert!(gauss_legendre_nodes(0).is_err());
    }

    #[test]
    fn gauss_legendre_residuals_and_symmetry() {
        for s in 1..=100 {
            let c = gauss_legendre_nodes(s).unwrap();
            assert_eq!(c.len(), s);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            for i in 0..s {
                assert_close(c[i] + c[s - 1 - i], 1.0, 2e-16);
                // residual at the rounded node, evaluated in extended precision;
                // beyond s ≈ 20 a single ulp of node error times |P_s'| exceeds 1e-14
                let x = mp::float(256, 2.0 * c[i] - 1.0);
                let (p, dp) = legendre_mp(s, &x);
                let (p, dp) = (p.to_f64().abs(), dp.to_f64().abs());
                if s <= 20 {
                    assert!(p <= 1e-14, "s={s} i={i} residual {p}");
                }
                assert!(p <= 4.0 * f64::EPSILON * dp, "s={s} i={i} residual {p}");
            }
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = legendre_rule_mp(6, 200).unwrap();
        let total: f64 = w.iter().map(Float::to_f64).sum();
        assert_close(total, 2.0, 1e-15);
        // ∫ x^10 = 2/11, degree 10 < 12
        let q: f64 = x
            .iter()
            .zip(&w)
            .map(|(x, w)| x.to_f64().powi(10) * w.to_f64())
            .sum();
        assert_close(q, 2.0 / 11.0, 1e-15);
    }

    #[test]
    fn newton_cotes_examples() {
        assert_eq!(newton_cotes_nodes(2).unwrap(), vec![0.0, 1.0]);
        assert_eq!(newton_cotes_nodes(3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            newton_cotes_nodes(5).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(newton_cotes_nodes(1).is_err());
    }

    #[test]
    fn tableau_invariants_all_families() {
        for family in Family::STANDARD {
            for s in family.min_stages()..=20 {
                let t = family.tableau(s).unwrap();
                t.check_invariants(1e-13)
                    .unwrap_or_else(|e| panic!("{family} s={s}: {e}"));
            }
        }
    }

    #[test]
    fn order_examples() {
        let gl2 = CollocationKernel::for_tableau(&gl_tableau(2).unwrap());
        assert_eq!(order_of(&gl2).order, 4);
        let cc3 = CollocationKernel::for_tableau(&cc_tableau(3).unwrap());
        assert_eq!(order_of(&cc3).order, 4);
        let cc2 = order_of(&CollocationKernel::for_tableau(&cc_tableau(2).unwrap()));
        assert_eq!(cc2.m, 0);
        assert_eq!(cc2.order, 2);
        assert_close(cc2.moments[0], -1.0 / 12.0, 1e-16);
        let mid = order_of(&CollocationKernel::from_nodes(&[0.5]));
        assert_eq!(mid.order, 2);
    }

    #[test]
    fn order_by_family() {
        for s in 1..=5 {
            let k = CollocationKernel::for_tableau(&gl_tableau(s).unwrap());
            assert_eq!(order_of(&k).order, 2 * s, "gl s={s}");
        }
        for s in 2..=12 {
            let r = order_of(&CollocationKernel::for_tableau(&cc_tableau(s).unwrap()));
            let expected = if s % 2 == 1 { s + 1 } else { s };
            assert_eq!(r.order, expected, "cc s={s}");
            let exact = order_of(&CollocationKernel::clenshaw_curtis(s).unwrap());
            assert_eq!(exact.order, expected, "cc (mp nodes) s={s}");
        }
        for s in 2..=20 {
            let r = order_of(&CollocationKernel::for_tableau(&nc_tableau(s).unwrap()));
            assert!(r.order >= s);
        }
    }

    #[test]
    fn kernel_vanishes_at_nodes() {
        let t = cc_tableau(6).unwrap();
        let k = CollocationKernel::for_tableau(&t);
        assert_close(k.coeffs[6].to_f64(), 1.0 / 720.0, 1e-18);
        for c in &t.c {
            assert!(k.eval(*c).abs() < 1e-20);
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let t = cc_tableau(7).unwrap();
        let text = t.to_json().unwrap();
        assert!(text.contains("\"A\""));
        assert!(text.contains("\"family\": \"cc\""));
        let back = ButcherTableau::from_json(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_rejects_inconsistent_lengths() {
        let text = r#"{"s": 2, "family": "custom", "c": ["0.5"], "b": ["1"], "A": [["0.5"]]}"#;
        assert!(matches!(
            ButcherTableau::from_json(text),
            Err(Error::InvalidTableau(_))
        ));
    }
}
