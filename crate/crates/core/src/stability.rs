//! Linear stability of collocation methods.
//!
//! The stability function `r(z) = 1 + z bᵀ(I - zA)⁻¹ 1` can be evaluated for
//! any tableau. For Clenshaw-Curtis collocation `r = N/D` with
//! `N(z) = Σ d_j z^j`, `D(z) = Σ (-1)^j d_j z^j` and `d_j = M_s^{(s-j)}(1)`
//! known in closed form, so A-stability reduces to locating the roots of `D`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Float, Rational};

use crate::chebyshev::{boundary_derivative_exact, Endpoint};
use crate::error::{Error, Result};
use crate::mp::MpComplex;
use crate::roots::aberth_roots;
use crate::tableau::ButcherTableau;

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const MIN_PRECISION_BITS: u32 = 128;

/// Relative agreement required between a root scan and its rerun at doubled
/// precision.
pub const PRECISION_AGREEMENT: f64 = 1e-6;
pub const MAX_PRECISION_DOUBLINGS: u32 = 2;

const ABERTH_MAX_ITER: usize = 2000;

/// Anything that can report `r(z)`.
pub trait StabilityFunction {
    fn value(&self, z: Complex64) -> Result<Complex64>;
}

/// `r(z) = 1 + z bᵀ(I - zA)⁻¹ 1` by a dense complex solve.
pub fn stability_function_value(tableau: &ButcherTableau, z: Complex64) -> Result<Complex64> {
    let s = tableau.s;
    let m = DMatrix::from_fn(s, s, |i, j| {
        let id = if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        id - z * tableau.a[i][j]
    });
    let ones = DVector::from_element(s, Complex64::new(1.0, 0.0));
    let pole = || Error::Pole { re: z.re, im: z.im };
    let x = m.lu().solve(&ones).ok_or_else(pole)?;
    let btx: Complex64 = tableau.b.iter().zip(x.iter()).map(|(b, xi)| xi * *b).sum();
    let r = Complex64::new(1.0, 0.0) + z * btx;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(pole())
    }
}

impl StabilityFunction for ButcherTableau {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        stability_function_value(self, z)
    }
}

/// Poles of `r` from the linear-solve side: reciprocals of the nonzero
/// eigenvalues of `A`.
pub fn poles_from_eigenvalues(tableau: &ButcherTableau) -> Vec<Complex64> {
    let s = tableau.s;
    let a = DMatrix::from_fn(s, s, |i, j| tableau.a[i][j]);
    let scale = a.amax().max(f64::MIN_POSITIVE);
    a.complex_eigenvalues()
        .iter()
        .filter(|l| l.norm() > 1e-12 * scale)
        .map(|l| l.inv())
        .collect()
}

/// `r = N/D` with extended-precision coefficients, ascending in `z`.
#[derive(Clone, Debug)]
pub struct StabilityRational {
    pub s: usize,
    pub num: Vec<Float>,
    pub den: Vec<Float>,
}

impl StabilityRational {
    pub fn precision_bits(&self) -> u32 {
        self.num[0].prec()
    }

    fn horner(coeffs: &[Float], z: &MpComplex) -> MpComplex {
        let mut acc = MpComplex::zero(z.prec());
        for a in coeffs.iter().rev() {
            acc = &acc * z;
            acc.re += a;
        }
        acc
    }

    pub fn eval_num(&self, z: Complex64) -> Complex64 {
        let zz = MpComplex::from_f64(self.precision_bits(), z.re, z.im);
        let (re, im) = Self::horner(&self.num, &zz).to_f64();
        Complex64::new(re, im)
    }

    pub fn eval_den(&self, z: Complex64) -> Complex64 {
        let zz = MpComplex::from_f64(self.precision_bits(), z.re, z.im);
        let (re, im) = Self::horner(&self.den, &zz).to_f64();
        Complex64::new(re, im)
    }
}

impl StabilityFunction for StabilityRational {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        let zz = MpComplex::from_f64(self.precision_bits(), z.re, z.im);
        let n = Self::horner(&self.num, &zz);
        let d = Self::horner(&self.den, &zz);
        if d.re.is_zero() && d.im.is_zero() {
            return Err(Error::Pole { re: z.re, im: z.im });
        }
        let (re, im) = n.div(&d).to_f64();
        Ok(Complex64::new(re, im))
    }
}

/// Exact `d_j = M_s^{(s-j)}(1)`, `j = 0..s-1`, for Clenshaw-Curtis nodes:
///
/// ```text
/// d_j = 2^m / (2^{2s-2} (s-1) s!) · ( m(m-1) T_{s-1}^{(m-1)}(1) + 2m T_{s-1}^{(m)}(1) ),   m = s - j
/// ```
pub fn cc_d_coefficients(s: usize) -> Result<Vec<Rational>> {
    if s < 2 {
        return Err(Error::Domain(format!(
            "stability polynomials need s >= 2, got {s}"
        )));
    }
    let mut denom = rug::Integer::from(rug::Integer::factorial(s as u32));
    denom *= (s - 1) as u32;
    denom <<= (2 * s - 2) as u32;
    Ok((0..s)
        .map(|j| {
            let m = s - j;
            let mut bracket =
                boundary_derivative_exact(s - 1, m, Endpoint::Plus) * Rational::from(2 * m as u32);
            if m >= 1 {
                bracket += boundary_derivative_exact(s - 1, m - 1, Endpoint::Plus)
                    * Rational::from((m * (m - 1)) as u32);
            }
            let mut num = rug::Integer::from(1);
            num <<= m as u32;
            bracket * Rational::from((num, denom.clone()))
        })
        .collect())
}

/// Clenshaw-Curtis stability polynomials: `N` has coefficients `d_j`, `D`
/// has `(-1)^j d_j`. Both are divided by `d_0` (which is `1`, as
/// `M_s^{(s)} ≡ 1`), leaving `N/D` unchanged.
pub fn cc_stability_polys(s: usize, precision_bits: u32) -> Result<StabilityRational> {
    if precision_bits < MIN_PRECISION_BITS {
        return Err(Error::Domain(format!(
            "precision must be at least {MIN_PRECISION_BITS} bits, got {precision_bits}"
        )));
    }
    let d = cc_d_coefficients(s)?;
    let d0 = d[0].clone();
    let num: Vec<Float> = d
        .iter()
        .map(|dj| Float::with_val(precision_bits, Rational::from(dj / &d0)))
        .collect();
    let den = num
        .iter()
        .enumerate()
        .map(|(j, a)| if j % 2 == 0 { a.clone() } else { -a.clone() })
        .collect();
    Ok(StabilityRational { s, num, den })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub s: usize,
    /// Smallest real part over the roots of `D_s`.
    pub min_re: f64,
    /// `min_re` minus the Weierstrass inclusion radius of that root: every
    /// root of `D_s` has real part at least this large.
    pub certified_lower_bound: f64,
    pub a_stable: bool,
    pub precision_bits: u32,
}

fn scan_once(s: usize, bits: u32) -> Result<(Float, Float, bool)> {
    let rational = cc_stability_polys(s, bits)?;
    let set = aberth_roots(&rational.den, ABERTH_MAX_ITER);
    let (min_re, lower) = set
        .min_real_part()
        .ok_or_else(|| Error::Domain("D_s has no roots".into()))?;
    Ok((min_re, lower, set.converged && set.residuals_certified))
}

/// Minimum real part over the roots of `D_s`, found by Aberth-Ehrlich at
/// `precision_bits` and confirmed at twice that precision.
pub fn min_real_part_of_d_roots(s: usize, precision_bits: u32) -> Result<StabilityReport> {
    let (min_re, lower, ok) = scan_once(s, precision_bits)?;
    let (min_re2, _, ok2) = scan_once(s, 2 * precision_bits)?;
    let (a, b) = (min_re.to_f64(), min_re2.to_f64());
    let agree = (a - b).abs() <= PRECISION_AGREEMENT * a.abs().max(b.abs());
    if !(ok && ok2 && agree) {
        return Err(Error::RootCertificationFailure {
            s,
            bits: precision_bits,
            min_re: a,
            min_re_doubled: b,
        });
    }
    Ok(StabilityReport {
        s,
        min_re: a,
        certified_lower_bound: lower.to_f64(),
        a_stable: a > 0.0,
        precision_bits,
    })
}

/// Retries at doubled precision after a certification failure, up to
/// `MAX_PRECISION_DOUBLINGS` times.
pub fn min_real_part_with_retry(s: usize, precision_bits: u32) -> Result<StabilityReport> {
    let mut bits = precision_bits;
    let mut attempt = 0;
    loop {
        match min_real_part_of_d_roots(s, bits) {
            Err(Error::RootCertificationFailure { .. }) if attempt < MAX_PRECISION_DOUBLINGS => {
                bits *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

/// Root scan over `s_min..=s_max`; node counts run in parallel, the output is
/// ordered by `s`.
pub fn a_stability_scan(
    s_min: usize,
    s_max: usize,
    precision_bits: u32,
) -> Result<Vec<StabilityReport>> {
    if s_min < 2 || s_min > s_max {
        return Err(Error::Domain(format!(
            "scan range must satisfy 2 <= s_min <= s_max, got {s_min}..{s_max}"
        )));
    }
    if precision_bits < MIN_PRECISION_BITS {
        return Err(Error::Domain(format!(
            "precision must be at least {MIN_PRECISION_BITS} bits, got {precision_bits}"
        )));
    }
    (s_min..=s_max)
        .into_par_iter()
        .map(|s| min_real_part_with_retry(s, precision_bits))
        .collect()
}

/// `|r(x)|` along the negative real axis.
pub fn a0_sample<F: StabilityFunction + ?Sized>(f: &F, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| {
            if !(x < 0.0) {
                return Err(Error::Domain(format!("A0 samples need x < 0, got {x}")));
            }
            f.value(Complex64::new(x, 0.0)).map(|r| r.norm())
        })
        .collect()
}

/// Samples of `|r(z)|` on a rectangular grid; rows run over the imaginary
/// axis, columns over the real axis. Poles are stored as NaN.
#[derive(Clone, Debug)]
pub struct RegionGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub abs_r: Vec<f64>,
}

impl RegionGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.abs_r[row * self.re.len() + col]
    }

    /// `(re, im, |r|)` triples in row-major order.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.im.iter().enumerate().flat_map(move |(r, &y)| {
            self.re
                .iter()
                .enumerate()
                .map(move |(c, &x)| (x, y, self.at(r, c)))
        })
    }
}

fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn stability_region_grid<F: StabilityFunction + ?Sized>(
    f: &F,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<RegionGrid> {
    if resolution.0 == 0 || resolution.1 == 0 {
        return Err(Error::Domain("grid resolution must be positive".into()));
    }
    let re = axis(re_range, resolution.0);
    let im = axis(im_range, resolution.1);
    let mut abs_r = Vec::with_capacity(re.len() * im.len());
    for &y in &im {
        for &x in &re {
            abs_r.push(f.value(Complex64::new(x, y)).map_or(f64::NAN, |r| r.norm()));
        }
    }
    Ok(RegionGrid { re, im, abs_r })
}
