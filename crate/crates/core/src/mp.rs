//! Extended-precision helpers on top of MPFR floats.

use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

/// Default mantissa width used for tableau construction.
pub const TABLEAU_PRECISION: u32 = 256;

pub fn float(prec: u32, value: f64) -> Float {
    Float::with_val(prec, value)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// `cos(m·π/n)` for `m = 0..=2n`, computed once per table.
pub fn cos_table(n: usize, prec: u32) -> Vec<Float> {
    let step = pi(prec) / n as u32;
    (0..=2 * n)
        .map(|m| (step.clone() * m as u32).cos())
        .collect()
}

/// Minimal complex number over [`Float`], enough for Horner evaluation and
/// the simultaneous root iteration.
#[derive(Clone, Debug)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn new(re: Float, im: Float) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Self::new(Float::new(prec), Float::new(prec))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Self::new(float(prec, re), float(prec, im))
    }

    pub fn from_polar(radius: &Float, angle: &Float) -> Self {
        let (s, c) = angle.clone().sin_cos(Float::new(angle.prec()));
        Self::new(c * radius, s * radius)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn norm_sqr(&self) -> Float {
        self.re.clone().square() + self.im.clone().square()
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        Self::new(self.re.clone() / &d, -(self.im.clone()) / d)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        self * &rhs.recip()
    }

    pub fn scale(&self, k: &Float) -> Self {
        Self::new(self.re.clone() * k, self.im.clone() * k)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add for &MpComplex {
    type Output = MpComplex;
    fn add(self, rhs: Self) -> MpComplex {
        MpComplex::new(self.re.clone() + &rhs.re, self.im.clone() + &rhs.im)
    }
}

impl Sub for &MpComplex {
    type Output = MpComplex;
    fn sub(self, rhs: Self) -> MpComplex {
        MpComplex::new(self.re.clone() - &rhs.re, self.im.clone() - &rhs.im)
    }
}

impl Mul for &MpComplex {
    type Output = MpComplex;
    fn mul(self, rhs: Self) -> MpComplex {
        let re = self.re.clone() * &rhs.re - self.im.clone() * &rhs.im;
        let im = self.re.clone() * &rhs.im + self.im.clone() * &rhs.re;
        MpComplex::new(re, im)
    }
}

impl Neg for MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex::new(-self.re, -self.im)
    }
}

/// Horner evaluation of a real polynomial (ascending coefficients) and its
/// derivative at a complex point.
pub fn horner_with_derivative(coeffs: &[Float], z: &MpComplex) -> (MpComplex, MpComplex) {
    let prec = z.prec();
    let mut p = MpComplex::zero(prec);
    let mut dp = MpComplex::zero(prec);
    for a in coeffs.iter().rev() {
        dp = &(&dp * z) + &p;
        p = &p * z;
        p.re += a;
    }
    (p, dp)
}

/// Horner evaluation of `Σ|a_k| |z|^k`, the rounding-error scale for
/// evaluating the polynomial at `z`.
pub fn abs_horner(coeffs: &[Float], r: &Float) -> Float {
    let mut acc = Float::new(r.prec());
    for a in coeffs.iter().rev() {
        acc = acc * r + Float::with_val(r.prec(), a.abs_ref());
    }
    acc
}

/// `2^-e` at the given precision.
pub fn pow2_neg(prec: u32, e: u32) -> Float {
    Float::with_val(prec, 2).pow(-(e as i32))
}
