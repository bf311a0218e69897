//! Chebyshev polynomial primitives: evaluation, Chebyshev points, discrete
//! interpolation coefficients, series integration and boundary derivatives.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::mp;

/// First-kind Chebyshev polynomial `T_k(x)` by the three-term recurrence.
///
/// Valid for any real `x`, including `|x| > 1`.
pub fn eval_t(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Second-kind Chebyshev polynomial `U_k(x)`.
pub fn eval_u(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let (mut prev, mut cur) = (1.0, 2.0 * x);
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Chebyshev points (extrema of `T_{s-1}` plus the endpoints) on `[-1, 1]`,
/// in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub s: usize,
    pub xi: Vec<f64>,
}

/// `ξ_i = -cos((i-1)π/(s-1))`, with the endpoints snapped to `±1` and each
/// mirrored pair forced to exact symmetry.
pub fn chebyshev_points(s: usize) -> Result<NodeSet> {
    if s < 2 {
        return Err(Error::Domain(format!(
            "Chebyshev points need s >= 2, got {s}"
        )));
    }
    let n = (s - 1) as f64;
    let mut xi: Vec<f64> = (0..s)
        .map(|i| -(i as f64 * std::f64::consts::PI / n).cos())
        .collect();
    symmetrize(&mut xi, |a, b| 0.5 * (a.abs() + b.abs()), 0.0, 1.0);
    Ok(NodeSet { s, xi })
}

/// Extended-precision Chebyshev points, same ordering and snapping rules.
pub fn chebyshev_points_mp(s: usize, prec: u32) -> Result<Vec<Float>> {
    if s < 2 {
        return Err(Error::Domain(format!(
            "Chebyshev points need s >= 2, got {s}"
        )));
    }
    let table = mp::cos_table(s - 1, prec);
    let mut xi: Vec<Float> = (0..s).map(|i| -table[i].clone()).collect();
    symmetrize(
        &mut xi,
        |a, b| (Float::with_val(prec, a.abs_ref()) + Float::with_val(prec, b.abs_ref())) / 2u32,
        Float::new(prec),
        Float::with_val(prec, 1),
    );
    Ok(xi)
}

fn symmetrize<T, F>(xi: &mut [T], average: F, zero: T, one: T)
where
    T: Clone + std::ops::Neg<Output = T>,
    F: Fn(&T, &T) -> T,
{
    let s = xi.len();
    for i in 0..s / 2 {
        let m = average(&xi[i], &xi[s - 1 - i]);
        xi[i] = -m.clone();
        xi[s - 1 - i] = m;
    }
    if s % 2 == 1 {
        xi[s / 2] = zero;
    }
    xi[0] = -one.clone();
    xi[s - 1] = one;
}

/// Which end of `[-1, 1]` a boundary derivative is taken at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Minus,
    Plus,
}

impl Endpoint {
    fn parity_sign(self, power: usize) -> i32 {
        match self {
            Endpoint::Plus => 1,
            Endpoint::Minus if power.is_multiple_of(2) => 1,
            Endpoint::Minus => -1,
        }
    }
}

/// `T_s^{(j)}(±1) = (±1)^{s+j} ∏_{k<j} (s²-k²)/(2k+1)` in double precision.
///
/// Overflows to infinity for large `s`, `j`; see [`boundary_derivative_exact`].
pub fn boundary_derivative(s: usize, j: usize, end: Endpoint) -> f64 {
    let s2 = (s * s) as f64;
    let prod: f64 = (0..j)
        .map(|k| (s2 - (k * k) as f64) / (2 * k + 1) as f64)
        .product();
    end.parity_sign(s + j) as f64 * prod
}

/// Exact rational value of `T_s^{(j)}(±1)`.
pub fn boundary_derivative_exact(s: usize, j: usize, end: Endpoint) -> Rational {
    let mut prod = Rational::from(end.parity_sign(s + j));
    for k in 0..j {
        let num = (s * s) as i64 - (k * k) as i64;
        prod *= Rational::from((num, (2 * k + 1) as i64));
    }
    prod
}

/// Chebyshev series `Σ'' β_k T_k`: the first and last coefficients are
/// halved when summed. A single coefficient is halved once.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevSeries {
    pub coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a Chebyshev series needs at least one coefficient"
        );
        Self { coeffs }
    }

    /// Build from ordinary coefficients `f = Σ a_k T_k`.
    pub fn from_plain(plain: &[f64]) -> Self {
        let mut coeffs = plain.to_vec();
        let n = coeffs.len();
        coeffs[0] *= 2.0;
        if n > 1 {
            coeffs[n - 1] *= 2.0;
        }
        Self::new(coeffs)
    }

    /// Ordinary coefficients `a_k` with `f = Σ a_k T_k`.
    pub fn plain(&self) -> Vec<f64> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        a[0] *= 0.5;
        if n > 1 {
            a[n - 1] *= 0.5;
        }
        a
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = self.plain();
        let (mut prev, mut cur) = (1.0, x);
        let mut sum = a[0];
        for (k, ak) in a.iter().enumerate().skip(1) {
            if k > 1 {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            sum += ak * cur;
        }
        sum
    }
}

/// Discrete Chebyshev interpolation coefficients from samples at
/// `chebyshev_points(s)`:
/// `β_k = 2/(s-1) Σ''_j f(ξ_j) T_k(ξ_j)`.
pub fn interp_coeffs(values: &[f64]) -> Result<ChebyshevSeries> {
    let s = values.len();
    if s < 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            got: s,
        });
    }
    let nodes = chebyshev_points(s)?;
    let scale = 2.0 / (s - 1) as f64;
    let coeffs = (0..s)
        .map(|k| {
            let sum: f64 = nodes
                .xi
                .iter()
                .zip(values)
                .enumerate()
                .map(|(j, (&x, &f))| {
                    let w = if j == 0 || j == s - 1 { 0.5 } else { 1.0 };
                    w * f * eval_t(k, x)
                })
                .sum();
            scale * sum
        })
        .collect();
    Ok(ChebyshevSeries::new(coeffs))
}

/// Antiderivative of a Chebyshev series, normalized to vanish at `ξ = -1`.
///
/// Uses `∫T_0 = T_1`, `∫T_1 = T_2/4` and
/// `∫T_k = (T_{k+1}/(k+1) - T_{k-1}/(k-1))/2` for `k ≥ 2`.
pub fn integrate_series(series: &ChebyshevSeries) -> ChebyshevSeries {
    let a = series.plain();
    let n = a.len();
    let mut out = vec![0.0; n + 1];
    for (k, &ak) in a.iter().enumerate() {
        match k {
            0 => out[1] += ak,
            1 => out[2] += 0.25 * ak,
            _ => {
                out[k + 1] += ak / (2 * (k + 1)) as f64;
                out[k - 1] -= ak / (2 * (k - 1)) as f64;
            }
        }
    }
    // T_k(-1) = (-1)^k
    let at_minus_one: f64 = out
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| if k % 2 == 0 { *c } else { -*c })
        .sum();
    out[0] = -at_minus_one;
    ChebyshevSeries::from_plain(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Term-wise derivative of ordinary coefficients (test oracle).
    fn differentiate_plain(a: &[f64]) -> Vec<f64> {
        let n = a.len();
        if n <= 1 {
            return vec![0.0];
        }
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * a[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        d
    }

    #[test]
    fn eval_t_examples() {
        assert_eq!(eval_t(0, 0.73), 1.0);
        assert_eq!(eval_t(1, -0.4), -0.4);
        assert!((eval_t(2, 0.5) + 0.5).abs() < 1e-15);
        assert!((eval_t(2, 0.5) - (2.0 * PI / 3.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn eval_u_examples() {
        assert_eq!(eval_u(0, 0.3), 1.0);
        assert_eq!(eval_u(1, 0.3), 0.6);
        assert!(eval_u(2, 0.5).abs() < 1e-15);
        let th = PI / 3.0;
        assert!(((3.0 * th).sin() / th.sin()).abs() < 1e-15);
    }

    #[test]
    fn eval_t_outside_interval_uses_recurrence() {
        // T_3(2) = 4·8 - 3·2
        assert_eq!(eval_t(3, 2.0), 26.0);
        // T_k(x) = cosh(k·acosh x) for x > 1
        let x: f64 = 1.3;
        assert!((eval_t(7, x) - (7.0 * x.acosh()).cosh()).abs() < 1e-10);
    }

    #[test]
    fn eval_t_matches_trig_form() {
        for k in 0..=50 {
            for i in 0..=200 {
                let x = -1.0 + 2.0 * i as f64 / 200.0;
                let trig = (k as f64 * x.acos()).cos();
                assert!((eval_t(k, x) - trig).abs() <= 1e-12, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn derivative_of_t_is_k_times_u() {
        let h = 1e-6;
        for k in 1..12 {
            for &x in &[-0.9, -0.5, -0.1, 0.2, 0.6, 0.85] {
                let fd = (eval_t(k, x + h) - eval_t(k, x - h)) / (2.0 * h);
                let exact = k as f64 * eval_u(k - 1, x);
                assert!(
                    (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                    "k={k} x={x}"
                );
            }
        }
    }

    #[test]
    fn chebyshev_points_examples() {
        assert_eq!(chebyshev_points(2).unwrap().xi, vec![-1.0, 1.0]);
        assert_eq!(chebyshev_points(3).unwrap().xi, vec![-1.0, 0.0, 1.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let five = chebyshev_points(5).unwrap().xi;
        for (a, b) in five.iter().zip([-1.0, -r, 0.0, r, 1.0]) {
            assert!((a - b).abs() <= f64::EPSILON);
        }
        assert!(matches!(chebyshev_points(1), Err(Error::Domain(_))));
        assert!(chebyshev_points_mp(1, 128).is_err());
    }

    #[test]
    fn chebyshev_points_invariants() {
        for s in 2..=101 {
            let xi = chebyshev_points(s).unwrap().xi;
            assert_eq!(xi[0], -1.0);
            assert_eq!(xi[s - 1], 1.0);
            for i in 0..s {
                assert_eq!(xi[i] + xi[s - 1 - i], 0.0);
            }
            assert!(xi.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn mp_points_round_to_f64_points() {
        for s in 2..40 {
            let lo = chebyshev_points(s).unwrap().xi;
            let hi = chebyshev_points_mp(s, 200).unwrap();
            for (a, b) in lo.iter().zip(&hi) {
                assert!((a - b.to_f64()).abs() <= 2.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn node_sets_nest_in_2s_minus_1() {
        for s in 2..=40 {
            let small = chebyshev_points(s).unwrap().xi;
            let big = chebyshev_points(2 * s - 1).unwrap().xi;
            for (i, x) in small.iter().enumerate() {
                assert_eq!(*x, big[2 * i], "s={s} i={i}");
            }
        }
    }

    #[test]
    fn discrete_orthogonality() {
        for s in 3..=30 {
            let xi = chebyshev_points(s).unwrap().xi;
            for k in 1..=s {
                for j in 1..=s {
                    let sum: f64 = xi
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| {
                            let w = if i == 0 || i == s - 1 { 0.5 } else { 1.0 };
                            w * eval_t(k - 1, x) * eval_t(j - 1, x)
                        })
                        .sum();
                    let expected = if k != j {
                        0.0
                    } else if k == 1 || k == s {
                        (s - 1) as f64
                    } else {
                        (s - 1) as f64 / 2.0
                    };
                    assert!(
                        (sum - expected).abs() <= 1e-12 * s as f64,
                        "s={s} k={k} j={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_derivative_examples() {
        assert_eq!(boundary_derivative(3, 0, Endpoint::Plus), 1.0);
        assert_eq!(boundary_derivative(3, 1, Endpoint::Plus), 9.0);
        assert_eq!(boundary_derivative(3, 1, Endpoint::Minus), 9.0);
        assert_eq!(boundary_derivative(3, 0, Endpoint::Minus), -1.0);
        // T_3'' = 24x
        assert_eq!(boundary_derivative(3, 2, Endpoint::Plus), 24.0);
        assert_eq!(boundary_derivative(3, 2, Endpoint::Minus), -24.0);
        assert_eq!(boundary_derivative(3, 4, Endpoint::Plus), 0.0);
        assert_eq!(boundary_derivative_exact(3, 2, Endpoint::Minus), -24);
        assert_eq!(
            boundary_derivative_exact(5, 3, Endpoint::Plus),
            Rational::from(boundary_derivative(5, 3, Endpoint::Plus) as i64)
        );
    }

    #[test]
    fn boundary_derivative_matches_finite_differences() {
        // T_s'(1) = s² against a one-sided difference of the recurrence
        for s in 1..10usize {
            let h = 1e-7;
            let fd = (eval_t(s, 1.0) - eval_t(s, 1.0 - h)) / h;
            let exact = boundary_derivative(s, 1, Endpoint::Plus);
            assert!((fd - exact).abs() < 1e-4 * exact, "s={s}");
        }
    }

    #[test]
    fn interp_coeffs_examples() {
        let ones = interp_coeffs(&[1.0; 4]).unwrap();
        for (c, e) in ones.coeffs.iter().zip([2.0, 0.0, 0.0, 0.0]) {
            assert!((c - e).abs() < 1e-14);
        }
        let xi4 = chebyshev_points(4).unwrap().xi;
        let lin = interp_coeffs(&xi4).unwrap();
        for (c, e) in lin.coeffs.iter().zip([0.0, 1.0, 0.0, 0.0]) {
            assert!((c - e).abs() < 1e-14);
        }
        let xi5 = chebyshev_points(5).unwrap().xi;
        let vals: Vec<f64> = xi5.iter().map(|x| 2.0 * x * x - 1.0).collect();
        let t2 = interp_coeffs(&vals).unwrap();
        for (c, e) in t2.coeffs.iter().zip([0.0, 0.0, 1.0, 0.0, 0.0]) {
            assert!((c - e).abs() < 1e-14);
        }
        assert!(matches!(
            interp_coeffs(&[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn interp_reconstructs_samples() {
        for s in 2..40 {
            let xi = chebyshev_points(s).unwrap().xi;
            let vals: Vec<f64> = xi.iter().map(|x| (3.0 * x).exp() * x.cos()).collect();
            let series = interp_coeffs(&vals).unwrap();
            for (x, v) in xi.iter().zip(&vals) {
                assert!(
                    (series.eval(*x) - v).abs() < 1e-13 * (1.0 + v.abs()),
                    "s={s}"
                );
            }
        }
    }

    #[test]
    fn integrate_series_examples() {
        let t0 = ChebyshevSeries::from_plain(&[1.0]);
        let i0 = integrate_series(&t0);
        for x in [-1.0, -0.3, 0.4, 1.0] {
            assert!((i0.eval(x) - (x + 1.0)).abs() < 1e-15);
        }
        let t1 = ChebyshevSeries::from_plain(&[0.0, 1.0]);
        let i1 = integrate_series(&t1);
        for x in [-1.0, -0.3, 0.4, 1.0] {
            assert!((i1.eval(x) - 0.5 * (x * x - 1.0)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn integration_then_differentiation_recovers_input(
            plain in proptest::collection::vec(-5.0f64..5.0, 1..12)
        ) {
            let series = ChebyshevSeries::from_plain(&plain);
            let anti = integrate_series(&series);
            prop_assert!(anti.eval(-1.0).abs() < 1e-12);
            let d = differentiate_plain(&anti.plain());
            for (k, a) in plain.iter().enumerate() {
                prop_assert!((d[k] - a).abs() < 1e-12, "k={} {} vs {}", k, d[k], a);
            }
        }

        #[test]
        fn antiderivative_agrees_with_quadrature(
            plain in proptest::collection::vec(-2.0f64..2.0, 1..8),
            x in -1.0f64..1.0,
        ) {
            let series = ChebyshevSeries::from_plain(&plain);
            let anti = integrate_series(&series);
            // 5-point Gauss-Legendre on [-1, x], exact through degree 9
            const NODES: [f64; 5] = [
                0.0,
                -0.538_469_310_105_683_1,
                0.538_469_310_105_683_1,
                -0.906_179_845_938_664,
                0.906_179_845_938_664,
            ];
            const WEIGHTS: [f64; 5] = [
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_08,
                0.236_926_885_056_189_08,
            ];
            let half = 0.5 * (x + 1.0);
            let quad: f64 = NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(t, w)| w * half * series.eval(-1.0 + half * (t + 1.0)))
                .sum();
            prop_assert!((anti.eval(x) - quad).abs() < 1e-12);
        }
    }
}
