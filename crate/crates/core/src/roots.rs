//! All roots of a real polynomial by Aberth-Ehrlich simultaneous iteration in
//! extended precision, with Weierstrass inclusion discs as certificates.

use rug::Float;

use crate::mp::{self, MpComplex};

#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<MpComplex>,
    /// Radius `n·|W_k|` of the Weierstrass inclusion disc around each root;
    /// the union of the discs contains every zero of the polynomial.
    pub inclusion_radii: Vec<Float>,
    pub iterations: usize,
    pub converged: bool,
    /// Every `|p(z_k)|` sits below the coefficient-scaled rounding bound.
    pub residuals_certified: bool,
}

impl RootSet {
    /// Smallest real part over the roots and the matching certified lower
    /// bound `min_k (Re z_k - r_k)`.
    pub fn min_real_part(&self) -> Option<(Float, Float)> {
        let mut best: Option<(Float, Float)> = None;
        for (z, r) in self.roots.iter().zip(&self.inclusion_radii) {
            let lower = Float::with_val(z.prec(), &z.re - r);
            best = Some(match best {
                None => (z.re.clone(), lower),
                Some((re, lo)) => (
                    if z.re < re { z.re.clone() } else { re },
                    if lower < lo { lower } else { lo },
                ),
            });
        }
        best
    }
}

/// Initial guesses from the upper convex hull of `(k, log2|a_k|)`: each hull
/// edge from `i` to `j` contributes `j - i` points on a circle of radius
/// `(|a_i|/|a_j|)^{1/(j-i)}`.
fn newton_polygon_guesses(coeffs: &[Float], prec: u32) -> Vec<MpComplex> {
    let n = coeffs.len() - 1;
    let logs: Vec<Option<f64>> = coeffs
        .iter()
        .map(|a| {
            if a.is_zero() {
                None
            } else {
                Some(Float::with_val(prec, a.abs_ref()).log2().to_f64())
            }
        })
        .collect();
    let mut hull: Vec<usize> = Vec::new();
    for (k, l) in logs.iter().enumerate() {
        let Some(lk) = *l else { continue };
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (li, lj) = (logs[i].unwrap(), logs[j].unwrap());
            // drop j when it lies on or below the segment i → k
            let cross = (j as f64 - i as f64) * (lk - li) - (k as f64 - i as f64) * (lj - li);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut guesses = Vec::with_capacity(n);
    let tau = std::f64::consts::TAU;
    for (edge, w) in hull.windows(2).enumerate() {
        let (i, j) = (w[0], w[1]);
        let m = j - i;
        let log_r = (logs[i].unwrap() - logs[j].unwrap()) / m as f64;
        let radius = Float::with_val(prec, 2).pow_f64(log_r);
        for q in 0..m {
            let angle = tau * q as f64 / m as f64 + tau * edge as f64 / n as f64 + 0.4;
            guesses.push(MpComplex::from_polar(&radius, &mp::float(prec, angle)));
        }
    }
    guesses
}

trait PowF64 {
    fn pow_f64(self, e: f64) -> Float;
}

impl PowF64 for Float {
    fn pow_f64(self, e: f64) -> Float {
        let prec = self.prec();
        let e = mp::float(prec, e);
        let ln = self.ln();
        (ln * e).exp()
    }
}

/// Roots of `Σ a_k z^k` (ascending real coefficients). The leading
/// coefficient must be nonzero; zero roots from a vanishing constant term are
/// returned exactly.
pub fn aberth_roots(coeffs: &[Float], max_iter: usize) -> RootSet {
    let prec = coeffs.iter().map(Float::prec).max().unwrap_or(64);
    let mut coeffs: Vec<Float> = coeffs.iter().map(|a| Float::with_val(prec, a)).collect();
    while coeffs.len() > 1 && coeffs.last().is_some_and(Float::is_zero) {
        coeffs.pop();
    }
    let mut zero_roots = 0;
    while coeffs.len() > 1 && coeffs[0].is_zero() {
        coeffs.remove(0);
        zero_roots += 1;
    }
    let n = coeffs.len() - 1;
    let finish = |mut set: RootSet| {
        for _ in 0..zero_roots {
            set.roots.push(MpComplex::zero(prec));
            set.inclusion_radii.push(Float::new(prec));
        }
        set
    };
    if n == 0 {
        return finish(RootSet {
            roots: vec![],
            inclusion_radii: vec![],
            iterations: 0,
            converged: true,
            residuals_certified: true,
        });
    }

    let eps = mp::pow2_neg(prec, prec);
    let step_tol = mp::pow2_neg(prec, prec.saturating_sub(16));
    let residual_factor = Float::with_val(prec, &eps * (8 * n) as u32);

    let mut z = newton_polygon_guesses(&coeffs, prec);
    let mut done = vec![false; n];
    let mut iterations = 0;
    while iterations < max_iter && done.iter().any(|d| !d) {
        iterations += 1;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (p, dp) = mp::horner_with_derivative(&coeffs, &z[k]);
            let scale = mp::abs_horner(&coeffs, &z[k].abs());
            if p.abs() <= Float::with_val(prec, &scale * &residual_factor) {
                done[k] = true;
                continue;
            }
            let ratio = p.div(&dp);
            let mut sum = MpComplex::zero(prec);
            for j in (0..n).filter(|&j| j != k) {
                sum = &sum + &(&z[k] - &z[j]).recip();
            }
            let mut denom = -(&ratio * &sum);
            denom.re += 1u32;
            let w = ratio.div(&denom);
            if !w.is_finite() {
                continue;
            }
            z[k] = &z[k] - &w;
            if w.abs() <= Float::with_val(prec, z[k].abs() * &step_tol) {
                done[k] = true;
            }
        }
    }
    let converged = done.iter().all(|&d| d);

    let lead = coeffs[n].clone();
    let mut radii = Vec::with_capacity(n);
    let mut residuals_certified = true;
    for k in 0..n {
        let (p, _) = mp::horner_with_derivative(&coeffs, &z[k]);
        let scale = mp::abs_horner(&coeffs, &z[k].abs());
        if p.abs() > Float::with_val(prec, &scale * &residual_factor) * 64u32 {
            residuals_certified = false;
        }
        let mut prod = MpComplex::new(lead.clone(), Float::new(prec));
        for j in (0..n).filter(|&j| j != k) {
            prod = &prod * &(&z[k] - &z[j]);
        }
        let weierstrass = p.div(&prod);
        radii.push(weierstrass.abs() * n as u32);
    }

    finish(RootSet {
        roots: z,
        inclusion_radii: radii,
        iterations,
        converged,
        residuals_certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_from_roots(roots: &[(f64, f64)], prec: u32) -> Vec<Float> {
        // real polynomial: roots given as conjugate pairs (im > 0) or reals
        let mut c = vec![mp::float(prec, 1.0)];
        let mul = |c: &Vec<Float>, q: &[Float]| {
            let mut out = vec![Float::new(prec); c.len() + q.len() - 1];
            for (i, a) in c.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    out[i + j] += Float::with_val(prec, a * b);
                }
            }
            out
        };
        for &(re, im) in roots {
            if im == 0.0 {
                c = mul(&c, &[mp::float(prec, -re), mp::float(prec, 1.0)]);
            } else {
                let q = [
                    mp::float(prec, re * re + im * im),
                    mp::float(prec, -2.0 * re),
                    mp::float(prec, 1.0),
                ];
                c = mul(&c, &q);
            }
        }
        c
    }

    fn contains(set: &RootSet, re: f64, im: f64) -> bool {
        set.roots.iter().zip(&set.inclusion_radii).any(|(z, r)| {
            let (zr, zi) = z.to_f64();
            ((zr - re).powi(2) + (zi - im).powi(2)).sqrt() <= r.to_f64() + 1e-60
        })
    }

    #[test]
    fn finds_simple_real_and_complex_roots() {
        let targets = [(1.0, 0.0), (-2.5, 0.0), (0.5, 3.0), (7.0, 0.0)];
        let coeffs = poly_from_roots(&targets, 256);
        let set = aberth_roots(&coeffs, 500);
        assert!(set.converged && set.residuals_certified);
        assert_eq!(set.roots.len(), 5);
        for (re, im) in [(1.0, 0.0), (-2.5, 0.0), (0.5, 3.0), (0.5, -3.0), (7.0, 0.0)] {
            assert!(contains(&set, re, im), "missing {re}+{im}i");
        }
        let (min_re, lower) = set.min_real_part().unwrap();
        assert!((min_re.to_f64() + 2.5).abs() < 1e-60);
        assert!(lower <= min_re);
    }

    #[test]
    fn wilkinson_twenty_at_extended_precision() {
        let targets: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, 0.0)).collect();
        let coeffs = poly_from_roots(&targets, 512);
        let set = aberth_roots(&coeffs, 1000);
        assert!(set.converged);
        for k in 1..=20 {
            assert!(contains(&set, k as f64, 0.0), "missing {k}");
        }
        for r in &set.inclusion_radii {
            assert!(r.to_f64() < 1e-100);
        }
    }

    #[test]
    fn widely_scaled_coefficients() {
        // roots spanning 40 orders of magnitude
        let targets = [(1e-20, 0.0), (1e20, 0.0), (3.0, 4.0)];
        let coeffs = poly_from_roots(&targets, 512);
        let set = aberth_roots(&coeffs, 1000);
        assert!(set.converged);
        for z in &set.roots {
            let (re, im) = z.to_f64();
            let ok = ((re - 1e-20).abs() < 1e-40 && im.abs() < 1e-40)
                || ((re - 1e20).abs() < 1e5 && im.abs() < 1e5)
                || ((re - 3.0).abs() < 1e-30 && (im.abs() - 4.0).abs() < 1e-30);
            assert!(ok, "unexpected root {re}+{im}i");
        }
    }

    #[test]
    fn zero_and_degenerate_polynomials() {
        let prec = 128;
        let coeffs = [0.0, 0.0, -4.0, 1.0].map(|c| mp::float(prec, c));
        let set = aberth_roots(&coeffs, 100);
        let mut res: Vec<f64> = set.roots.iter().map(|z| z.to_f64().0).collect();
        res.sort_by(f64::total_cmp);
        assert_eq!(res.len(), 3);
        assert_eq!(res[0], 0.0);
        assert_eq!(res[1], 0.0);
        assert!((res[2] - 4.0).abs() < 1e-30);

        let constant = aberth_roots(&[mp::float(prec, 3.0)], 10);
        assert!(constant.roots.is_empty() && constant.converged);
    }
}
