//! Roots and sign classification of `w4 z^4 + w3 z^3 + w2 z^2 + w1 z + w0`.
//!
//! Roots come from Aberth-Ehrlich simultaneous iteration followed by Newton
//! polishing; near-real roots are snapped to the real axis and refined there.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance deciding whether a computed root counts as real.
pub const REAL_TOL: f64 = 1e-9;

/// Residual contract: `|p(z)| <= RESIDUAL_TOL * sum |w_i| |z|^i` for every root.
pub const RESIDUAL_TOL: f64 = 1e-8;

const MAX_ITER: usize = 500;

/// Coefficients `w0..w4` (index = power of `z`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients(pub [f64; 5]);

impl QuarticCoefficients {
    pub fn new(w0: f64, w1: f64, w2: f64, w3: f64, w4: f64) -> Self {
        QuarticCoefficients([w0, w1, w2, w3, w4])
    }

    pub fn w(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &w| acc * z + w)
    }

    pub fn eval_real(&self, y: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &w| acc * y + w)
    }

    fn eval_real_derivative(&self, y: f64) -> f64 {
        (1..5).rev().fold(0.0, |acc, i| acc * y + i as f64 * self.0[i])
    }
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= REAL_TOL * (1.0 + z.re.abs())
}

/// Value and derivative of a polynomial with coefficients in ascending order.
fn horner(coef: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coef.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn aberth(coef: &[f64]) -> Vec<Complex64> {
    let m = coef.len() - 1;
    match m {
        0 => return Vec::new(),
        1 => return vec![Complex64::new(-coef[0] / coef[1], 0.0)],
        _ => {}
    }
    let radius = (coef[0] / coef[m]).abs().powf(1.0 / m as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / m as f64))
        .collect();
    for _ in 0..MAX_ITER {
        let mut moved = 0.0f64;
        for k in 0..m {
            let (p, dp) = horner(coef, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..m)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved <= 1e-16 {
            break;
        }
    }
    z
}

/// All four roots, with multiplicity, sorted by real part then imaginary part.
pub fn solve_quartic(omega: &QuarticCoefficients) -> Result<[Complex64; 4]> {
    let w = omega.0;
    if w[4].abs() <= 1e-300 {
        return Err(Error::DegenerateLeadingCoefficient);
    }
    let mut roots = Vec::with_capacity(4);
    // Exact zero roots are factored out before iterating.
    let first = w.iter().position(|&c| c != 0.0).unwrap_or(4);
    roots.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), first));
    roots.extend(aberth(&w[first..]));

    for z in roots.iter_mut() {
        // Complex Newton polish, keeping the best iterate.
        let mut best = omega.eval(*z).norm();
        for _ in 0..4 {
            let (p, dp) = horner(&w, *z);
            let cand = *z - p / dp;
            if !cand.is_finite() {
                break;
            }
            let r = omega.eval(cand).norm();
            if r < best {
                best = r;
                *z = cand;
            } else {
                break;
            }
        }
        if is_real(*z) {
            let mut y = z.re;
            let mut best = omega.eval_real(y).abs();
            for _ in 0..8 {
                let dp = omega.eval_real_derivative(y);
                if dp == 0.0 {
                    break;
                }
                let cand = y - omega.eval_real(y) / dp;
                let r = omega.eval_real(cand).abs();
                if r < best {
                    best = r;
                    y = cand;
                } else {
                    break;
                }
            }
            *z = Complex64::new(y, 0.0);
        }
        // Backward-error scale: evaluation rounding grows like sum |w_i| |z|^i.
        let m = z.norm();
        let scale: f64 = w.iter().rev().fold(0.0, |acc, c| acc * m + c.abs());
        let residual = omega.eval(*z).norm();
        if residual.is_nan() || residual > RESIDUAL_TOL * scale {
            return Err(Error::ContractViolation(format!(
                "quartic root {z} has residual {residual:e} (limit {:e})",
                RESIDUAL_TOL * scale
            )));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok([roots[0], roots[1], roots[2], roots[3]])
}

/// Classical invariants of the quartic. With `w2 = 0` they reduce to
///
/// ```text
/// Delta = 256 w4^3 w0^3 - 192 w4^2 w3 w1 w0^2 - 27 w4^2 w1^4
///         - 6 w4 w3^2 w1^2 w0 - 27 w3^4 w0^2 - 4 w3^3 w1^3
/// D     = 64 w4^3 w0 - 16 w4^2 w3 w1 - 3 w3^4
/// P     = -3 w3^2
/// R     = w3^3 + 8 w1 w4^2
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub delta: f64,
    pub d: f64,
    pub p: f64,
    pub r: f64,
}

pub fn invariants(omega: &QuarticCoefficients) -> Invariants {
    let [e, d, c, b, a] = omega.0;
    let delta = 256.0 * a.powi(3) * e.powi(3) - 192.0 * a * a * b * d * e * e
        - 128.0 * a * a * c * c * e * e
        + 144.0 * a * a * c * d * d * e
        - 27.0 * a * a * d.powi(4)
        + 144.0 * a * b * b * c * e * e
        - 6.0 * a * b * b * d * d * e
        - 80.0 * a * b * c * c * d * e
        + 18.0 * a * b * c * d.powi(3)
        + 16.0 * a * c.powi(4) * e
        - 4.0 * a * c.powi(3) * d * d
        - 27.0 * b.powi(4) * e * e
        + 18.0 * b.powi(3) * c * d * e
        - 4.0 * b.powi(3) * d.powi(3)
        - 4.0 * b * b * c.powi(3) * e
        + b * b * c * c * d * d;
    Invariants {
        delta,
        d: 64.0 * a.powi(3) * e - 16.0 * a * a * c * c + 16.0 * a * b * b * c
            - 16.0 * a * a * b * d
            - 3.0 * b.powi(4),
        p: 8.0 * a * c - 3.0 * b * b,
        r: b.powi(3) + 8.0 * d * a * a - 4.0 * a * b * c,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarticAnalysis {
    pub omega: QuarticCoefficients,
    pub invariants: Invariants,
    pub roots: [Complex64; 4],
    /// Real roots (snapped), ascending, with multiplicity.
    pub real_roots: Vec<f64>,
    /// No computed root is real.
    pub all_nonreal: bool,
    /// `w4 - |w1| - |w3| + w0 > 0`, `4 w4 - |w1| - 3 |w3| < 0` and
    /// `(Delta <= 0 or D <= 0)`.
    pub omega_member: bool,
    /// `w0, w4 > 0` and `w1, w3` nonzero with a common sign.
    pub sign_precondition_ok: bool,
}

impl QuarticAnalysis {
    /// `Delta > 0 and D > 0`, the invariant test for "no real roots".
    pub fn invariants_predict_nonreal(&self) -> bool {
        self.invariants.delta > 0.0 && self.invariants.d > 0.0
    }

    /// Some root sits close enough to the real axis that its reality depends
    /// on rounding: `REAL_TOL < |im| / (1 + |re|) <= 1e-6`.
    pub fn near_real_ambiguity(&self) -> bool {
        self.roots.iter().any(|z| {
            let rel = z.im.abs() / (1.0 + z.re.abs());
            rel > REAL_TOL && rel <= 1e-6
        })
    }

    pub fn min_modulus(&self) -> f64 {
        self.roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn min_real_root_modulus(&self) -> Option<f64> {
        self.real_roots.iter().map(|y| y.abs()).reduce(f64::min)
    }

    pub fn max_real_part(&self) -> f64 {
        self.roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn classify_quartic(omega: &QuarticCoefficients) -> Result<QuarticAnalysis> {
    let roots = solve_quartic(omega)?;
    let inv = invariants(omega);
    let [w0, w1, _, w3, w4] = omega.0;
    let mut real_roots: Vec<f64> = roots.iter().filter(|z| is_real(**z)).map(|z| z.re).collect();
    real_roots.sort_by(f64::total_cmp);
    let omega_member = w4 - w1.abs() - w3.abs() + w0 > 0.0
        && 4.0 * w4 - w1.abs() - 3.0 * w3.abs() < 0.0
        && (inv.delta <= 0.0 || inv.d <= 0.0);
    let sign_precondition_ok =
        w0 > 0.0 && w4 > 0.0 && ((w1 > 0.0 && w3 > 0.0) || (w1 < 0.0 && w3 < 0.0));
    Ok(QuarticAnalysis {
        omega: *omega,
        invariants: inv,
        all_nonreal: real_roots.is_empty(),
        real_roots,
        roots,
        omega_member,
        sign_precondition_ok,
    })
}
