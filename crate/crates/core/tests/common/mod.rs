#![allow(dead_code)]

use pfgame::{ModelParams, ParamValues};
use rand::Rng;

/// Two-equilibrium example: `d=0.1, x=0.4, alpha=0.05, gamma=0.2, zeta=10,
/// n=1, r_s - r_d = -0.1`, with `beta=0.1, w=0.5` for the welfare terms.
pub fn two_eq_values() -> ParamValues {
    ParamValues {
        d: 0.1,
        x: 0.4,
        w: 0.5,
        n: 1,
        alpha: 0.05,
        beta: 0.1,
        gamma: 0.2,
        zeta: 10.0,
        r_d: 0.3,
        r_s: 0.2,
    }
}

pub fn two_eq() -> ModelParams {
    ModelParams::new(two_eq_values()).unwrap()
}

/// Strong-truth example used for the large-gamma sweep:
/// `d=0.5, x=0.7, alpha=8, zeta=100, n=1, r_s - r_d = -0.1`.
pub fn strong_advisor_values() -> ParamValues {
    ParamValues {
        d: 0.5,
        x: 0.7,
        alpha: 8.0,
        zeta: 100.0,
        gamma: 10.0,
        ..two_eq_values()
    }
}

/// A broad homogeneous parameter draw.
pub fn random_values<R: Rng>(rng: &mut R) -> ParamValues {
    ParamValues {
        d: rng.gen_range(0.0..0.9),
        x: rng.gen_range(0.0..=1.0),
        w: rng.gen_range(0.0..=1.0),
        n: rng.gen_range(1..=3),
        alpha: rng.gen_range(0.01..5.0),
        beta: rng.gen_range(0.01..5.0),
        gamma: rng.gen_range(0.01..5.0),
        zeta: rng.gen_range(0.1..50.0),
        r_d: rng.gen_range(0.0..=1.0),
        r_s: rng.gen_range(0.0..=1.0),
    }
}

pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    ModelParams::new(random_values(rng)).unwrap()
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// Real roots of `f` on `[lo, hi]` by sign scan at `step` and bisection to
/// machine precision. Independent of the library's polynomial solver.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=steps {
        let b = (lo + i as f64 * step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let fm = f(m);
                if fm == 0.0 || m == l || m == r {
                    l = m;
                    r = m;
                    break;
                }
                if fl * fm < 0.0 {
                    r = m;
                } else {
                    l = m;
                    fl = fm;
                }
            }
            roots.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    roots
}
