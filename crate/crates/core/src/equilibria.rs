//! Closed-form Nash equilibria of the homogeneous game and their
//! admissibility.
//!
//! Substituting the customer best response into the advisor's gives, for
//! `s != d`, the quadratic
//!
//! ```text
//! 2 alpha s^2 - 2 alpha (d + x) s + 2 alpha x d - (gamma n / zeta)(r_s - r_d) = 0
//! ```
//!
//! whose roots `a >= b` are the advisor coordinates of the two candidate
//! equilibria `P*` and `P†`.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ModelParams, OpinionProfile, EPS_DEN};

/// Which of the two closed-form equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The `+` root, `P*`.
    Star,
    /// The `-` root, `P†`.
    Dagger,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Star => f.write_str("P*"),
            Branch::Dagger => f.write_str("P†"),
        }
    }
}

/// Roots of the equilibrium quadratic. `a` is always the `+` root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRoots {
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `(d-x)^2 + (2 gamma n / (alpha zeta)) (r_s - r_d)`.
    pub discriminant: f64,
}

impl QuadraticRoots {
    pub fn root(&self, branch: Branch) -> Option<f64> {
        match branch {
            Branch::Star => self.a,
            Branch::Dagger => self.b,
        }
    }

    /// Largest residual of the two roots in the quadratic, relative to
    /// `max(1, |coefficients|)`. Zero when there are no real roots.
    pub fn relative_residual(&self, p: &ModelParams) -> f64 {
        let (qa, qb, qc) = quadratic_coefficients(p);
        let scale = 1f64.max(qa.abs()).max(qb.abs()).max(qc.abs());
        [self.a, self.b]
            .into_iter()
            .flatten()
            .map(|s| (qa * s * s + qb * s + qc).abs() / scale)
            .fold(0.0, f64::max)
    }
}

fn quadratic_coefficients(p: &ModelParams) -> (f64, f64, f64) {
    let alpha = p.alpha();
    (
        2.0 * alpha,
        -2.0 * alpha * (p.d() + p.x()),
        2.0 * alpha * p.x() * p.d() - p.gamma() * p.nf() / p.zeta() * p.return_gap(),
    )
}

/// Discriminant of the equilibrium quadratic (scaled so that the roots are
/// `(d+x)/2 ± sqrt(disc)/2`).
pub fn discriminant(p: &ModelParams) -> f64 {
    (p.d() - p.x()).powi(2)
        + 2.0 * p.gamma() * p.nf() / (p.alpha() * p.zeta()) * p.return_gap()
}

pub fn solve_quadratic(p: &ModelParams) -> QuadraticRoots {
    let disc = discriminant(p);
    let (d, x) = (p.d(), p.x());
    if p.return_gap() == 0.0 {
        // Equal returns: the roots are exactly x and d.
        return QuadraticRoots {
            a: Some(d.max(x)),
            b: Some(d.min(x)),
            discriminant: disc,
        };
    }
    if disc < 0.0 {
        return QuadraticRoots {
            a: None,
            b: None,
            discriminant: disc,
        };
    }
    let half_root = 0.5 * disc.sqrt();
    // d + x >= 0, so the + root has no cancellation; b comes from the product.
    let a = 0.5 * (d + x) + half_root;
    let product = x * d - p.gamma() * p.nf() * p.return_gap() / (2.0 * p.alpha() * p.zeta());
    let b = if disc == 0.0 {
        a
    } else if a > 0.0 {
        product / a
    } else {
        0.5 * (d + x) - half_root
    };
    QuadraticRoots {
        a: Some(a),
        b: Some(b),
        discriminant: disc,
    }
}

/// Customer coordinate of the equilibrium with advisor coordinate `root`.
/// `None` when the root sits on the `s = d` singularity.
pub fn customer_coordinate(p: &ModelParams, root: f64) -> Option<f64> {
    let k = p.return_gap();
    if k == 0.0 {
        return Some(root);
    }
    let gap = root - p.d();
    if gap.abs() <= EPS_DEN {
        return None;
    }
    Some(k / (2.0 * p.zeta() * gap) + root)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityThresholds {
    /// `alpha zeta / (2 gamma n) (x-d)^2`.
    pub r_d_1: f64,
    /// `2 zeta alpha^2 ((x-d)/(alpha + gamma n))^2`.
    pub r_d_2: f64,
}

impl AdmissibilityThresholds {
    pub fn of(p: &ModelParams) -> Self {
        let (alpha, gn) = (p.alpha(), p.gamma() * p.nf());
        let spread = p.x() - p.d();
        AdmissibilityThresholds {
            r_d_1: alpha * p.zeta() / (2.0 * gn) * spread * spread,
            r_d_2: 2.0 * p.zeta() * alpha * alpha * (spread / (alpha + gn)).powi(2),
        }
    }
}

/// Admissibility predicted by the closed-form parameter regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionVerdict {
    pub star: bool,
    pub dagger: bool,
    pub thresholds: AdmissibilityThresholds,
}

/// Parameter-region admissibility for `r_s != r_d`:
///
/// - `P*` iff `d < x` and `r_s ∈ [r_d - r_d_1, r_d)` when `alpha < gamma n`,
///   or `r_s ∈ [r_d - r_d_2, r_d)` when `alpha >= gamma n`;
/// - `P†` iff `d < x`, `alpha < gamma n` and `r_s ∈ [r_d - r_d_1, r_d - r_d_2]`.
pub fn check_admissibility_regions(p: &ModelParams) -> Result<RegionVerdict> {
    if p.return_gap() == 0.0 {
        return Err(Error::EqualReturns);
    }
    let thresholds = AdmissibilityThresholds::of(p);
    let (r_d, r_s) = (p.r_d(), p.r_s());
    let below_x = p.d() < p.x();
    let weak_truth = p.alpha() < p.gamma() * p.nf();
    let in_lower = r_s >= r_d - thresholds.r_d_1;
    let star = below_x
        && r_s < r_d
        && if weak_truth {
            in_lower
        } else {
            r_s >= r_d - thresholds.r_d_2
        };
    let dagger = below_x && weak_truth && in_lower && r_s <= r_d - thresholds.r_d_2;
    Ok(RegionVerdict {
        star,
        dagger,
        thresholds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissibilitySource {
    /// Only the domain check `d <= c <= s <= 1` was available (`r_s = r_d`).
    Geometric,
    /// Only the parameter-region formulas were consulted.
    RegionFormula,
    /// Both were evaluated; the reported verdict is the geometric one.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPair {
    pub roots: QuadraticRoots,
    pub p_star: Option<OpinionProfile>,
    pub p_dagger: Option<OpinionProfile>,
    pub star_admissible: bool,
    pub dagger_admissible: bool,
    /// Region-formula verdict, present whenever `r_s != r_d`.
    pub region: Option<RegionVerdict>,
    pub admissibility_source: AdmissibilitySource,
    /// The roots coincide; only `p_star` is reported.
    pub degenerate: bool,
}

impl EquilibriumPair {
    pub fn get(&self, branch: Branch) -> Option<&OpinionProfile> {
        match branch {
            Branch::Star => self.p_star.as_ref(),
            Branch::Dagger => self.p_dagger.as_ref(),
        }
    }

    pub fn admissible(&self, branch: Branch) -> bool {
        match branch {
            Branch::Star => self.star_admissible,
            Branch::Dagger => self.dagger_admissible,
        }
    }

    /// Admissible equilibria in `(P*, P†)` order.
    pub fn admissible_points(&self) -> impl Iterator<Item = (Branch, &OpinionProfile)> {
        [Branch::Star, Branch::Dagger]
            .into_iter()
            .filter(|&b| self.admissible(b))
            .filter_map(|b| self.get(b).map(|q| (b, q)))
    }

    /// Whether region formulas and the domain check agree on both branches.
    /// `None` when no region verdict exists.
    pub fn verdicts_agree(&self) -> Option<bool> {
        self.region
            .map(|r| r.star == self.star_admissible && r.dagger == self.dagger_admissible)
    }
}

pub fn nash_equilibria(p: &ModelParams) -> EquilibriumPair {
    let roots = solve_quadratic(p);
    let n = p.n() as usize;
    let build = |root: Option<f64>| {
        root.and_then(|s| customer_coordinate(p, s).map(|c| OpinionProfile::uniform(n, c, s)))
    };
    let degenerate = matches!((roots.a, roots.b), (Some(a), Some(b)) if a == b);
    let p_star = build(roots.a);
    let p_dagger = if degenerate { None } else { build(roots.b) };
    let geometric = |q: &Option<OpinionProfile>| q.as_ref().is_some_and(|q| q.in_domain(p.d(), 0.0));
    let region = check_admissibility_regions(p).ok();
    EquilibriumPair {
        star_admissible: geometric(&p_star),
        dagger_admissible: geometric(&p_dagger),
        roots,
        p_star,
        p_dagger,
        admissibility_source: if region.is_some() {
            AdmissibilitySource::Both
        } else {
            AdmissibilitySource::Geometric
        },
        region,
        degenerate,
    }
}

/// Parameter limit under which the equilibria are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// `zeta -> +inf` (requires `n = 1`).
    ZetaInf,
    /// `alpha -> +inf`.
    AlphaInf,
    /// `gamma -> 0`.
    GammaZero,
}

/// A limit point `(s, c)` of one equilibrium branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPoint {
    pub branch: Branch,
    pub s: f64,
    pub c: f64,
}

pub fn limit_equilibria(p: &ModelParams, which: LimitKind) -> Result<Vec<LimitPoint>> {
    let (d, x, alpha, gamma) = (p.d(), p.x(), p.alpha(), p.gamma());
    match which {
        LimitKind::ZetaInf => {
            if p.n() != 1 {
                return Err(Error::UnsupportedN(p.n()));
            }
            let mid = 0.5 * (d + x);
            let half = 0.5 * (d - x).abs();
            let spread = x - d;
            let (s_star, s_dag) = (mid + half, mid - half);
            Ok(vec![
                LimitPoint {
                    branch: Branch::Star,
                    s: s_star,
                    c: s_star - alpha * (spread - spread.abs()) / (2.0 * gamma),
                },
                LimitPoint {
                    branch: Branch::Dagger,
                    s: s_dag,
                    c: s_dag - alpha * (spread + spread.abs()) / (2.0 * gamma),
                },
            ])
        }
        LimitKind::AlphaInf => Ok(vec![LimitPoint {
            branch: Branch::Star,
            s: x,
            c: x,
        }]),
        LimitKind::GammaZero => {
            let gap = x - d;
            if gap.abs() <= EPS_DEN {
                return Err(Error::DegenerateDenominator { gap });
            }
            Ok(vec![LimitPoint {
                branch: Branch::Star,
                s: x,
                c: p.return_gap() / (2.0 * p.zeta() * gap) + x,
            }])
        }
    }
}

/// Dissonance sensitivity at which one equilibrium branch reaches the
/// `c = d` edge of the domain (`n = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalZeta {
    /// `-(1/2) ((alpha+gamma)/alpha)^2 (r_s-r_d)/(x-d)^2`.
    pub zeta_bar: f64,
    /// `zeta_bar > 0`, which holds iff `r_s < r_d`.
    pub positive: bool,
    /// `(s, c)` of the last useful equilibrium; `c = d`.
    pub last_useful: (f64, f64),
    /// Branch that touches `c = d` at `zeta_bar`: `P†` when `alpha < gamma`.
    pub branch: Branch,
    /// `|c - d|` on that branch, re-solved at `zeta = zeta_bar`.
    pub boundary_residual: Option<f64>,
}

pub fn critical_zeta(p: &ModelParams) -> Result<CriticalZeta> {
    if p.n() != 1 {
        return Err(Error::UnsupportedN(p.n()));
    }
    let (d, x, alpha, gamma) = (p.d(), p.x(), p.alpha(), p.gamma());
    let spread = x - d;
    if spread.abs() <= EPS_DEN {
        return Err(Error::DegenerateDenominator { gap: spread });
    }
    let zeta_bar = -0.5 * ((alpha + gamma) / alpha).powi(2) * p.return_gap() / (spread * spread);
    // With n = 1 the equilibrium customer coordinate is s + alpha (s - x) / gamma,
    // which equals d exactly at s = (alpha x + gamma d) / (alpha + gamma).
    let s_edge = (alpha * x + gamma * d) / (alpha + gamma);
    let mid = 0.5 * (d + x);
    let branch = if s_edge <= mid { Branch::Dagger } else { Branch::Star };
    let positive = zeta_bar > 0.0;
    let boundary_residual = if positive && zeta_bar.is_finite() {
        p.with(crate::model::ParamName::Zeta, zeta_bar)
            .ok()
            .and_then(|at_bar| {
                let root = solve_quadratic(&at_bar).root(branch)?;
                customer_coordinate(&at_bar, root).map(|c| (c - d).abs())
            })
    } else {
        None
    };
    Ok(CriticalZeta {
        zeta_bar,
        positive,
        last_useful: (s_edge, d),
        branch,
        boundary_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ParamName, ParamValues};

    pub(crate) fn two_eq() -> ModelParams {
        ModelParams::new(ParamValues {
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
        })
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_equilibria_roots() {
        let r = solve_quadratic(&two_eq());
        assert!(close(r.discriminant, 0.01, 1e-15));
        assert!(close(r.a.unwrap(), 0.3, 1e-15));
        assert!(close(r.b.unwrap(), 0.2, 1e-15));
        assert!(r.relative_residual(&two_eq()) < 1e-14);
    }

    #[test]
    fn no_real_roots_regimes() {
        let r = solve_quadratic(&two_eq().with(ParamName::Zeta, 5.0).unwrap());
        assert!(close(r.discriminant, -0.07, 1e-15));
        assert!(r.a.is_none() && r.b.is_none());
        let r = solve_quadratic(&two_eq().with(ParamName::Gamma, 0.3).unwrap());
        assert!(close(r.discriminant, -0.03, 1e-15));
        assert!(r.a.is_none());
        let eq = nash_equilibria(&two_eq().with(ParamName::Zeta, 5.0).unwrap());
        assert!(eq.p_star.is_none() && eq.p_dagger.is_none());
        assert!(!eq.star_admissible && !eq.dagger_admissible);
    }

    #[test]
    fn two_equilibria_equilibria() {
        let eq = nash_equilibria(&two_eq());
        let star = eq.p_star.as_ref().unwrap();
        let dag = eq.p_dagger.as_ref().unwrap();
        assert!(close(star.s, 0.3, 1e-12) && close(star.c[0], 0.275, 1e-12));
        assert!(close(dag.s, 0.2, 1e-12) && close(dag.c[0], 0.15, 1e-12));
        assert!(eq.star_admissible && eq.dagger_admissible);
        assert_eq!(eq.admissibility_source, AdmissibilitySource::Both);
        assert_eq!(eq.verdicts_agree(), Some(true));
        assert!(!eq.degenerate);
    }

    #[test]
    fn equal_returns_give_exact_x_and_d() {
        let p = two_eq().with(ParamName::RS, 0.3).unwrap().with(ParamName::N, 3.0).unwrap();
        let eq = nash_equilibria(&p);
        assert_eq!(eq.p_star, Some(OpinionProfile::uniform(3, 0.4, 0.4)));
        assert_eq!(eq.p_dagger, Some(OpinionProfile::uniform(3, 0.1, 0.1)));
        assert_eq!(eq.admissibility_source, AdmissibilitySource::Geometric);
        assert!(eq.star_admissible && eq.dagger_admissible);
        assert!(matches!(check_admissibility_regions(&p), Err(Error::EqualReturns)));

        // d > x: only (d, ..., d) is admissible.
        let p = p.with(ParamName::D, 0.6).unwrap();
        let eq = nash_equilibria(&p);
        assert_eq!(eq.p_star, Some(OpinionProfile::uniform(3, 0.6, 0.6)));
        assert!(eq.star_admissible && !eq.dagger_admissible);

        // d = x: a single, degenerate equilibrium.
        let p = p.with(ParamName::D, 0.4).unwrap();
        let eq = nash_equilibria(&p);
        assert!(eq.degenerate && eq.p_dagger.is_none());
        assert_eq!(eq.p_star, Some(OpinionProfile::uniform(3, 0.4, 0.4)));
    }

    #[test]
    fn region_thresholds_two_equilibria() {
        let v = check_admissibility_regions(&two_eq()).unwrap();
        assert!(close(v.thresholds.r_d_1, 0.1125, 1e-15));
        assert!(close(v.thresholds.r_d_2, 0.072, 1e-15));
        assert!(v.star && v.dagger);
    }

    #[test]
    fn region_requires_d_below_x() {
        let p = two_eq().with(ParamName::D, 0.5).unwrap();
        let v = check_admissibility_regions(&p).unwrap();
        assert!(!v.star && !v.dagger);
        let eq = nash_equilibria(&p);
        assert!(!eq.star_admissible && !eq.dagger_admissible);
    }

    #[test]
    fn strong_truthfulness_admits_only_star() {
        // alpha = 0.5 > gamma n = 0.2; r_d_2 = 2*10*0.25*(0.3/0.7)^2 ≈ 0.918.
        let p = two_eq().with(ParamName::Alpha, 0.5).unwrap();
        let v = check_admissibility_regions(&p).unwrap();
        assert!(v.star && !v.dagger);
        let eq = nash_equilibria(&p);
        assert_eq!((eq.star_admissible, eq.dagger_admissible), (true, false));
    }

    #[test]
    fn tangent_discriminant_is_degenerate() {
        // r_d - r_s = r_d_1 = 0.1125 makes the discriminant vanish.
        let p = two_eq()
            .with(ParamName::RD, 0.5)
            .unwrap()
            .with(ParamName::RS, 0.5 - 0.1125)
            .unwrap();
        let r = solve_quadratic(&p);
        if r.discriminant == 0.0 {
            let eq = nash_equilibria(&p);
            assert!(eq.degenerate && eq.p_dagger.is_none());
        } else {
            assert!(r.discriminant.abs() < 1e-15);
        }
    }

    #[test]
    fn roots_on_the_singularity_are_absent() {
        // r_s = r_d would be exact; a tiny gap with x = d puts b within EPS_DEN of d.
        let p = two_eq().with(ParamName::X, 0.1).unwrap().with(ParamName::RS, 0.3 + 1e-17).unwrap();
        let eq = nash_equilibria(&p);
        assert!(eq.p_dagger.is_none() || !eq.dagger_admissible);
    }

    #[test]
    fn limits() {
        let pts = limit_equilibria(&two_eq(), LimitKind::ZetaInf).unwrap();
        assert!(close(pts[0].s, 0.4, 1e-15) && close(pts[0].c, 0.4, 1e-15));
        assert!(close(pts[1].s, 0.1, 1e-15) && close(pts[1].c, 0.025, 1e-15));
        let a = limit_equilibria(&two_eq(), LimitKind::AlphaInf).unwrap();
        assert_eq!((a[0].s, a[0].c), (0.4, 0.4));
        let g = limit_equilibria(&two_eq(), LimitKind::GammaZero).unwrap();
        assert!(close(g[0].s, 0.4, 1e-15));
        assert!(close(g[0].c, 0.4 - 0.1 / 6.0, 1e-15));
        let n2 = two_eq().with(ParamName::N, 2.0).unwrap();
        assert!(matches!(limit_equilibria(&n2, LimitKind::ZetaInf), Err(Error::UnsupportedN(2))));
        let flat = two_eq().with(ParamName::X, 0.1).unwrap();
        assert!(limit_equilibria(&flat, LimitKind::GammaZero).is_err());
    }

    #[test]
    fn zeta_limit_general_sign() {
        // d > x swaps the roles: P* tends to (d, d), P† to (x, x - alpha (x-d)/gamma ...).
        let p = two_eq().with(ParamName::D, 0.6).unwrap();
        let pts = limit_equilibria(&p, LimitKind::ZetaInf).unwrap();
        let alpha_over_gamma = 0.25;
        assert!(close(pts[0].s, 0.6, 1e-15));
        assert!(close(pts[0].c, 0.6 + alpha_over_gamma * 0.2, 1e-15));
        assert!(close(pts[1].s, 0.4, 1e-15) && close(pts[1].c, 0.4, 1e-15));
    }

    #[test]
    fn critical_zeta_two_equilibria() {
        let cz = critical_zeta(&two_eq()).unwrap();
        assert!(close(cz.zeta_bar, 12.5 * (0.1 / 0.09), 1e-12));
        assert!(cz.positive);
        assert_eq!(cz.branch, Branch::Dagger);
        assert!(close(cz.last_useful.0, 0.16, 1e-15));
        assert_eq!(cz.last_useful.1, 0.1);
        assert!(cz.boundary_residual.unwrap() < 1e-9);

        let flat = two_eq().with(ParamName::RS, 0.3).unwrap();
        let cz = critical_zeta(&flat).unwrap();
        assert_eq!(cz.zeta_bar, 0.0);
        assert!(!cz.positive && cz.boundary_residual.is_none());

        let n2 = two_eq().with(ParamName::N, 2.0).unwrap();
        assert!(matches!(critical_zeta(&n2), Err(Error::UnsupportedN(2))));
    }

    #[test]
    fn last_useful_matches_absolute_value_form() {
        for &(alpha, gamma) in &[(0.05, 0.2), (0.1, 0.3), (0.01, 1.0)] {
            let p = two_eq()
                .with(ParamName::Alpha, alpha)
                .unwrap()
                .with(ParamName::Gamma, gamma)
                .unwrap();
            let (d, x) = (p.d(), p.x());
            let expected =
                0.5 * (d + x) - 0.5 * ((d - x) * (alpha - gamma)).abs() / (alpha + gamma);
            let cz = critical_zeta(&p).unwrap();
            assert!(close(cz.last_useful.0, expected, 1e-15));
            assert!(cz.boundary_residual.unwrap() < 1e-9);
        }
    }

    #[test]
    fn strong_truthfulness_edge_is_on_star_branch() {
        let p = two_eq().with(ParamName::Alpha, 0.5).unwrap();
        let cz = critical_zeta(&p).unwrap();
        assert_eq!(cz.branch, Branch::Star);
        assert!(cz.boundary_residual.unwrap() < 1e-9);
    }
}
