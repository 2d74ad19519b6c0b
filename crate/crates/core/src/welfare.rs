//! Social-welfare optimum over the strategy domain and the price of stability.
//!
//! For fixed `s` the welfare is a sum of identical strictly concave functions of
//! the `c_i`, so the optimum has every customer at the same opinion. The search
//! therefore runs over the symmetric slice `d <= c <= s <= 1`: stationary points
//! in its interior come from the real roots of a quartic in `y = s - d`, and each
//! of its three edges (`c = d`, `s = 1`, `c = s`) is a one-dimensional problem.

use std::fmt;

use crate::equilibria::{nash_equilibria, Branch, EquilibriumPair};
use crate::error::{Error, Result};
use crate::model::{social_welfare, Game, ModelParams, OpinionProfile, EPS_DEN};
use crate::quartic::{classify_quartic, QuarticAnalysis, QuarticCoefficients};

/// Samples per face before golden-section refinement.
pub const FACE_SAMPLES: usize = 10_000;
/// Final bracket width of the golden-section refinement.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Equilibrium welfare values closer than this are a tie, resolved to `P*`.
pub const TIE_TOL: f64 = 1e-12;

/// Coefficients of the stationarity quartic in `y = s - d`:
///
/// ```text
/// w0 = n (r_d - r_s)^2
/// w1 = 2 beta n (r_d - r_s)(d - w)
/// w2 = 0
/// w3 = 4 [beta n (d - w)(gamma + zeta) + alpha (d - x)(beta + gamma + zeta)]
/// w4 = 4 [beta n (gamma + zeta) + alpha (beta + gamma + zeta)]
/// ```
pub fn quartic_coefficients(p: &ModelParams) -> QuarticCoefficients {
    let n = p.nf();
    let (alpha, beta) = (p.alpha(), p.beta());
    let g = p.gamma() + p.zeta();
    let drop = p.r_d() - p.r_s();
    let dw = p.d() - p.w();
    QuarticCoefficients::new(
        n * drop * drop,
        2.0 * beta * n * drop * dw,
        0.0,
        4.0 * (beta * n * dw * g + alpha * (p.d() - p.x()) * (beta + g)),
        4.0 * (beta * n * g + alpha * (beta + g)),
    )
}

/// Boundary faces of the symmetric slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// `c = d`.
    CustomerAtBaseline,
    /// `s = 1`.
    AdvisorAtOne,
    /// `c = s`.
    CustomerAtAdvisor,
}

impl Face {
    pub const ALL: [Face; 3] = [Face::CustomerAtBaseline, Face::AdvisorAtOne, Face::CustomerAtAdvisor];

    pub fn as_str(self) -> &'static str {
        match self {
            Face::CustomerAtBaseline => "c=d",
            Face::AdvisorAtOne => "s=1",
            Face::CustomerAtAdvisor => "c=s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumLocation {
    Interior,
    BoundaryFace(Face),
}

impl fmt::Display for OptimumLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimumLocation::Interior => f.write_str("interior"),
            OptimumLocation::BoundaryFace(face) => write!(f, "boundary:{}", face.as_str()),
        }
    }
}

/// Boundary test for the full domain: every coordinate in `[d, 1]`,
/// `max c_i <= s`, and `prod (c_i - d)(s - c_i) * (s - 1) = 0`, a factor counting
/// as zero when its magnitude is at most `1e-12`.
pub fn boundary_membership(p: &ModelParams, q: &OpinionProfile) -> bool {
    const TOL: f64 = 1e-12;
    let d = p.d();
    let in_box = |v: f64| v >= d - TOL && v <= 1.0 + TOL;
    if !in_box(q.s) || !q.c.iter().all(|&c| in_box(c)) {
        return false;
    }
    let max_c = q.c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_c > q.s + TOL {
        return false;
    }
    (q.s - 1.0).abs() <= TOL
        || q.c.iter().any(|&c| (c - d).abs() <= TOL || (q.s - c).abs() <= TOL)
}

/// Maximizes `f` on `[lo, hi]` by uniform sampling followed by golden-section
/// search around the best sample. NaN values count as `-inf`.
pub fn maximize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let eval = |t: f64| {
        let v = f(t);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let steps = FACE_SAMPLES - 1;
    let at = |j: usize| if j == steps { hi } else { lo + (hi - lo) * j as f64 / steps as f64 };
    let (mut best_j, mut best_v) = (0, eval(lo));
    for j in 1..=steps {
        let v = eval(at(j));
        if v > best_v {
            best_j = j;
            best_v = v;
        }
    }
    let mut a = at(best_j.saturating_sub(1));
    let mut b = at((best_j + 1).min(steps));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    while b - a > GOLDEN_TOL {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = eval(x2);
        }
    }
    let (t, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if v >= best_v {
        (t, v)
    } else {
        (at(best_j), best_v)
    }
}

/// A stationary point of the welfare strictly inside the symmetric slice.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorCandidate {
    pub y: f64,
    pub profile: OpinionProfile,
    pub value: f64,
}

/// Customer opinion that zeroes the welfare's `c`-derivative at a given `s`.
pub fn stationary_customer_opinion(p: &ModelParams, s: f64) -> f64 {
    let (beta, g) = (p.beta(), p.gamma() + p.zeta());
    (2.0 * beta * p.w() + 2.0 * g * s + p.return_gap() / (s - p.d())) / (2.0 * beta + 2.0 * g)
}

/// Real quartic roots `y ∈ (EPS_DEN, 1 - d]` whose reconstructed customer
/// opinion lies strictly between `d` and `s`.
pub fn interior_candidates(p: &ModelParams) -> Result<(QuarticAnalysis, Vec<InteriorCandidate>)> {
    let analysis = classify_quartic(&quartic_coefficients(p))?;
    let d = p.d();
    let mut out = Vec::new();
    for &y in &analysis.real_roots {
        if y <= EPS_DEN || y > 1.0 - d {
            continue;
        }
        let s = d + y;
        let c = stationary_customer_opinion(p, s);
        if !(c > d && c < s) {
            continue;
        }
        let profile = OpinionProfile::uniform(p.n() as usize, c, s);
        let value = social_welfare(p, &profile)?;
        out.push(InteriorCandidate { y, profile, value });
    }
    Ok((analysis, out))
}

/// Welfare at the symmetric point `c = d + t (s - d)`. Writing the customer
/// opinion through its weight `t` keeps the interpolation term exact where
/// `(c - d) / (s - d)` would cancel catastrophically, e.g. on `c = s` near `s = d`.
pub fn symmetric_welfare(p: &ModelParams, s: f64, t: f64) -> f64 {
    let c = p.d() + t * (s - p.d());
    -p.alpha() * (s - p.x()).powi(2)
        - p.nf()
            * (p.beta() * (p.w() - c).powi(2) + (p.gamma() + p.zeta()) * (s - c).powi(2)
                - p.r_d()
                - t * p.return_gap())
}

/// Best point of one boundary face of the symmetric slice.
pub fn face_optimum(p: &ModelParams, face: Face) -> Result<(OpinionProfile, f64)> {
    let d = p.d();
    let n = p.n() as usize;
    let lo = d + 2.0 * EPS_DEN;
    if lo >= 1.0 {
        return Err(Error::DegenerateDenominator { gap: 1.0 - d });
    }
    let (profile, value) = match face {
        Face::CustomerAtBaseline => {
            let (s, v) = maximize_1d(|s| symmetric_welfare(p, s, 0.0), lo, 1.0);
            (OpinionProfile::uniform(n, d, s), v)
        }
        Face::AdvisorAtOne => {
            let (t, v) = maximize_1d(|t| symmetric_welfare(p, 1.0, t), 0.0, 1.0);
            (OpinionProfile::uniform(n, d + t * (1.0 - d), 1.0), v)
        }
        Face::CustomerAtAdvisor => {
            let (s, v) = maximize_1d(|s| symmetric_welfare(p, s, 1.0), lo, 1.0);
            (OpinionProfile::uniform(n, s, s), v)
        }
    };
    Ok((profile, value))
}

/// Advisor and (per-customer) customer utility at an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerUtilities {
    pub advisor: f64,
    pub customer: f64,
}

impl PlayerUtilities {
    /// `u_A + n u_CL`, the welfare at the equilibrium.
    pub fn welfare(&self, n: u32) -> f64 {
        self.advisor + f64::from(n) * self.customer
    }
}

/// Closed-form utilities at the equilibrium with advisor coordinate `root`:
///
/// ```text
/// u_A  = -alpha (root-x)^2 - beta n (w - k/(2 zeta (root-d)) - root)^2
///        - gamma n / (4 zeta^2) (k/(root-d))^2
/// u_CL = r_s + 1/(4 zeta) (k/(root-d))^2
/// ```
///
/// with `k = r_s - r_d`; the correction terms vanish identically when `k = 0`.
pub fn closed_form_utilities(p: &ModelParams, root: f64) -> Result<PlayerUtilities> {
    let k = p.return_gap();
    let ratio = if k == 0.0 {
        0.0
    } else {
        let gap = root - p.d();
        if gap.abs() <= EPS_DEN {
            return Err(Error::DegenerateDenominator { gap });
        }
        k / gap
    };
    let (zeta, n) = (p.zeta(), p.nf());
    Ok(PlayerUtilities {
        advisor: -p.alpha() * (root - p.x()).powi(2)
            - p.beta() * n * (p.w() - ratio / (2.0 * zeta) - root).powi(2)
            - p.gamma() * n / (4.0 * zeta * zeta) * ratio * ratio,
        customer: p.r_s() + ratio * ratio / (4.0 * zeta),
    })
}

/// Utilities at one equilibrium of `eq`, cross-checked against direct
/// evaluation of the utility functions when those are defined.
pub fn utilities_at_equilibrium(
    p: &ModelParams,
    eq: &EquilibriumPair,
    branch: Branch,
) -> Result<PlayerUtilities> {
    let (Some(q), Some(root)) = (eq.get(branch), eq.roots.root(branch)) else {
        return Err(Error::MissingEquilibrium(branch));
    };
    let closed = closed_form_utilities(p, root)?;
    if (q.s - p.d()).abs() > EPS_DEN {
        let advisor = p.advisor().utility(q);
        let customer = p.shared_customer().utility(q.c[0], q.s)?;
        for (what, a, b) in [("advisor", closed.advisor, advisor), ("customer", closed.customer, customer)] {
            if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::ContractViolation(format!(
                    "{what} utility at {branch}: closed form {a} vs direct {b}"
                )));
            }
        }
    }
    Ok(closed)
}

/// Utilities at both equilibria; fails if either is absent.
pub fn utilities_at_equilibria(
    p: &ModelParams,
    eq: &EquilibriumPair,
) -> Result<(PlayerUtilities, PlayerUtilities)> {
    Ok((
        utilities_at_equilibrium(p, eq, Branch::Star)?,
        utilities_at_equilibrium(p, eq, Branch::Dagger)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosFlag {
    NegativeDenominator,
    ZeroDenominator,
    NoEquilibria,
}

impl PosFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosFlag::NegativeDenominator => "NegativeDenominator",
            PosFlag::ZeroDenominator => "ZeroDenominator",
            PosFlag::NoEquilibria => "NoEquilibria",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceOfStability {
    /// Welfare of the best admissible equilibrium.
    pub numerator: Option<f64>,
    /// Welfare optimum `SW_M`.
    pub denominator: f64,
    pub best: Option<Branch>,
    /// `numerator / denominator`, only when the denominator is positive.
    pub ratio: Option<f64>,
    pub flags: Vec<PosFlag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareReport {
    pub sw_max: f64,
    pub argmax: OpinionProfile,
    pub location: OptimumLocation,
    pub quartic: QuarticAnalysis,
    pub interior: Vec<InteriorCandidate>,
    /// Welfare at `P*` when it is admissible.
    pub sw_at_star: Option<f64>,
    /// Welfare at `P†` when it is admissible.
    pub sw_at_dagger: Option<f64>,
    pub pos: PriceOfStability,
}

fn price_from(sw_max: f64, star: Option<f64>, dagger: Option<f64>) -> PriceOfStability {
    let (best, numerator) = match (star, dagger) {
        (Some(a), Some(b)) if b > a + TIE_TOL => (Some(Branch::Dagger), Some(b)),
        (Some(a), _) => (Some(Branch::Star), Some(a)),
        (None, Some(b)) => (Some(Branch::Dagger), Some(b)),
        (None, None) => (None, None),
    };
    let mut flags = Vec::new();
    if sw_max < 0.0 {
        flags.push(PosFlag::NegativeDenominator);
    } else if sw_max == 0.0 {
        flags.push(PosFlag::ZeroDenominator);
    }
    if numerator.is_none() {
        flags.push(PosFlag::NoEquilibria);
    }
    PriceOfStability {
        numerator,
        denominator: sw_max,
        best,
        ratio: numerator.filter(|_| sw_max > 0.0).map(|num| num / sw_max),
        flags,
    }
}

/// Welfare optimum, equilibrium welfare and price of stability.
pub fn maximize_welfare(p: &ModelParams) -> Result<WelfareReport> {
    let (quartic, interior) = interior_candidates(p)?;
    let mut best: Option<(OpinionProfile, f64, OptimumLocation)> = interior
        .iter()
        .map(|cand| (cand.profile.clone(), cand.value, OptimumLocation::Interior))
        .reduce(|a, b| if b.1 > a.1 { b } else { a });
    for face in Face::ALL {
        let (q, v) = face_optimum(p, face)?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((q, v, OptimumLocation::BoundaryFace(face)));
        }
    }
    let (argmax, sw_max, location) = best.expect("faces always yield a candidate");

    let eq = nash_equilibria(p);
    let sw_at = |branch: Branch| -> Result<Option<f64>> {
        if !eq.admissible(branch) {
            return Ok(None);
        }
        Ok(Some(utilities_at_equilibrium(p, &eq, branch)?.welfare(p.n())))
    };
    let sw_at_star = sw_at(Branch::Star)?;
    let sw_at_dagger = sw_at(Branch::Dagger)?;
    Ok(WelfareReport {
        pos: price_from(sw_max, sw_at_star, sw_at_dagger),
        sw_max,
        argmax,
        location,
        quartic,
        interior,
        sw_at_star,
        sw_at_dagger,
    })
}

pub fn price_of_stability(p: &ModelParams) -> Result<PriceOfStability> {
    maximize_welfare(p).map(|r| r.pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ParamName, ParamValues};

    fn two_eq() -> ModelParams {
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

    #[test]
    fn quartic_coefficients_two_equilibria() {
        let q = quartic_coefficients(&two_eq());
        let expected = [0.01, -0.008, 0.0, -2.25, 6.14];
        for (got, want) in q.0.iter().zip(expected) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn quartic_coefficients_vanish_when_all_differences_do() {
        let p = two_eq()
            .with(ParamName::RS, 0.3)
            .unwrap()
            .with(ParamName::W, 0.1)
            .unwrap()
            .with(ParamName::X, 0.1)
            .unwrap();
        let q = quartic_coefficients(&p);
        assert_eq!((q.w(0), q.w(1), q.w(2), q.w(3)), (0.0, 0.0, 0.0, 0.0));
        assert!(q.w(4) > 0.0);
    }

    #[test]
    fn quartic_coefficient_signs() {
        let q = quartic_coefficients(&two_eq());
        assert!(q.w(1) < 0.0 && q.w(3) < 0.0 && q.w(0) > 0.0 && q.w(4) > 0.0);
    }

    #[test]
    fn boundary_examples() {
        let p = two_eq();
        assert!(boundary_membership(&p, &OpinionProfile::uniform(1, 0.1, 0.5)));
        assert!(boundary_membership(&p, &OpinionProfile::uniform(1, 0.3, 0.3)));
        assert!(boundary_membership(&p, &OpinionProfile::uniform(1, 0.6, 1.0)));
        assert!(!boundary_membership(&p, &OpinionProfile::uniform(1, 0.2, 0.5)));
        assert!(!boundary_membership(&p, &OpinionProfile::uniform(1, 0.6, 0.5)));
        let p3 = p.with(ParamName::N, 2.0).unwrap();
        assert!(boundary_membership(&p3, &OpinionProfile::new(vec![0.1, 0.3], 0.5)));
        assert!(!boundary_membership(&p3, &OpinionProfile::new(vec![0.2, 0.3], 0.5)));
    }

    #[test]
    fn symmetric_welfare_matches_direct_form() {
        let p = two_eq().with(ParamName::N, 3.0).unwrap();
        for (s, t) in [(0.3, 0.25), (0.9, 0.0), (0.55, 1.0), (1.0, 0.7)] {
            let c = p.d() + t * (s - p.d());
            let direct = social_welfare(&p, &OpinionProfile::uniform(3, c, s)).unwrap();
            assert!((symmetric_welfare(&p, s, t) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn maximize_1d_finds_quadratic_peak() {
        let (t, v) = maximize_1d(|t| -(t - 0.123456789).powi(2) + 2.0, 0.0, 1.0);
        // Near a quadratic peak values only resolve the location to ~sqrt(eps).
        assert!((t - 0.123456789).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
        let (t, _) = maximize_1d(|t| t, 0.0, 1.0);
        assert!((t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equal_returns_and_aligned_bank_peak_at_x() {
        let p = two_eq()
            .with(ParamName::RS, 0.3)
            .unwrap()
            .with(ParamName::W, 0.4)
            .unwrap()
            .with(ParamName::N, 2.0)
            .unwrap();
        let r = maximize_welfare(&p).unwrap();
        assert!((r.sw_max - 2.0 * 0.3).abs() < 1e-12);
        assert!((r.argmax.s - 0.4).abs() < 1e-6);
        assert!((r.pos.ratio.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.pos.best, Some(Branch::Star));
    }

    #[test]
    fn no_equilibria_flag() {
        let p = two_eq().with(ParamName::Zeta, 5.0).unwrap();
        let pos = price_of_stability(&p).unwrap();
        assert!(pos.ratio.is_none() && pos.numerator.is_none());
        assert!(pos.flags.contains(&PosFlag::NoEquilibria));
    }

    #[test]
    fn pos_tie_prefers_star_and_negative_denominator_suppresses_ratio() {
        let pos = price_from(1.0, Some(0.5), Some(0.5 + 1e-13));
        assert_eq!(pos.best, Some(Branch::Star));
        let pos = price_from(1.0, Some(0.5), Some(0.6));
        assert_eq!(pos.best, Some(Branch::Dagger));
        assert_eq!(pos.ratio, Some(0.6));
        let pos = price_from(-1.0, Some(-2.0), None);
        assert!(pos.ratio.is_none());
        assert_eq!(pos.numerator, Some(-2.0));
        assert_eq!(pos.flags, vec![PosFlag::NegativeDenominator]);
        let pos = price_from(0.0, None, None);
        assert_eq!(pos.flags, vec![PosFlag::ZeroDenominator, PosFlag::NoEquilibria]);
    }

    #[test]
    fn closed_form_utilities_two_equilibria() {
        let p = two_eq();
        let eq = nash_equilibria(&p);
        let (star, dagger) = utilities_at_equilibria(&p, &eq).unwrap();
        assert!((star.customer - (0.2 + 0.00625)).abs() < 1e-14);
        assert!((star.advisor + 0.0056875).abs() < 1e-14);
        assert!((dagger.customer - 0.225).abs() < 1e-14);
        assert!((dagger.advisor + 0.01475).abs() < 1e-14);
    }

    #[test]
    fn closed_form_utilities_equal_returns() {
        let p = two_eq().with(ParamName::RS, 0.3).unwrap();
        let eq = nash_equilibria(&p);
        let u = utilities_at_equilibrium(&p, &eq, Branch::Star).unwrap();
        assert_eq!(u.customer, 0.3);
        // P† sits at s = d, where only the closed form is defined.
        let u = utilities_at_equilibrium(&p, &eq, Branch::Dagger).unwrap();
        assert_eq!(u.customer, 0.3);
    }

    #[test]
    fn missing_equilibrium_is_an_error() {
        let p = two_eq().with(ParamName::Zeta, 5.0).unwrap();
        let eq = nash_equilibria(&p);
        assert_eq!(
            utilities_at_equilibrium(&p, &eq, Branch::Star),
            Err(Error::MissingEquilibrium(Branch::Star))
        );
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        let p = two_eq().with(ParamName::D, 1.0).unwrap();
        assert!(matches!(maximize_welfare(&p), Err(Error::DegenerateDenominator { .. })));
    }
}
