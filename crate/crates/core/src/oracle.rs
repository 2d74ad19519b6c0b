//! Brute-force verifiers: grid search for the welfare optimum, iterated best
//! responses, and random unilateral deviations.
//!
//! The grid search parametrizes the domain as `s = d + u (1 - d)` and
//! `c_i = d_i + t_i (s - d_i)` with `u, t_i ∈ [0, 1]`. In these coordinates the
//! customer's interpolation term is just `r_d + t (r_s - r_d)`, so welfare is a
//! polynomial on a box and the faces `c = d`, `c = s`, `s = 1` are grid lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::equilibria::{nash_equilibria, Branch};
use crate::error::{Error, Result};
use crate::model::{Customer, Game, HeterogeneousParams, ModelParams, OpinionProfile, EPS_DEN};
use crate::welfare::maximize_welfare;

/// Largest grid the search will evaluate.
pub const MAX_GRID_POINTS: f64 = 1e8;
/// Improvement a deviation must exceed to count against the Nash property.
pub const DEVIATION_THRESHOLD: f64 = 1e-9;
/// Deviations are drawn uniformly from `[-DEVIATION_RADIUS, DEVIATION_RADIUS]`.
pub const DEVIATION_RADIUS: f64 = 0.1;
/// Iterates with any coordinate beyond this magnitude count as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    resolution: f64,
}

impl GridSpec {
    pub fn new(resolution: f64) -> Result<Self> {
        if !(1e-4..=1e-1).contains(&resolution) {
            return Err(Error::InvalidResolution(resolution));
        }
        Ok(GridSpec { resolution })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Points per unit axis; the actual step `1 / (m - 1)` never exceeds the
    /// resolution.
    pub fn points_per_axis(&self) -> usize {
        (1.0 / self.resolution).ceil() as usize + 1
    }

    fn check_size(&self, dims: usize) -> Result<usize> {
        let m = self.points_per_axis();
        let points = (m as f64).powi(dims as i32);
        if points > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points, limit: MAX_GRID_POINTS });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub profile: OpinionProfile,
    /// Interpolation weights `t_i` of the best point.
    pub weights: Vec<f64>,
    pub value: f64,
    pub points: u64,
}

/// Sup of `|∂SW/∂u| + Σ |∂SW/∂t_i|` over the unit box, so that any point is
/// within `resolution * L / 2` of its nearest grid point in value.
pub fn lipschitz_bound<G: Game + ?Sized>(game: &G) -> f64 {
    let a = game.advisor();
    let n = game.customer_count() as f64;
    let g = a.gamma + game.customer(0).zeta;
    let per_customer: f64 = game
        .customers()
        .iter()
        .map(|cu| 2.0 * a.beta + 2.0 * g + (cu.r_s - cu.r_d).abs())
        .sum();
    2.0 * a.alpha + 2.0 * a.beta * n + 2.0 * g * n + per_customer
}

fn welfare_st<G: Game + ?Sized>(game: &G, customers: &[Customer], s: f64, t: &[f64]) -> f64 {
    let a = game.advisor();
    let mut value = -a.alpha * (s - a.x).powi(2);
    for (cu, &ti) in customers.iter().zip(t) {
        let c = cu.d + ti * (s - cu.d);
        value += -a.beta * (a.w - c).powi(2) - (a.gamma + cu.zeta) * (s - c).powi(2)
            + cu.r_d
            + ti * (cu.r_s - cu.r_d);
    }
    value
}

fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    let va = if a.0.is_nan() { f64::NEG_INFINITY } else { a.0 };
    let vb = if b.0.is_nan() { f64::NEG_INFINITY } else { b.0 };
    if vb > va || (vb == va && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn axis(j: usize, m: usize) -> f64 {
    if j + 1 == m {
        1.0
    } else {
        j as f64 / (m - 1) as f64
    }
}

fn collapsed<G: Game + ?Sized>(game: &G, customers: &[Customer]) -> GridOptimum {
    let t = vec![1.0; customers.len()];
    GridOptimum {
        value: welfare_st(game, customers, 1.0, &t),
        profile: OpinionProfile::uniform(customers.len(), 1.0, 1.0),
        weights: t,
        points: 1,
    }
}

fn lowest_advisor_opinion(customers: &[Customer]) -> f64 {
    customers.iter().map(|cu| cu.d).fold(f64::NEG_INFINITY, f64::max)
}

/// Grid search over the symmetric slice of a homogeneous game. For fixed `s`
/// the welfare is a sum of identical strictly concave functions of the `c_i`,
/// so restricting to equal customer opinions loses nothing.
pub fn grid_max_welfare(p: &ModelParams, spec: GridSpec) -> Result<GridOptimum> {
    let customers = p.customers();
    let d = p.d();
    if 1.0 - d <= 2.0 * EPS_DEN {
        return Ok(collapsed(p, &customers));
    }
    let m = spec.check_size(2)?;
    let n = customers.len();
    let (value, index) = (0..m)
        .into_par_iter()
        .map(|iu| {
            let s = d + axis(iu, m) * (1.0 - d);
            let mut t = vec![0.0; n];
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for it in 0..m {
                t.fill(axis(it, m));
                let v = welfare_st(p, &customers, s, &t);
                best = better(best, (v, (iu * m + it) as u64));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
    let (iu, it) = (index as usize / m, index as usize % m);
    let s = d + axis(iu, m) * (1.0 - d);
    let t = axis(it, m);
    Ok(GridOptimum {
        profile: OpinionProfile::uniform(n, d + t * (s - d), s),
        weights: vec![t; n],
        value,
        points: (m * m) as u64,
    })
}

/// Grid search over every `(s, t_1, ..., t_n)` independently.
pub fn grid_max_welfare_full<G: Game + Sync + ?Sized>(game: &G, spec: GridSpec) -> Result<GridOptimum> {
    let customers = game.customers();
    let n = customers.len();
    let lo = lowest_advisor_opinion(&customers);
    if 1.0 - lo <= 2.0 * EPS_DEN {
        return Ok(collapsed(game, &customers));
    }
    let m = spec.check_size(n + 1)?;
    let per_row = (m as u64).pow(n as u32);
    let decode = |mut rest: u64, t: &mut [f64]| {
        for ti in t.iter_mut().rev() {
            *ti = axis((rest % m as u64) as usize, m);
            rest /= m as u64;
        }
    };
    let (value, index) = (0..m)
        .into_par_iter()
        .map(|iu| {
            let s = lo + axis(iu, m) * (1.0 - lo);
            let mut t = vec![0.0; n];
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            for rest in 0..per_row {
                decode(rest, &mut t);
                let v = welfare_st(game, &customers, s, &t);
                best = better(best, (v, iu as u64 * per_row + rest));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
    let s = lo + axis((index / per_row) as usize, m) * (1.0 - lo);
    let mut t = vec![0.0; n];
    decode(index % per_row, &mut t);
    let c = customers.iter().zip(&t).map(|(cu, &ti)| cu.d + ti * (s - cu.d)).collect();
    Ok(GridOptimum {
        profile: OpinionProfile::new(c, s),
        weights: t,
        value,
        points: per_row * m as u64,
    })
}

/// Grid search for a heterogeneous game; the full grid makes this practical
/// only for a handful of customers.
pub fn grid_max_welfare_heterogeneous(p: &HeterogeneousParams, spec: GridSpec) -> Result<GridOptimum> {
    grid_max_welfare_full(p, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareAgreement {
    pub analytic: f64,
    pub grid: f64,
    pub lipschitz: f64,
    /// `resolution * lipschitz`.
    pub bound: f64,
    pub agrees: bool,
}

/// Compares the analytic welfare optimum with the grid search.
pub fn welfare_agreement(p: &ModelParams, spec: GridSpec) -> Result<WelfareAgreement> {
    let analytic = maximize_welfare(p)?.sw_max;
    let grid = grid_max_welfare(p, spec)?.value;
    let lipschitz = lipschitz_bound(p);
    let bound = spec.resolution() * lipschitz;
    Ok(WelfareAgreement {
        analytic,
        grid,
        lipschitz,
        bound,
        agrees: (analytic - grid).abs() <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// Advisor moves first; customers respond to the new `s`.
    Sequential,
    /// Everyone responds to the previous iterate.
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub rule: UpdateRule,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            max_iter: 100_000,
            tol: 1e-9,
            rule: UpdateRule::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    NonFinite,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    /// Starting point followed by every iterate.
    pub iterates: Vec<OpinionProfile>,
    pub converged: bool,
    pub fixed_point: Option<OpinionProfile>,
    pub iterations_used: usize,
    pub stop: StopReason,
    /// Some iterate lay outside `d_i <= c_i <= s <= 1`.
    pub left_domain: bool,
}

/// Iterated best responses from `start` until successive iterates are within
/// `tol` (sup norm) or `max_iter` steps have been taken.
pub fn best_response_dynamics<G: Game + ?Sized>(
    game: &G,
    start: &OpinionProfile,
    opts: DynamicsOptions,
) -> Result<DynamicsTrace> {
    let customers = game.customers();
    if start.c.len() != customers.len() {
        return Err(Error::invalid(
            "start",
            format!("expected {} customer opinions, got {}", customers.len(), start.c.len()),
        ));
    }
    let lo = lowest_advisor_opinion(&customers);
    if start.s <= lo + EPS_DEN {
        return Err(Error::invalid("start", format!("s = {} must exceed max d_i = {lo}", start.s)));
    }
    let advisor = game.advisor();
    let mut iterates = vec![start.clone()];
    let mut left_domain = !game.contains(start, 0.0);
    let mut stop = StopReason::MaxIterations;
    let mut current = start.clone();
    let mut used = 0;
    while used < opts.max_iter {
        let s = advisor.best_response(&current.c);
        let respond_to = match opts.rule {
            UpdateRule::Sequential => s,
            UpdateRule::Simultaneous => current.s,
        };
        let c = customers
            .iter()
            .map(|cu| cu.best_response(respond_to))
            .collect::<Result<Vec<f64>>>()?;
        let next = OpinionProfile::new(c, s);
        used += 1;
        let coords = || next.c.iter().chain(std::iter::once(&next.s));
        if !coords().all(|v| v.is_finite()) {
            stop = StopReason::NonFinite;
            iterates.push(next);
            break;
        }
        left_domain |= !game.contains(&next, 0.0);
        if coords().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            stop = StopReason::Diverged;
            iterates.push(next);
            break;
        }
        let step = next.distance(&current);
        iterates.push(next.clone());
        current = next;
        if step <= opts.tol {
            stop = StopReason::Converged;
            break;
        }
    }
    let converged = stop == StopReason::Converged;
    Ok(DynamicsTrace {
        fixed_point: converged.then_some(current),
        iterates,
        converged,
        iterations_used: used,
        stop,
        left_domain,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub trials: usize,
    /// No sampled deviation improved its player's utility by more than the
    /// threshold.
    pub passed: bool,
    /// `trials == 0`: the check passed vacuously.
    pub degenerate: bool,
    pub max_advisor_gain: f64,
    pub max_customer_gain: f64,
    pub violations: usize,
}

/// Tries `trials` random unilateral deviations per player. Deviations are not
/// clipped to the domain: each best response maximizes over the whole line.
pub fn perturbation_check<G: Game + ?Sized>(
    game: &G,
    q: &OpinionProfile,
    trials: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advisor = game.advisor();
    let customers = game.customers();
    let base_advisor = advisor.utility(q);
    let base_customer = customers
        .iter()
        .zip(&q.c)
        .map(|(cu, &ci)| cu.utility(ci, q.s))
        .collect::<Result<Vec<f64>>>()?;
    let mut max_advisor_gain = f64::NEG_INFINITY;
    let mut max_customer_gain = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut moved = q.clone();
    for _ in 0..trials {
        moved.s = q.s + rng.gen_range(-DEVIATION_RADIUS..=DEVIATION_RADIUS);
        let gain = advisor.utility(&moved) - base_advisor;
        moved.s = q.s;
        max_advisor_gain = max_advisor_gain.max(gain);
        violations += usize::from(gain > DEVIATION_THRESHOLD);
        for ((cu, &ci), &base) in customers.iter().zip(&q.c).zip(&base_customer) {
            let dev = ci + rng.gen_range(-DEVIATION_RADIUS..=DEVIATION_RADIUS);
            let gain = cu.utility(dev, q.s)? - base;
            max_customer_gain = max_customer_gain.max(gain);
            violations += usize::from(gain > DEVIATION_THRESHOLD);
        }
    }
    Ok(PerturbationReport {
        trials,
        passed: violations == 0,
        degenerate: trials == 0,
        max_advisor_gain,
        max_customer_gain,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Every oracle comparison available for one homogeneous instance.
pub fn run_oracle_checks(p: &ModelParams, spec: GridSpec, seed: u64) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(OracleCheck { name: name.to_string(), passed, detail });
    };

    let eq = nash_equilibria(p);
    let residual = eq.roots.relative_residual(p);
    push("quadratic residual", residual <= 1e-10, format!("relative residual {residual:e}"));
    if let Some(agree) = eq.verdicts_agree() {
        push(
            "region formula vs domain check",
            agree,
            format!("geometric ({}, {})", eq.star_admissible, eq.dagger_admissible),
        );
    }
    for branch in [Branch::Star, Branch::Dagger] {
        let Some(q) = eq.get(branch) else { continue };
        let report = perturbation_check(p, q, 1000, seed)?;
        push(
            &format!("{branch} deviations"),
            report.passed,
            format!(
                "{} violations; max gains advisor {:e}, customer {:e}",
                report.violations, report.max_advisor_gain, report.max_customer_gain
            ),
        );
        let trace = best_response_dynamics(p, q, DynamicsOptions::default())?;
        push(
            &format!("{branch} fixed point"),
            trace.converged && trace.iterations_used == 1,
            format!("{:?} after {} iterations", trace.stop, trace.iterations_used),
        );
    }
    let agreement = welfare_agreement(p, spec)?;
    push(
        "welfare optimum vs grid",
        agreement.agrees,
        format!(
            "analytic {:.12} grid {:.12} bound {:e}",
            agreement.analytic, agreement.grid, agreement.bound
        ),
    );
    Ok(checks)
}
