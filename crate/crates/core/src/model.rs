//! Parameters, strategy profiles, utilities and best responses.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Smallest accepted `|s - d|` before the customer interpolation term is
/// treated as singular.
pub const EPS_DEN: f64 = 1e-12;

/// Raw, unvalidated game parameters. Convert with [`ModelParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamValues {
    /// Customer baseline opinion.
    pub d: f64,
    /// Advisor internal opinion.
    pub x: f64,
    /// Bank target opinion.
    pub w: f64,
    /// Number of customers.
    pub n: u32,
    /// Truthfulness weight.
    pub alpha: f64,
    /// Remuneration weight.
    pub beta: f64,
    /// Influence weight.
    pub gamma: f64,
    /// Cognitive-dissonance sensitivity.
    pub zeta: f64,
    /// Return the customers consider achievable.
    pub r_d: f64,
    /// Return proposed by the advisor.
    pub r_s: f64,
}

/// Names of the scalar parameters, as used in config files and sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamName {
    D,
    X,
    W,
    N,
    Alpha,
    Beta,
    Gamma,
    Zeta,
    RD,
    RS,
}

impl ParamName {
    pub const ALL: [ParamName; 10] = [
        ParamName::D,
        ParamName::X,
        ParamName::W,
        ParamName::N,
        ParamName::Alpha,
        ParamName::Beta,
        ParamName::Gamma,
        ParamName::Zeta,
        ParamName::RD,
        ParamName::RS,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::D => "d",
            ParamName::X => "x",
            ParamName::W => "w",
            ParamName::N => "n",
            ParamName::Alpha => "alpha",
            ParamName::Beta => "beta",
            ParamName::Gamma => "gamma",
            ParamName::Zeta => "zeta",
            ParamName::RD => "r_d",
            ParamName::RS => "r_s",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid(s, "unknown parameter name"))
    }
}

impl ParamValues {
    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::D => self.d,
            ParamName::X => self.x,
            ParamName::W => self.w,
            ParamName::N => f64::from(self.n),
            ParamName::Alpha => self.alpha,
            ParamName::Beta => self.beta,
            ParamName::Gamma => self.gamma,
            ParamName::Zeta => self.zeta,
            ParamName::RD => self.r_d,
            ParamName::RS => self.r_s,
        }
    }

    /// Sets one parameter. `n` must be a positive integer value.
    pub fn set(&mut self, name: ParamName, value: f64) -> Result<()> {
        match name {
            ParamName::D => self.d = value,
            ParamName::X => self.x = value,
            ParamName::W => self.w = value,
            ParamName::N => {
                if !(value.is_finite() && value.fract() == 0.0 && value >= 1.0)
                    || value > f64::from(u32::MAX)
                {
                    return Err(Error::invalid("n", format!("must be a positive integer, got {value}")));
                }
                self.n = value as u32;
            }
            ParamName::Alpha => self.alpha = value,
            ParamName::Beta => self.beta = value,
            ParamName::Gamma => self.gamma = value,
            ParamName::Zeta => self.zeta = value,
            ParamName::RD => self.r_d = value,
            ParamName::RS => self.r_s = value,
        }
        Ok(())
    }
}

fn check_unit(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// Validated parameters of the homogeneous game: every customer shares `d`
/// and `r_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    v: ParamValues,
}

impl ModelParams {
    pub fn new(v: ParamValues) -> Result<Self> {
        check_unit("d", v.d)?;
        check_unit("x", v.x)?;
        check_unit("w", v.w)?;
        if v.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        check_positive("alpha", v.alpha)?;
        check_positive("beta", v.beta)?;
        check_positive("gamma", v.gamma)?;
        check_positive("zeta", v.zeta)?;
        check_unit("r_d", v.r_d)?;
        check_unit("r_s", v.r_s)?;
        Ok(ModelParams { v })
    }

    pub fn values(&self) -> ParamValues {
        self.v
    }

    /// Copy with one parameter replaced, revalidated.
    pub fn with(&self, name: ParamName, value: f64) -> Result<Self> {
        let mut v = self.v;
        v.set(name, value)?;
        ModelParams::new(v)
    }

    pub fn d(&self) -> f64 {
        self.v.d
    }
    pub fn x(&self) -> f64 {
        self.v.x
    }
    pub fn w(&self) -> f64 {
        self.v.w
    }
    pub fn n(&self) -> u32 {
        self.v.n
    }
    pub fn alpha(&self) -> f64 {
        self.v.alpha
    }
    pub fn beta(&self) -> f64 {
        self.v.beta
    }
    pub fn gamma(&self) -> f64 {
        self.v.gamma
    }
    pub fn zeta(&self) -> f64 {
        self.v.zeta
    }
    pub fn r_d(&self) -> f64 {
        self.v.r_d
    }
    pub fn r_s(&self) -> f64 {
        self.v.r_s
    }

    /// `r_s - r_d`, the return gap that drives every correction term.
    pub fn return_gap(&self) -> f64 {
        self.v.r_s - self.v.r_d
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.v.n)
    }

    pub fn shared_customer(&self) -> Customer {
        Customer {
            d: self.v.d,
            r_d: self.v.r_d,
            r_s: self.v.r_s,
            zeta: self.v.zeta,
        }
    }

    /// The same game with the customers listed individually.
    pub fn to_heterogeneous(&self) -> HeterogeneousParams {
        let n = self.v.n as usize;
        HeterogeneousParams {
            x: self.v.x,
            w: self.v.w,
            alpha: self.v.alpha,
            beta: self.v.beta,
            gamma: self.v.gamma,
            zeta: self.v.zeta,
            r_s: self.v.r_s,
            d: vec![self.v.d; n],
            r_d: vec![self.v.r_d; n],
        }
    }
}

/// Game with per-customer baselines `d_i` and desired returns `r_d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousParams {
    x: f64,
    w: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    zeta: f64,
    r_s: f64,
    d: Vec<f64>,
    r_d: Vec<f64>,
}

impl HeterogeneousParams {
    /// `shared` supplies everything except the per-customer `d` and `r_d`
    /// (its own `d`, `r_d` and `n` are ignored; `n` is `d.len()`).
    pub fn new(shared: ParamValues, d: Vec<f64>, r_d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if d.len() != r_d.len() {
            return Err(Error::invalid(
                "r_d",
                format!("expected {} desired returns, got {}", d.len(), r_d.len()),
            ));
        }
        check_unit("x", shared.x)?;
        check_unit("w", shared.w)?;
        check_positive("alpha", shared.alpha)?;
        check_positive("beta", shared.beta)?;
        check_positive("gamma", shared.gamma)?;
        check_positive("zeta", shared.zeta)?;
        check_unit("r_s", shared.r_s)?;
        for (i, (&di, &ri)) in d.iter().zip(&r_d).enumerate() {
            check_unit(&format!("d[{i}]"), di)?;
            check_unit(&format!("r_d[{i}]"), ri)?;
        }
        Ok(HeterogeneousParams {
            x: shared.x,
            w: shared.w,
            alpha: shared.alpha,
            beta: shared.beta,
            gamma: shared.gamma,
            zeta: shared.zeta,
            r_s: shared.r_s,
            d,
            r_d,
        })
    }

    pub fn baselines(&self) -> &[f64] {
        &self.d
    }

    pub fn desired_returns(&self) -> &[f64] {
        &self.r_d
    }
}

/// The advisor's side of the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advisor {
    pub x: f64,
    pub w: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Advisor {
    /// `-alpha (s-x)^2 - beta sum (w-c_i)^2 - gamma sum (s-c_i)^2`, never positive.
    pub fn utility(&self, q: &OpinionProfile) -> f64 {
        let s = q.s;
        let (bank, influence) = q.c.iter().fold((0.0, 0.0), |(b, g), &ci| {
            (b + (self.w - ci).powi(2), g + (s - ci).powi(2))
        });
        -self.alpha * (s - self.x).powi(2) - self.beta * bank - self.gamma * influence
    }

    /// Stated opinion maximizing the advisor's utility against `c`.
    ///
    /// `beta` drops out: the bank term does not depend on `s`.
    pub fn best_response(&self, c: &[f64]) -> f64 {
        let total: f64 = c.iter().sum();
        let n = c.len() as f64;
        (self.alpha * self.x + self.gamma * total) / (self.alpha + self.gamma * n)
    }
}

/// One customer's parameters (plus the shared `r_s` and `zeta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub d: f64,
    pub r_d: f64,
    pub r_s: f64,
    pub zeta: f64,
}

impl Customer {
    fn gap(&self, s: f64) -> Result<f64> {
        let gap = s - self.d;
        if gap.abs() <= EPS_DEN || !gap.is_finite() {
            Err(Error::DegenerateDenominator { gap })
        } else {
            Ok(gap)
        }
    }

    /// `r_d + (c-d)/(s-d) (r_s-r_d) - zeta (s-c)^2`.
    pub fn utility(&self, c: f64, s: f64) -> Result<f64> {
        let gap = self.gap(s)?;
        Ok(self.r_d + (c - self.d) / gap * (self.r_s - self.r_d) - self.zeta * (s - c).powi(2))
    }

    /// Opinion maximizing this customer's utility for a given `s`. Not clamped
    /// to `[d, s]`; callers decide what leaving the domain means.
    pub fn best_response(&self, s: f64) -> Result<f64> {
        let gap = self.gap(s)?;
        Ok((self.r_s - self.r_d) / (2.0 * self.zeta * gap) + s)
    }
}

/// Common view over homogeneous and heterogeneous games.
pub trait Game {
    fn advisor(&self) -> Advisor;
    fn customer_count(&self) -> usize;
    fn customer(&self, i: usize) -> Customer;

    fn customers(&self) -> Vec<Customer> {
        (0..self.customer_count()).map(|i| self.customer(i)).collect()
    }

    /// Membership in the domain `d_i <= c_i <= s <= 1`, widened by `slack`.
    fn contains(&self, q: &OpinionProfile, slack: f64) -> bool {
        q.c.len() == self.customer_count()
            && q.s <= 1.0 + slack
            && q.c.iter().enumerate().all(|(i, &ci)| {
                let d = self.customer(i).d;
                d - slack <= ci && ci <= q.s + slack
            })
    }

    /// Sum of all players' utilities, evaluated player by player.
    fn total_utility(&self, q: &OpinionProfile) -> Result<f64> {
        let mut total = self.advisor().utility(q);
        for (i, &ci) in q.c.iter().enumerate() {
            total += self.customer(i).utility(ci, q.s)?;
        }
        Ok(total)
    }
}

impl Game for ModelParams {
    fn advisor(&self) -> Advisor {
        Advisor {
            x: self.v.x,
            w: self.v.w,
            alpha: self.v.alpha,
            beta: self.v.beta,
            gamma: self.v.gamma,
        }
    }

    fn customer_count(&self) -> usize {
        self.v.n as usize
    }

    fn customer(&self, _i: usize) -> Customer {
        self.shared_customer()
    }
}

impl Game for HeterogeneousParams {
    fn advisor(&self) -> Advisor {
        Advisor {
            x: self.x,
            w: self.w,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    fn customer_count(&self) -> usize {
        self.d.len()
    }

    fn customer(&self, i: usize) -> Customer {
        Customer {
            d: self.d[i],
            r_d: self.r_d[i],
            r_s: self.r_s,
            zeta: self.zeta,
        }
    }
}

/// A strategy point `(c_1, ..., c_n, s)`. Not clamped to the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionProfile {
    pub c: Vec<f64>,
    pub s: f64,
}

impl OpinionProfile {
    pub fn new(c: Vec<f64>, s: f64) -> Self {
        OpinionProfile { c, s }
    }

    /// All `n` customers at the same opinion `c`.
    pub fn uniform(n: usize, c: f64, s: f64) -> Self {
        OpinionProfile { c: vec![c; n], s }
    }

    /// Homogeneous-domain test `d <= c_i <= s <= 1` with `slack`.
    pub fn in_domain(&self, d: f64, slack: f64) -> bool {
        self.s <= 1.0 + slack && self.c.iter().all(|&ci| d - slack <= ci && ci <= self.s + slack)
    }

    /// Sup-norm distance over all coordinates (lengths must match).
    pub fn distance(&self, other: &OpinionProfile) -> f64 {
        self.c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| (a - b).abs())
            .fold((self.s - other.s).abs(), f64::max)
    }
}

pub fn advisor_utility<G: Game + ?Sized>(game: &G, q: &OpinionProfile) -> f64 {
    game.advisor().utility(q)
}

pub fn customer_utility(customer: &Customer, c: f64, s: f64) -> Result<f64> {
    customer.utility(c, s)
}

pub fn advisor_best_response<G: Game + ?Sized>(game: &G, c: &[f64]) -> f64 {
    game.advisor().best_response(c)
}

pub fn customer_best_response(customer: &Customer, s: f64) -> Result<f64> {
    customer.best_response(s)
}

/// Social welfare of the homogeneous game in aggregated form:
///
/// `-alpha (s-x)^2 - beta sum (w-c_i)^2 - (gamma+zeta) sum (s-c_i)^2
///  + r_d n + (r_s-r_d)/(s-d) (sum c_i - d n)`.
pub fn social_welfare(p: &ModelParams, q: &OpinionProfile) -> Result<f64> {
    let gap = q.s - p.d();
    if gap.abs() <= EPS_DEN || !gap.is_finite() {
        return Err(Error::DegenerateDenominator { gap });
    }
    let n = q.c.len() as f64;
    let mut bank = 0.0;
    let mut spread = 0.0;
    let mut total = 0.0;
    for &ci in &q.c {
        bank += (p.w() - ci).powi(2);
        spread += (q.s - ci).powi(2);
        total += ci;
    }
    Ok(-p.alpha() * (q.s - p.x()).powi(2) - p.beta() * bank
        - (p.gamma() + p.zeta()) * spread
        + p.r_d() * n
        + p.return_gap() / gap * (total - p.d() * n))
}

/// Analytic gradient of [`social_welfare`], ordered `(dc_1, ..., dc_n, ds)`.
pub fn social_welfare_gradient(p: &ModelParams, q: &OpinionProfile) -> Result<Vec<f64>> {
    let gap = q.s - p.d();
    if gap.abs() <= EPS_DEN || !gap.is_finite() {
        return Err(Error::DegenerateDenominator { gap });
    }
    let g = p.gamma() + p.zeta();
    let k = p.return_gap();
    let n = q.c.len() as f64;
    let mut grad: Vec<f64> = q
        .c
        .iter()
        .map(|&ci| 2.0 * p.beta() * (p.w() - ci) + 2.0 * g * (q.s - ci) + k / gap)
        .collect();
    let spread: f64 = q.c.iter().map(|&ci| q.s - ci).sum();
    let total: f64 = q.c.iter().sum();
    grad.push(
        -2.0 * p.alpha() * (q.s - p.x()) - 2.0 * g * spread - k * (total - p.d() * n) / (gap * gap),
    );
    Ok(grad)
}
