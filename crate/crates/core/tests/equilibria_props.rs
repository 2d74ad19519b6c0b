mod common;

use common::{two_eq, two_eq_values, rel_close};
use pfgame::equilibria::{critical_zeta, discriminant, nash_equilibria, Branch};
use pfgame::model::{advisor_best_response, customer_best_response};
use pfgame::{Game, ModelParams, ParamName, ParamValues};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.0..0.9f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
        1u32..=4,
        0.01..5.0f64,
        0.01..5.0f64,
        0.01..5.0f64,
        0.1..50.0f64,
        0.0..=1.0f64,
        0.0..=1.0f64,
    )
        .prop_map(|(d, x, w, n, alpha, beta, gamma, zeta, r_d, r_s)| {
            ModelParams::new(ParamValues { d, x, w, n, alpha, beta, gamma, zeta, r_d, r_s }).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn equilibria_are_mutual_best_responses(p in params()) {
        let eq = nash_equilibria(&p);
        for branch in [Branch::Star, Branch::Dagger] {
            let Some(q) = eq.get(branch) else { continue };
            let s = advisor_best_response(&p, &q.c);
            prop_assert!(rel_close(s, q.s, 1e-9), "{branch}: advisor {s} vs {}", q.s);
            let c = customer_best_response(&p.shared_customer(), q.s).unwrap();
            prop_assert!(rel_close(c, q.c[0], 1e-9), "{branch}: customer {c} vs {}", q.c[0]);
        }
    }

    #[test]
    fn region_formulas_match_domain_check(p in params()) {
        prop_assume!(p.return_gap() != 0.0);
        let eq = nash_equilibria(&p);
        prop_assert_eq!(eq.verdicts_agree(), Some(true), "{:?}", eq);
    }

    #[test]
    fn admissible_means_in_domain(p in params()) {
        let eq = nash_equilibria(&p);
        for (_, q) in eq.admissible_points() {
            prop_assert!(p.contains(q, 0.0));
        }
    }

    #[test]
    fn roots_solve_the_quadratic(p in params()) {
        let roots = nash_equilibria(&p).roots;
        prop_assert!(roots.relative_residual(&p) <= 1e-12);
        if let (Some(a), Some(b)) = (roots.a, roots.b) {
            prop_assert!(a >= b);
        }
        prop_assert_eq!(roots.a.is_some(), roots.discriminant >= 0.0 || p.return_gap() == 0.0);
    }

    #[test]
    fn equal_returns_give_x_and_d_exactly(p in params()) {
        let p = p.with(ParamName::RS, p.r_d()).unwrap();
        let eq = nash_equilibria(&p);
        let (hi, lo) = (p.x().max(p.d()), p.x().min(p.d()));
        prop_assert_eq!(eq.roots.a, Some(hi));
        prop_assert_eq!(eq.roots.b, Some(lo));
        let star = eq.p_star.unwrap();
        prop_assert!(star.c.iter().all(|&c| c == hi) && star.s == hi);
        if hi != lo {
            let dagger = eq.p_dagger.unwrap();
            prop_assert!(dagger.c.iter().all(|&c| c == lo) && dagger.s == lo);
        }
    }

    #[test]
    fn discriminant_rises_with_zeta_and_falls_with_gamma(
        p in params(),
        bump in 1.01..3.0f64,
    ) {
        prop_assume!(p.r_d() > 0.0);
        let p = p.with(ParamName::RS, 0.5 * p.r_d()).unwrap();
        let base = discriminant(&p);
        let more_zeta = p.with(ParamName::Zeta, p.zeta() * bump).unwrap();
        prop_assert!(discriminant(&more_zeta) > base);
        let more_gamma = p.with(ParamName::Gamma, p.gamma() * bump).unwrap();
        prop_assert!(discriminant(&more_gamma) < base);
    }

    #[test]
    fn critical_zeta_puts_customer_on_baseline(
        d in 0.0..0.5f64,
        spread in 0.05..0.5f64,
        alpha in 0.01..2.0f64,
        gamma in 0.01..2.0f64,
        drop in 0.01..0.3f64,
    ) {
        let v = ParamValues { d, x: d + spread, alpha, gamma, r_s: 0.5 - drop, r_d: 0.5, ..two_eq_values() };
        let p = ModelParams::new(v).unwrap();
        let cz = critical_zeta(&p).unwrap();
        prop_assert!(cz.positive);
        if let Some(res) = cz.boundary_residual {
            prop_assert!(res <= 1e-9, "residual {res}");
        }
        let (s, c) = cz.last_useful;
        prop_assert_eq!(c, d);
        prop_assert!(s > d && s < d + spread);
    }
}

#[test]
fn two_equilibria_values() {
    let eq = nash_equilibria(&two_eq());
    let star = eq.p_star.as_ref().unwrap();
    let dagger = eq.p_dagger.as_ref().unwrap();
    assert!((star.s - 0.3).abs() < 1e-12 && (star.c[0] - 0.275).abs() < 1e-12);
    assert!((dagger.s - 0.2).abs() < 1e-12 && (dagger.c[0] - 0.15).abs() < 1e-12);
    assert!(eq.star_admissible && eq.dagger_admissible);
}
