mod common;

use common::*;
use proptest::prelude::*;

use trelt::distributions::HeavyTailDist;
use trelt::extreme_lp::{extrapolate, transition_extrapolate};
use trelt::lp_quantile::{empirical_check_loss, empirical_lp_quantile, order_statistic_quantile, Level, Sample};
use trelt::special::{beta, reg_inc_beta};
use trelt::tail_index::hill;
use trelt::trelt::{ctrelt_limit_ell, plugin_ctrelt, OrderPair};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig::with_cases(cases)
}

proptest! {
    #![proptest_config(cfg(500))]

    #[test]
    fn lp_quantile_location_scale((xs, _g) in heavy_sample(20, 200), a in 0.01f64..100.0, b in -50.0f64..50.0,
                                  p in 1.0f64..3.0, tau in 0.05f64..0.995) {
        lp_equivariance(&xs, a, b, p, tau)?;
    }

    #[test]
    fn hill_ignores_scale((xs, _g) in heavy_sample(20, 300), a in 1e-3f64..1e3, k_frac in 0.05f64..0.5) {
        hill_scale_invariance(&xs, a, k_frac)?;
    }

    #[test]
    fn ctrelt_ignores_location_scale((xs, _g) in heavy_sample(50, 300), a in 0.1f64..10.0, b in -5.0f64..5.0,
                                     eps in 0.02f64..0.3) {
        ctrelt_invariance(&xs, a, b, eps)?;
    }

    #[test]
    fn extram_three_with_q_one_is_quantile_based((xs, _g) in heavy_sample(50, 300), p in 1.0f64..2.5,
                                                  frac in 0.0f64..1.0, gamma in 0.05f64..0.6) {
        extram3_reduces_to_qua(&xs, p, frac, gamma)?;
    }

    #[test]
    fn lp_quantile_monotone_in_level((xs, _g) in heavy_sample(10, 200), p in 1.0f64..3.0,
                                     t1 in 0.01f64..0.999, t2 in 0.01f64..0.999) {
        level_monotone(&xs, p, t1, t2)?;
    }

    #[test]
    fn p_one_is_the_order_statistic((xs, _g) in heavy_sample(5, 200), eps in 0.001f64..0.99) {
        let s = Sample::new(xs).unwrap();
        let lvl = Level::from_eps(eps).unwrap();
        prop_assert_eq!(empirical_lp_quantile(&s, 1.0, lvl).unwrap(), order_statistic_quantile(&s, eps).unwrap());
    }

    #[test]
    fn hill_is_nonnegative(xs in prop::collection::vec(0.01f64..100.0, 3..100), k_frac in 0.0f64..1.0) {
        let s = Sample::new(xs).unwrap();
        let k = 2 + ((s.len() - 3) as f64 * k_frac) as usize;
        prop_assert!(hill(&s, k).unwrap() >= 0.0);
    }
}

proptest! {
    #![proptest_config(cfg(1000))]

    #[test]
    fn beta_is_symmetric(a in 0.1f64..50.0, b in 0.1f64..50.0) {
        let (x, y) = (beta(a, b).unwrap(), beta(b, a).unwrap());
        prop_assert!((x - y).abs() <= 1e-14 * x.abs(), "{x} vs {y}");
    }

    #[test]
    fn beta_recurrence(a in 0.1f64..50.0, b in 0.1f64..50.0) {
        let lhs = beta(a + 1.0, b).unwrap();
        let rhs = beta(a, b).unwrap() * a / (a + b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn incomplete_beta_reflection(x in 0.0f64..=1.0, a in 0.1f64..50.0, b in 0.1f64..50.0) {
        let s = reg_inc_beta(x, a, b).unwrap() + reg_inc_beta(1.0 - x, b, a).unwrap();
        prop_assert!((s - 1.0).abs() <= 1e-12, "{s}");
    }

    #[test]
    fn cdf_inverts_quantile(tau in 1e-6f64..0.999999, g in 0.1f64..0.5, which in 0usize..4) {
        let d = match which {
            0 => HeavyTailDist::pareto(g),
            1 => HeavyTailDist::frechet(g),
            2 => HeavyTailDist::student_t(g),
            _ => Ok(HeavyTailDist::koenker_bassett()),
        }.unwrap();
        let x = d.quantile(tau).unwrap();
        prop_assert!((d.cdf(x) - tau).abs() <= 1e-9, "{:?} tau {tau} x {x} cdf {}", d.kind(), d.cdf(x));
    }
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn root_minimizes_the_empirical_loss((xs, _g) in heavy_sample(10, 200), p in 1.05f64..3.0, tau in 0.05f64..0.99) {
        let s = Sample::new(xs).unwrap();
        let lvl = Level::from_tau(tau).unwrap();
        let u = empirical_lp_quantile(&s, p, lvl).unwrap();
        let h = 1e-4 * (s.max() - s.min());
        let at = empirical_check_loss(&s, u, p, lvl).unwrap();
        prop_assert!(at <= empirical_check_loss(&s, u - h, p, lvl).unwrap());
        prop_assert!(at <= empirical_check_loss(&s, u + h, p, lvl).unwrap());
    }

    #[test]
    fn extrapolation_shrinks_as_level_grows(theta in 0.1f64..100.0, c in 1.0f64..5.0, g in 0.01f64..0.9,
                                             e1 in 1e-5f64..0.05, e2 in 1e-5f64..0.05) {
        let eps_n = 0.05;
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(extrapolate(theta, eps_n, lo, g).unwrap() >= extrapolate(theta, eps_n, hi, g).unwrap());
        prop_assert!(transition_extrapolate(theta, c, eps_n, lo, g).unwrap()
            >= transition_extrapolate(theta, c, eps_n, hi, g).unwrap());
    }

    #[test]
    fn plugin_depends_only_on_gamma(g in 0.1f64..0.45, gamma_hat in 0.05f64..0.4) {
        let pair = OrderPair::moment(2.0, 1.5, g).unwrap();
        let a = plugin_ctrelt(gamma_hat, pair).unwrap().value;
        prop_assert_eq!(a, ctrelt_limit_ell(gamma_hat, 2.0, 1.5).unwrap());
    }
}

/// `ell > 1` exactly when `1 - q < p - 1/gamma`, `ell = 1` on equality.
#[test]
fn limit_trichotomy() {
    for gi in 1..=9 {
        let g = 0.05 * gi as f64;
        for pi in 0..=20 {
            let p = 1.0 + 0.1 * pi as f64;
            if p >= 1.0 + 1.0 / g {
                continue;
            }
            for qi in 0..=pi {
                let q = 1.0 + 0.1 * qi as f64;
                if q == p {
                    continue;
                }
                let ell = ctrelt_limit_ell(g, p, q).unwrap();
                let delta = (p - 1.0 / g) - (1.0 - q);
                if delta.abs() < 1e-9 {
                    assert!((ell - 1.0).abs() < 1e-9, "g {g} p {p} q {q}: {ell}");
                } else {
                    assert_eq!(ell > 1.0, delta > 0.0, "g {g} p {p} q {q}: {ell}");
                }
            }
        }
    }
}

#[test]
fn koenker_bassett_cdf_is_half_at_zero() {
    let d = HeavyTailDist::koenker_bassett();
    assert_eq!(d.cdf(0.0), 0.5);
    assert!((d.cdf(-1e-12) - 0.5).abs() < 1e-11);
    assert!((d.cdf(1e-12) - 0.5).abs() < 1e-11);
}
