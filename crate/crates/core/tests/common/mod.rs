//! Property checks shared by the proptest suite and the acceptance target.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use trelt::extreme_lp::{extram, qua_estimator, ExtraMVariant};
use trelt::lp_quantile::{empirical_lp_quantile, Level, Sample};
use trelt::tail_index::hill;
use trelt::trelt::{empirical_ctrelt_value, intermediate_ctrelt, OrderPair};

/// Heavy-tailed positive draws `u^(-gamma)` with a few ties mixed in.
pub fn heavy_sample(min_len: usize, max_len: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (0.1f64..0.5, prop::collection::vec(1e-6f64..1.0, min_len..max_len)).prop_map(|(g, us)| {
        let mut xs: Vec<f64> = us.iter().map(|u| u.powf(-g)).collect();
        if xs.len() > 10 {
            xs[3] = xs[7];
        }
        (xs, g)
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

pub fn lp_equivariance(xs: &[f64], a: f64, b: f64, p: f64, tau: f64) -> Result<(), TestCaseError> {
    let s = Sample::new(xs.to_vec()).unwrap();
    let lvl = Level::from_tau(tau).unwrap();
    let t = empirical_lp_quantile(&s, p, lvl).unwrap();
    let t2 = empirical_lp_quantile(&s.affine(a, b).unwrap(), p, lvl).unwrap();
    let scale = a * (s.max() - s.min()) + (a * t).abs() + b.abs();
    prop_assert!(close(t2, a * t + b, 1e-9 * scale), "{t2} vs {}", a * t + b);
    Ok(())
}

pub fn hill_scale_invariance(xs: &[f64], a: f64, k_frac: f64) -> Result<(), TestCaseError> {
    let s = Sample::new(xs.to_vec()).unwrap();
    let k = 2 + ((xs.len() - 3) as f64 * k_frac) as usize;
    let g = hill(&s, k).unwrap();
    let g2 = hill(&s.affine(a, 0.0).unwrap(), k).unwrap();
    prop_assert!(close(g, g2, 1e-12 * (1.0 + g)), "{g} vs {g2}");
    Ok(())
}

/// Location-scale invariance of the empirical multiplier at a mapped threshold,
/// and scale invariance of the intermediate estimate.
pub fn ctrelt_invariance(xs: &[f64], a: f64, b: f64, eps: f64) -> Result<(), TestCaseError> {
    let s = Sample::new(xs.to_vec()).unwrap();
    let pair = OrderPair::unchecked(2.4, 1.8, 1.0 / 3.0).unwrap();
    let theta = empirical_lp_quantile(&s, pair.q(), Level::from_eps(eps).unwrap()).unwrap();
    let v = empirical_ctrelt_value(&s, pair, theta);
    let v2 = empirical_ctrelt_value(&s.affine(a, b).unwrap(), pair, a * theta + b);
    match (v, v2) {
        (Ok(v), Ok(v2)) => prop_assert!(close(v, v2, 1e-10 * v), "{v} vs {v2}"),
        (Err(_), Err(_)) => {}
        (v, v2) => prop_assert!(false, "mapping changed outcome: {v:?} vs {v2:?}"),
    }
    let c = intermediate_ctrelt(&s, pair, eps);
    let c2 = intermediate_ctrelt(&s.affine(a, 0.0).unwrap(), pair, eps);
    match (c, c2) {
        (Ok(c), Ok(c2)) => prop_assert!(close(c.value, c2.value, 1e-8 * c.value), "{} vs {}", c.value, c2.value),
        (Err(_), Err(_)) => {}
        (c, c2) => prop_assert!(false, "scaling changed outcome: {c:?} vs {c2:?}"),
    }
    Ok(())
}

pub fn extram3_reduces_to_qua(xs: &[f64], p: f64, eps_frac: f64, gamma: f64) -> Result<(), TestCaseError> {
    let s = Sample::new(xs.to_vec()).unwrap();
    let n = xs.len() as f64;
    let eps_n = (n * 0.2 * eps_frac).max(2.0).floor() / n;
    let eps_prime = eps_n / 8.0;
    let pair = OrderPair::unchecked(p, 1.0, gamma).unwrap();
    let e = extram(&s, pair, eps_n, eps_prime, gamma, ExtraMVariant::III).unwrap().value;
    let q = qua_estimator(&s, p, eps_n, eps_prime, gamma).unwrap().value;
    prop_assert!(close(e, q, 1e-12 * q.abs()), "{e} vs {q}");
    Ok(())
}

pub fn level_monotone(xs: &[f64], p: f64, t1: f64, t2: f64) -> Result<(), TestCaseError> {
    let s = Sample::new(xs.to_vec()).unwrap();
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let a = empirical_lp_quantile(&s, p, Level::from_tau(lo).unwrap()).unwrap();
    let b = empirical_lp_quantile(&s, p, Level::from_tau(hi).unwrap()).unwrap();
    prop_assert!(a <= b + 1e-12 * (s.max() - s.min()), "tau {lo} -> {a}, tau {hi} -> {b}");
    Ok(())
}
