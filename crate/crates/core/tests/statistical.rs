//! Sampling-based checks against the reference laws.

use rayon::prelude::*;

use trelt::distributions::{HeavyTailDist, RngStream};
use trelt::extreme_lp::qua_estimator;
use trelt::lp_quantile::{empirical_lp_quantile, Level};
use trelt::oracle::{true_lp_quantile, QuadratureSpec};
use trelt::rolling::{rolling_estimates, LossSeries, RollingConfig};
use trelt::tail_index::hill;

#[test]
fn hill_mean_on_exact_pareto() {
    let g = 1.0 / 3.0;
    let d = HeavyTailDist::pareto(g).unwrap();
    let est: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|s| hill(&d.sample(10_000, &mut RngStream::new(11, s)).unwrap(), 500).unwrap())
        .collect();
    let mean = est.iter().sum::<f64>() / est.len() as f64;
    let band = 3.0 * g / (200.0f64 * 500.0).sqrt();
    assert!((mean - g).abs() <= band, "mean {mean}, band {band}");
}

#[test]
fn empirical_lp_quantile_is_consistent() {
    let d = HeavyTailDist::pareto(1.0 / 3.0).unwrap();
    let lvl = Level::from_tau(0.95).unwrap();
    let truth = true_lp_quantile(&d, 2.4, lvl, &QuadratureSpec::default()).unwrap();
    let hits = (0..20u64)
        .into_par_iter()
        .filter(|&s| {
            let x = d.sample(100_000, &mut RngStream::new(17, s)).unwrap();
            let v = empirical_lp_quantile(&x, 2.4, lvl).unwrap();
            (v / truth - 1.0).abs() < 0.05
        })
        .count();
    assert!(hits >= 19, "{hits} of 20 within 5%");
}

fn pareto_losses(len: usize, seed: u64) -> LossSeries {
    let d = HeavyTailDist::pareto(0.34).unwrap();
    let x = d.sample(len, &mut RngStream::new(seed, 0)).unwrap();
    let start = chrono::NaiveDate::from_ymd_opt(1980, 1, 4).unwrap();
    LossSeries {
        dates: (0..len as u64).map(|i| start + chrono::Days::new(7 * i)).collect(),
        values: x.values().to_vec(),
    }
}

#[test]
fn rolling_on_synthetic_pareto() {
    let losses = pareto_losses(2000, 5);
    let cfg = RollingConfig::weekly_default().unwrap();
    let r = rolling_estimates(&losses, &cfg).unwrap();
    assert_eq!(r.rows.len(), 201);
    let g: Vec<f64> = r.rows.iter().map(|row| row.gamma_hat.unwrap()).collect();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    assert!((mean - 0.34).abs() <= 4.0 * 0.34 / 80f64.sqrt(), "{mean}");

    // (2, 1): the plug-in route equals the quantile-based estimator.
    let i = cfg.pairs.iter().position(|p| p.p() == 2.0 && p.q() == 1.0).unwrap();
    for (end, row) in (1800..=2000).zip(&r.rows).step_by(20) {
        let w = trelt::lp_quantile::Sample::new(losses.values[end - 1800..end].to_vec()).unwrap();
        let qua = qua_estimator(&w, 2.0, cfg.eps_n(), cfg.eps_prime, row.gamma_hat.unwrap()).unwrap().value;
        let e3 = row.pairs[i].theta_extram3.unwrap();
        assert!((e3 / qua - 1.0).abs() < 1e-12, "{e3} vs {qua}");
    }
}
