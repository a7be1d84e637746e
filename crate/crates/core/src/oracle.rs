//! Ground-truth Lp-quantiles and transition multipliers for the reference
//! laws, by quadrature of the tail moments and bracketed root finding.

use std::cell::RefCell;

use crate::distributions::HeavyTailDist;
use crate::error::{Error, Result};
use crate::lp_quantile::Level;
pub use crate::numeric::quad::QuadratureSpec;
use crate::numeric::quad::{integrate_log, integrate_lower_log, integrate_upper_log};
use crate::numeric::root::{brent_with_values, Tolerance};
use crate::numeric::KahanSum;
use crate::trelt::OrderPair;

/// Probability levels whose quantiles split the moment integrals, so each
/// piece sees one feature of the density.
const SPLIT_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];
const MAX_EXPANSIONS: usize = 200;

/// `E[(X - theta)_+^e]` and `E[(X - theta)_-^e]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMoments {
    pub upper: f64,
    pub lower: f64,
}

fn split_points(dist: &HeavyTailDist) -> Result<[f64; 3]> {
    Ok([
        dist.quantile(SPLIT_LEVELS[0])?,
        dist.quantile(SPLIT_LEVELS[1])?,
        dist.quantile(SPLIT_LEVELS[2])?,
    ])
}

fn spread(dist: &HeavyTailDist) -> Result<f64> {
    Ok(dist.quantile(0.75)? - dist.quantile(0.25)?)
}

#[inline]
fn ln_power(s: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * s.ln()
    }
}

fn scaled_spec(quad: &QuadratureSpec, prob: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: quad.abs_tol * prob.max(f64::MIN_POSITIVE),
        ..*quad
    }
}

fn upper_moment(dist: &HeavyTailDist, theta: f64, e: f64, quad: &QuadratureSpec) -> Result<f64> {
    let start = theta.max(dist.support_lower());
    let prob = dist.survival(start);
    if prob == 0.0 {
        return Ok(0.0);
    }
    let spec = scaled_spec(quad, prob);
    let mut pts = vec![start];
    pts.extend(split_points(dist)?.into_iter().filter(|&b| b > start));
    let mut total = KahanSum::new();
    for w in pts.windows(2) {
        let off = w[0] - theta;
        total.add(integrate_log(
            |x, da, _| ln_power(off + da, e) + dist.ln_pdf(x),
            w[0],
            w[1],
            &spec,
        )?);
    }
    let last = *pts.last().expect("nonempty");
    let off = last - theta;
    let scale = off.max(last.abs()).max(spread(dist)?);
    total.add(integrate_upper_log(
        |x, d| ln_power(off + d, e) + dist.ln_pdf(x),
        last,
        scale,
        &spec,
    )?);
    Ok(total.value())
}

fn lower_moment(dist: &HeavyTailDist, theta: f64, e: f64, quad: &QuadratureSpec) -> Result<f64> {
    let floor = dist.support_lower();
    if theta <= floor {
        return Ok(0.0);
    }
    let prob = dist.cdf(theta);
    if prob == 0.0 {
        return Ok(0.0);
    }
    let spec = scaled_spec(quad, prob);
    let mut pts = vec![theta];
    pts.extend(
        split_points(dist)?
            .into_iter()
            .rev()
            .filter(|&b| b < theta && b > floor),
    );
    let mut total = KahanSum::new();
    for w in pts.windows(2) {
        let off = theta - w[0];
        total.add(integrate_log(
            |x, _, db| ln_power(off + db, e) + dist.ln_pdf(x),
            w[1],
            w[0],
            &spec,
        )?);
    }
    let last = *pts.last().expect("nonempty");
    let off = theta - last;
    if floor.is_finite() {
        total.add(integrate_log(
            |x, _, db| ln_power(off + db, e) + dist.ln_pdf(x),
            floor,
            last,
            &spec,
        )?);
    } else {
        let scale = off.max(last.abs()).max(spread(dist)?);
        total.add(integrate_lower_log(
            |x, d| ln_power(off + d, e) + dist.ln_pdf(x),
            last,
            scale,
            &spec,
        )?);
    }
    Ok(total.value())
}

/// Upper and lower partial moments of order `e >= 0` about `theta`.
pub fn tail_moments(
    dist: &HeavyTailDist,
    theta: f64,
    e: f64,
    quad: &QuadratureSpec,
) -> Result<TailMoments> {
    if !theta.is_finite() {
        return Err(Error::domain(format!("location must be finite, got {theta}")));
    }
    if e.is_nan() || e < 0.0 {
        return Err(Error::domain(format!("moment order must be nonnegative, got {e}")));
    }
    if dist.gamma() > 0.0 && e >= 1.0 / dist.gamma() {
        return Err(Error::Regime(format!(
            "tail moment of order {e} is infinite for extreme value index {}",
            dist.gamma()
        )));
    }
    Ok(TailMoments {
        upper: upper_moment(dist, theta, e, quad)?,
        lower: lower_moment(dist, theta, e, quad)?,
    })
}

/// `tau E[(X - theta)_+^{p-1}] - (1 - tau) E[(X - theta)_-^{p-1}]`, zero at
/// the Lp-quantile.
pub fn scale_equation_residual(
    dist: &HeavyTailDist,
    p: f64,
    level: Level,
    theta: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let m = tail_moments(dist, theta, p - 1.0, quad)?;
    Ok(level.tau() * m.upper - level.eps() * m.lower)
}

fn law_quantile(dist: &HeavyTailDist, level: Level) -> Result<f64> {
    if level.eps() <= 0.5 {
        dist.upper_quantile(level.eps())
    } else {
        dist.quantile(level.tau())
    }
}

/// Runs Brent on a fallible function, surfacing the first inner error.
fn solve<F>(g: F, a: f64, b: f64, fa: f64, fb: f64, tol: Tolerance, what: &str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let inner: RefCell<Option<Error>> = RefCell::new(None);
    let f = |x: f64| match g(x) {
        Ok(v) => v,
        Err(e) => {
            inner.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let out = brent_with_values(f, a, b, fa, fb, tol);
    if let Some(e) = inner.into_inner() {
        return Err(e);
    }
    out.map_err(|e| match e {
        Error::Numeric(msg) => Error::Numeric(format!("{what}: {msg}")),
        other => other,
    })
}

/// The Lp-quantile `theta_p(tau)` of a reference law, solving the scale
/// equation `tau E[(X - theta)_+^{p-1}] = (1 - tau) E[(X - theta)_-^{p-1}]`.
///
/// `p = 1` returns the quantile directly. Requires `p < 1 + 1/gamma`.
pub fn true_lp_quantile(
    dist: &HeavyTailDist,
    p: f64,
    level: Level,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::domain(format!("order p must be >= 1, got {p}")));
    }
    if p == 1.0 {
        return law_quantile(dist, level);
    }
    if p >= 1.0 + 1.0 / dist.gamma() {
        return Err(Error::Regime(format!(
            "Lp-quantile of order {p} needs p < 1 + 1/gamma = {}",
            1.0 + 1.0 / dist.gamma()
        )));
    }
    let e = p - 1.0;
    let target = level.eps().ln() - level.tau().ln();
    // Decreasing in theta: +inf below the support, -inf far above.
    let gap = |theta: f64| -> Result<f64> {
        let m = tail_moments(dist, theta, e, quad)?;
        Ok(m.upper.ln() - m.lower.ln() - target)
    };

    let floor = dist.support_lower();
    let center = law_quantile(dist, level)?;
    let width = 0.5 * center.abs().max(spread(dist)?);

    let mut lo = center - width;
    if lo <= floor {
        lo = floor + 0.5 * (center - floor);
    }
    let mut g_lo = gap(lo)?;
    let mut step = width;
    let mut n = 0;
    while g_lo < 0.0 {
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(Error::numeric(format!(
                "Lp-quantile bracket expansion failed below {lo} (p = {p}, tau = {})",
                level.tau()
            )));
        }
        step *= 2.0;
        lo = if floor.is_finite() {
            floor + 0.25 * (lo - floor)
        } else {
            center - step
        };
        g_lo = gap(lo)?;
    }
    let mut hi = center + width;
    let mut g_hi = gap(hi)?;
    let mut step = width;
    n = 0;
    while g_hi > 0.0 {
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(Error::numeric(format!(
                "Lp-quantile bracket expansion failed above {hi} (p = {p}, tau = {})",
                level.tau()
            )));
        }
        step *= 2.0;
        hi = center + step;
        g_hi = gap(hi)?;
    }
    let tol = Tolerance::new(1e-15 * width, 1e-14, 200);
    solve(gap, lo, hi, g_lo, g_hi, tol, "true Lp-quantile")
}

fn lower_end_lp(dist: &HeavyTailDist, p: f64, tau0: f64, quad: &QuadratureSpec) -> Result<f64> {
    if tau0 == 0.0 {
        let floor = dist.support_lower();
        if floor.is_finite() {
            Ok(floor)
        } else {
            Err(Error::domain(
                "tau0 = 0 needs a law with finite lower support; supply tau0 > 0",
            ))
        }
    } else {
        true_lp_quantile(dist, p, Level::from_tau(tau0)?, quad)
    }
}

/// The transition multiplier `c` with `theta_p(1 - c eps) = theta_q(1 - eps)`.
///
/// The root is searched over `c` in `[1, (1 - tau0) / eps]`; when
/// `theta_p(1 - eps) < theta_q(1 - eps)` the multiplier lies below 1 and the
/// search continues downward.
pub fn true_ctrelt(
    dist: &HeavyTailDist,
    pair: OrderPair,
    eps: f64,
    tau0: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(0.0..1.0).contains(&tau0) {
        return Err(Error::domain(format!("tau0 must lie in [0, 1), got {tau0}")));
    }
    if !(eps > 0.0 && eps < 1.0 - tau0) {
        return Err(Error::domain(format!(
            "need 0 < eps < 1 - tau0, got eps = {eps}, tau0 = {tau0}"
        )));
    }
    let (p, q) = (pair.p(), pair.q());
    if p == q {
        return Ok(1.0);
    }
    let target = true_lp_quantile(dist, q, Level::from_eps(eps)?, quad)?;
    let t_max = ((1.0 - tau0) / eps).ln();
    let theta_at = |t: f64| -> Result<f64> {
        let level_eps = eps * t.exp();
        if t >= t_max || level_eps >= 1.0 - tau0 {
            lower_end_lp(dist, p, tau0, quad)
        } else {
            true_lp_quantile(dist, p, Level::from_eps(level_eps)?, quad)
        }
    };
    let phi = |t: f64| -> Result<f64> { Ok(theta_at(t)? - target) };
    let tol = Tolerance::new(1e-11, 1e-12, 200);

    let f0 = phi(0.0)?;
    if f0 == 0.0 {
        return Ok(1.0);
    }
    let t = if f0 > 0.0 {
        let f_max = phi(t_max)?;
        if f_max > 0.0 {
            return Err(Error::Existence(format!(
                "no transition in c in [1, {}]: theta_p(tau0 = {tau0}) = {} exceeds \
                 theta_q(1 - eps) = {target} (p = {p}, q = {q}, eps = {eps})",
                (1.0 - tau0) / eps,
                f_max + target
            )));
        }
        solve(phi, 0.0, t_max, f0, f_max, tol, "transition multiplier")?
    } else {
        // theta_p(1 - c eps) grows without bound as c eps -> 0.
        let mut t_lo = -1.0;
        let mut f_lo = phi(t_lo)?;
        let mut n = 0;
        while f_lo < 0.0 {
            n += 1;
            if n > 60 || eps * (2.0 * t_lo).exp() == 0.0 {
                return Err(Error::Existence(format!(
                    "no transition multiplier below 1: theta_p stays under theta_q(1 - eps) = \
                     {target} down to c = {} (p = {p}, q = {q}, eps = {eps})",
                    t_lo.exp()
                )));
            }
            t_lo *= 2.0;
            f_lo = phi(t_lo)?;
        }
        solve(phi, t_lo, 0.0, f_lo, f0, tol, "transition multiplier")?
    };
    Ok(t.exp())
}

/// The dual multiplier `d` with `theta_p(1 - eps) = theta_q(1 - eps / d)`.
pub fn true_dual_ctrelt(
    dist: &HeavyTailDist,
    pair: OrderPair,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    const D_MAX: f64 = 1e12;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (p, q) = (pair.p(), pair.q());
    if p == q {
        return Ok(1.0);
    }
    let target = true_lp_quantile(dist, p, Level::from_eps(eps)?, quad)?;
    let psi = |t: f64| -> Result<f64> {
        let level_eps = eps * (-t).exp();
        if level_eps >= 1.0 {
            return lower_end_lp(dist, q, 0.0, quad).map(|v| v - target);
        }
        Ok(true_lp_quantile(dist, q, Level::from_eps(level_eps)?, quad)? - target)
    };
    let tol = Tolerance::new(1e-11, 1e-12, 200);
    let f0 = psi(0.0)?;
    if f0 == 0.0 {
        return Ok(1.0);
    }
    let t = if f0 < 0.0 {
        let t_cap = D_MAX.ln();
        let mut t_hi = 1.0f64;
        let mut f_hi = psi(t_hi)?;
        while f_hi < 0.0 {
            if t_hi >= t_cap {
                return Err(Error::numeric(format!(
                    "dual multiplier bracket exceeded d = {D_MAX:e} (p = {p}, q = {q}, eps = {eps})"
                )));
            }
            t_hi = (2.0 * t_hi).min(t_cap);
            f_hi = psi(t_hi)?;
        }
        solve(psi, 0.0, t_hi, f0, f_hi, tol, "dual multiplier")?
    } else {
        // d below 1: the q-level 1 - eps/d falls toward the bottom of the law.
        let t_min = eps.ln();
        let mut t_lo = -1.0f64.min(0.5 * t_min.abs());
        let mut f_lo = psi(t_lo)?;
        while f_lo > 0.0 {
            if t_lo <= t_min {
                return Err(Error::Existence(format!(
                    "no dual multiplier: theta_q stays above theta_p(1 - eps) = {target} \
                     (p = {p}, q = {q}, eps = {eps})"
                )));
            }
            t_lo = (2.0 * t_lo).max(t_min);
            f_lo = psi(t_lo)?;
        }
        solve(psi, t_lo, 0.0, f_lo, f0, tol, "dual multiplier")?
    };
    Ok(t.exp())
}

/// Largest grid level `tau` with `theta_p(tau) <= theta_q(tau)`, or 0 if the
/// `p`-curve lies strictly above on the whole grid. Equal orders return the
/// top grid point.
pub fn tau0_scan(
    dist: &HeavyTailDist,
    pair: OrderPair,
    grid_step: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::domain(format!("grid step must lie in (0, 0.1], got {grid_step}")));
    }
    let top = ((1.0 / grid_step).round() as usize).saturating_sub(1);
    let grid = |j: usize| j as f64 * grid_step;
    if pair.p() == pair.q() {
        return Ok(grid(top));
    }
    for j in (1..=top).rev() {
        let tau = grid(j);
        if tau >= 1.0 {
            continue;
        }
        let level = Level::from_tau(tau)?;
        let tp = true_lp_quantile(dist, pair.p(), level, quad)?;
        let tq = true_lp_quantile(dist, pair.q(), level, quad)?;
        if tp <= tq {
            return Ok(tau);
        }
    }
    Ok(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn p_one_is_the_quantile() {
        let d = HeavyTailDist::pareto(1.0 / 3.0).unwrap();
        let v = true_lp_quantile(&d, 1.0, Level::from_tau(0.875).unwrap(), &quad()).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn symmetric_expectile_at_half_is_zero() {
        for g in [1.0 / 3.0, 0.45] {
            let d = HeavyTailDist::student_t(g).unwrap();
            let v = true_lp_quantile(&d, 2.0, Level::from_tau(0.5).unwrap(), &quad()).unwrap();
            assert!(v.abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn pareto_mean_and_moments() {
        // E[X] = 1/(1 - gamma) for Pareto; the lower moment about 1 is zero.
        let d = HeavyTailDist::pareto(0.25).unwrap();
        let m = tail_moments(&d, 1.0, 1.0, &quad()).unwrap();
        assert!((m.upper - (1.0 / 0.75 - 1.0)).abs() < 1e-10, "{}", m.upper);
        assert_eq!(m.lower, 0.0);
        // The expectile at 1/2 is the mean.
        let v = true_lp_quantile(&d, 2.0, Level::from_tau(0.5).unwrap(), &quad()).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn zeroth_moments_are_probabilities() {
        let d = HeavyTailDist::student_t(0.4).unwrap();
        let m = tail_moments(&d, 1.3, 0.0, &quad()).unwrap();
        assert!((m.upper - d.survival(1.3)).abs() < 1e-11);
        assert!((m.lower - d.cdf(1.3)).abs() < 1e-11);
    }

    #[test]
    fn infinite_moment_is_a_regime_error() {
        let d = HeavyTailDist::pareto(0.45).unwrap();
        let r = true_lp_quantile(&d, 3.5, Level::from_tau(0.9).unwrap(), &quad());
        assert!(matches!(r, Err(Error::Regime(_))));
    }

    #[test]
    fn equal_orders_are_one() {
        let d = HeavyTailDist::pareto(1.0 / 3.0).unwrap();
        let pr = OrderPair::unchecked(2.0, 2.0, 1.0 / 3.0).unwrap();
        assert_eq!(true_ctrelt(&d, pr, 0.01, 0.0, &quad()).unwrap(), 1.0);
        assert_eq!(true_dual_ctrelt(&d, pr, 0.01, &quad()).unwrap(), 1.0);
        assert_eq!(tau0_scan(&d, pr, 0.01, &quad()).unwrap(), 0.99);
    }

    #[test]
    fn unbounded_law_needs_positive_tau0() {
        let d = HeavyTailDist::student_t(1.0 / 3.0).unwrap();
        let pr = OrderPair::new(2.4, 1.8, 1.0 / 3.0).unwrap();
        assert!(true_ctrelt(&d, pr, 0.01, 0.0, &quad()).is_err());
        assert!(true_ctrelt(&d, pr, 0.01, 0.5, &quad()).unwrap() > 1.0);
    }
}
