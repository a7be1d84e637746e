//! Empirical Lp-quantiles: the asymmetric power loss, its minimizer via the
//! first-order condition, and the order-statistic quantile.

use crate::error::{Error, Result};
use crate::numeric::root::{brent_with_values, Tolerance};
use crate::numeric::KahanSum;

/// An immutable batch of finite observations with a cached ascending view.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample must contain at least one observation"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::domain(format!("observation {i} is not finite: {v}")));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observations in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observations in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// `X_{i,n}` with 1-based ascending index.
    pub fn order_stat(&self, i: usize) -> Result<f64> {
        if i == 0 || i > self.len() {
            return Err(Error::domain(format!(
                "order statistic index {i} outside [1, {}]",
                self.len()
            )));
        }
        Ok(self.sorted[i - 1])
    }

    /// Applies `x -> a x + b` to every observation.
    pub fn affine(&self, a: f64, b: f64) -> Result<Sample> {
        Sample::new(self.values.iter().map(|x| a * x + b).collect())
    }
}

/// A risk level `tau` together with its tail probability `eps = 1 - tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    tau: f64,
    eps: f64,
}

impl Level {
    pub fn from_tau(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::domain(format!("risk level must lie in (0, 1), got {tau}")));
        }
        Ok(Self { tau, eps: 1.0 - tau })
    }

    /// Builds the level from its tail probability, which keeps small `eps`
    /// exact instead of recovering it from `1 - tau`.
    pub fn from_eps(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(format!(
                "tail probability must lie in (0, 1), got {eps}"
            )));
        }
        Ok(Self { tau: 1.0 - eps, eps })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

fn check_order(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("order p must be >= 1, got {p}")))
    }
}

/// `s^e` for `s > 0`, with `0^e = 0` for `e > 0` and the exponent-1 fast path.
#[inline]
pub(crate) fn pow_pos(s: f64, e: f64) -> f64 {
    if e == 1.0 {
        s
    } else if e == 0.0 {
        1.0
    } else {
        s.powf(e)
    }
}

/// The asymmetric power loss `tau * s_+^p + (1 - tau) * s_-^p`.
pub fn check_loss(s: f64, p: f64, level: Level) -> Result<f64> {
    check_order(p)?;
    Ok(if s > 0.0 {
        level.tau * s.powf(p)
    } else if s < 0.0 {
        level.eps * (-s).powf(p)
    } else {
        0.0
    })
}

/// Mean check loss of the sample at location `u`.
pub fn empirical_check_loss(sample: &Sample, u: f64, p: f64, level: Level) -> Result<f64> {
    check_order(p)?;
    let mut acc = KahanSum::new();
    for &x in sample.sorted() {
        acc.add(check_loss(x - u, p, level)?);
    }
    Ok(acc.value() / sample.len() as f64)
}

/// `floor(n * eps)`, forgiving the few-ulp undershoot of products like
/// `n * (k / n)`.
pub(crate) fn floor_count(n: usize, eps: f64) -> usize {
    let m = n as f64 * eps;
    let fl = m.floor();
    let up = fl + 1.0;
    if up - m <= 8.0 * f64::EPSILON * m.max(1.0) {
        up as usize
    } else {
        fl as usize
    }
}

/// `X_{n - floor(n eps), n}`, the order-statistic estimate of `F^{-1}(1 - eps)`.
pub fn order_statistic_quantile(sample: &Sample, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!(
            "tail probability must lie in (0, 1), got {eps}"
        )));
    }
    let n = sample.len();
    let drop = floor_count(n, eps);
    if drop >= n {
        return Err(Error::domain(format!(
            "order statistic index n - floor(n eps) = {} is below 1 (n = {n}, eps = {eps})",
            n as i64 - drop as i64
        )));
    }
    sample.order_stat(n - drop)
}

/// Empirical Lp-quantile: the minimizer of the mean check loss.
///
/// For `p > 1` this is the unique root of the nondecreasing first-order
/// condition `g(u) = (1 - tau) sum (u - X_i)_+^{p-1} - tau sum (X_i - u)_+^{p-1}`
/// on `[min X, max X]`. `p = 1` is the order statistic `X_{n - floor(n eps), n}`.
pub fn empirical_lp_quantile(sample: &Sample, p: f64, level: Level) -> Result<f64> {
    check_order(p)?;
    if p == 1.0 {
        return order_statistic_quantile(sample, level.eps);
    }
    let lo = sample.min();
    let hi = sample.max();
    if lo == hi {
        return Ok(lo);
    }
    let xs = sample.sorted();
    let e = p - 1.0;
    let foc = |u: f64| -> f64 {
        let split = xs.partition_point(|&x| x < u);
        let mut below = KahanSum::new();
        for &x in &xs[..split] {
            below.add(pow_pos(u - x, e));
        }
        let mut above = KahanSum::new();
        for &x in &xs[split..] {
            if x > u {
                above.add(pow_pos(x - u, e));
            }
        }
        level.eps * below.value() - level.tau * above.value()
    };
    let range = hi - lo;
    let tol = Tolerance::new(1e-14 * range, 1e-15, 200);
    let f_lo = foc(lo);
    let f_hi = foc(hi);
    brent_with_values(foc, lo, hi, f_lo, f_hi, tol).map_err(|err| match err {
        Error::Numeric(msg) => Error::Numeric(format!("empirical Lp-quantile: {msg}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(tau: f64) -> Level {
        Level::from_tau(tau).unwrap()
    }

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn check_loss_examples() {
        assert_eq!(check_loss(0.0, 1.7, lv(0.3)).unwrap(), 0.0);
        assert!((check_loss(2.0, 2.0, lv(0.75)).unwrap() - 3.0).abs() < 1e-15);
        assert!((check_loss(-2.0, 2.0, lv(0.75)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(check_loss(1.0, 0.5, lv(0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn level_invariants() {
        let l = Level::from_tau(0.9).unwrap();
        assert_eq!(l.eps(), 1.0 - 0.9);
        let l = Level::from_eps(1e-6).unwrap();
        assert_eq!(l.eps(), 1e-6);
        for bad in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(Level::from_tau(bad).is_err());
            assert!(Level::from_eps(bad).is_err());
        }
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::new(vec![1.0, f64::INFINITY]).is_err());
        let s = sample(&[3.0, 1.0, 2.0]);
        assert_eq!(s.sorted(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.values(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn degenerate_sample_returns_constant() {
        let s = sample(&[4.5; 7]);
        for p in [1.0, 1.3, 2.0, 3.5] {
            for tau in [0.1, 0.5, 0.99] {
                assert_eq!(empirical_lp_quantile(&s, p, lv(tau)).unwrap(), 4.5);
            }
        }
    }

    #[test]
    fn two_point_expectiles() {
        let s = sample(&[0.0, 1.0]);
        assert!((empirical_lp_quantile(&s, 2.0, lv(0.5)).unwrap() - 0.5).abs() < 1e-12);
        assert!((empirical_lp_quantile(&s, 2.0, lv(0.75)).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn order_statistic_examples() {
        let s = sample(&(1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(order_statistic_quantile(&s, 0.2).unwrap(), 8.0);
        assert_eq!(order_statistic_quantile(&s, 0.05).unwrap(), 10.0);
        let s = sample(&[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(order_statistic_quantile(&s, 0.5).unwrap(), 2.0);
        assert!(order_statistic_quantile(&s, 0.0).is_err());
        assert!(order_statistic_quantile(&s, 1.0).is_err());
    }

    #[test]
    fn floor_count_tolerates_rounding() {
        for n in [2000usize, 5000, 1800] {
            for k in 1..200 {
                assert_eq!(floor_count(n, k as f64 / n as f64), k, "n={n} k={k}");
            }
        }
        assert_eq!(floor_count(10, 0.25), 2);
    }

    #[test]
    fn p_equal_one_is_order_statistic() {
        let s = sample(&(1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(empirical_lp_quantile(&s, 1.0, lv(0.9)).unwrap(), 9.0);
    }

    #[test]
    fn subquadratic_order_is_handled() {
        let s = sample(&[0.0, 1.0, 2.0, 10.0]);
        let u = empirical_lp_quantile(&s, 1.5, lv(0.8)).unwrap();
        let l = lv(0.8);
        let f = |v| empirical_check_loss(&s, v, 1.5, l).unwrap();
        assert!(f(u) <= f(u + 1e-4) && f(u) <= f(u - 1e-4));
    }
}
