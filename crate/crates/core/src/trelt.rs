//! Tail risk equivalent level transition: the Beta-ratio limits and the
//! plug-in, intermediate and extreme estimators of the transition multiplier.

use std::fmt;

use crate::error::{Error, Result};
use crate::extreme_lp::extrapolate;
use crate::lp_quantile::{empirical_lp_quantile, pow_pos, Level, Sample};
use crate::numeric::KahanSum;
use crate::special::ln_beta;

/// A pair of loss orders `(p, q)` with the tail index used to validate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderPair {
    p: f64,
    q: f64,
    gamma_context: f64,
}

impl OrderPair {
    /// Strict regime: `1 <= q < p` and `1 - q < p - 1/(2 gamma) < 1`.
    ///
    /// This is the constraint under which the estimators are asymptotically
    /// normal; experiment configurations are checked against it.
    pub fn new(p: f64, q: f64, gamma: f64) -> Result<Self> {
        let pair = Self::moment(p, q, gamma)?;
        if p == q {
            return Err(Error::Regime(format!("need q < p, got p = q = {p}")));
        }
        let mid = p - 1.0 / (2.0 * gamma);
        if !(1.0 - q < mid && mid < 1.0) {
            return Err(Error::Regime(format!(
                "need 1 - q < p - 1/(2 gamma) < 1, got p - 1/(2 gamma) = {mid} \
                 for (p, q) = ({p}, {q}), gamma = {gamma}"
            )));
        }
        Ok(pair)
    }

    /// Moment regime: `1 <= q <= p < 1 + 1/gamma`, i.e. every tail moment
    /// and Beta argument involved is finite and positive.
    pub fn moment(p: f64, q: f64, gamma: f64) -> Result<Self> {
        let pair = Self::unchecked(p, q, gamma)?;
        if gamma > 0.0 && p >= 1.0 + 1.0 / gamma {
            return Err(Error::Regime(format!(
                "need p < 1 + 1/gamma, got p = {p} with gamma = {gamma}"
            )));
        }
        Ok(pair)
    }

    /// Only `1 <= q <= p`; the tail index is recorded but not checked.
    pub fn unchecked(p: f64, q: f64, gamma: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) || q < 1.0 || p < q {
            return Err(Error::domain(format!("need 1 <= q <= p, got p = {p}, q = {q}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!(
                "tail index must be finite and nonnegative, got {gamma}"
            )));
        }
        Ok(Self { p, q, gamma_context: gamma })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn gamma_context(&self) -> f64 {
        self.gamma_context
    }

    /// The same orders re-validated (moment regime) against another tail index.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::moment(self.p, self.q, gamma)
    }
}

impl fmt::Display for OrderPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreltMethod {
    PlugIn,
    Intermediate,
    Extreme,
}

/// An estimated transition multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreltEstimate {
    pub value: f64,
    pub method: TreltMethod,
    /// Level at which the transition was evaluated; `None` for the
    /// level-free plug-in.
    pub eps_used: Option<f64>,
    pub pair: OrderPair,
}

fn ln_beta_ratio(gamma: f64, p: f64, q: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("tail index must be positive, got {gamma}")));
    }
    if !(q >= 1.0 && p >= q) {
        return Err(Error::domain(format!("need 1 <= q <= p, got p = {p}, q = {q}")));
    }
    let b = 1.0 / gamma + 1.0;
    if p >= b {
        return Err(Error::Regime(format!(
            "need p < 1 + 1/gamma, got p = {p} with gamma = {gamma}"
        )));
    }
    if p == q {
        return Ok(0.0);
    }
    Ok(ln_beta(p, b - p)? - ln_beta(q, b - q)?)
}

/// `[B(p, 1/gamma - p + 1) / B(q, 1/gamma - q + 1)]^gamma`, the limit of
/// `theta_p(1 - eps) / theta_q(1 - eps)`.
pub fn ratio_limit_l(gamma: f64, p: f64, q: f64) -> Result<f64> {
    Ok((gamma * ln_beta_ratio(gamma, p, q)?).exp())
}

/// `B(p, 1/gamma - p + 1) / B(q, 1/gamma - q + 1)`, the common small-level
/// limit of the transition multiplier and its dual.
pub fn ctrelt_limit_ell(gamma: f64, p: f64, q: f64) -> Result<f64> {
    Ok(ln_beta_ratio(gamma, p, q)?.exp())
}

/// Level-free plug-in estimate `ell(gamma_hat, p, q)`.
pub fn plugin_ctrelt(gamma_hat: f64, pair: OrderPair) -> Result<TreltEstimate> {
    let value = ctrelt_limit_ell(gamma_hat, pair.p, pair.q)?;
    Ok(TreltEstimate {
        value,
        method: TreltMethod::PlugIn,
        eps_used: None,
        pair,
    })
}

/// The transition multiplier implied by the sample at location `theta`:
/// `[S_+(p-1) / S_+(q-1)] * [S(q-1) / S(p-1)]` with `S_+(e) = sum (X - theta)_+^e`,
/// `S(e) = sum |X - theta|^e` and `0^0 = 1`.
pub fn empirical_ctrelt_value(sample: &Sample, pair: OrderPair, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::domain(format!("location must be finite, got {theta}")));
    }
    let (ep, eq) = (pair.p - 1.0, pair.q - 1.0);
    let xs = sample.sorted();
    let split = xs.partition_point(|&x| x <= theta);
    let mut up_p = KahanSum::new();
    let mut up_q = KahanSum::new();
    for &x in &xs[split..] {
        let s = x - theta;
        up_p.add(pow_pos(s, ep));
        up_q.add(pow_pos(s, eq));
    }
    let mut all_p = up_p;
    let mut all_q = up_q;
    for &x in &xs[..split] {
        let s = theta - x;
        all_p.add(pow_pos(s, ep));
        all_q.add(pow_pos(s, eq));
    }
    if split == xs.len() {
        return Err(Error::DegenerateTail(format!(
            "no observation exceeds the transition location {theta} (sample max {})",
            sample.max()
        )));
    }
    if pair.p == pair.q {
        return Ok(1.0);
    }
    let value = (up_p.value() / up_q.value()) * (all_q.value() / all_p.value());
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::numeric(format!(
            "empirical transition multiplier is not finite and positive: {value}"
        )));
    }
    Ok(value)
}

/// Empirical transition multiplier at a supplied estimate of `theta_q`.
pub fn empirical_ctrelt(sample: &Sample, pair: OrderPair, theta_q_hat: f64) -> Result<TreltEstimate> {
    Ok(TreltEstimate {
        value: empirical_ctrelt_value(sample, pair, theta_q_hat)?,
        method: TreltMethod::Intermediate,
        eps_used: None,
        pair,
    })
}

/// Empirical multiplier at `theta_q(1 - eps_n)` estimated from the sample.
pub fn intermediate_ctrelt(sample: &Sample, pair: OrderPair, eps_n: f64) -> Result<TreltEstimate> {
    let theta = empirical_lp_quantile(sample, pair.q, Level::from_eps(eps_n)?)?;
    Ok(TreltEstimate {
        value: empirical_ctrelt_value(sample, pair, theta)?,
        method: TreltMethod::Intermediate,
        eps_used: Some(eps_n),
        pair,
    })
}

/// Empirical multiplier at the extrapolated `theta_q(1 - eps_prime)`.
///
/// The extrapolated location often lies above the sample maximum, which is
/// reported as a degenerate tail.
pub fn extreme_ctrelt(
    sample: &Sample,
    pair: OrderPair,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
) -> Result<TreltEstimate> {
    let theta_int = empirical_lp_quantile(sample, pair.q, Level::from_eps(eps_n)?)?;
    let theta = extrapolate(theta_int, eps_n, eps_prime, gamma_hat)?;
    Ok(TreltEstimate {
        value: empirical_ctrelt_value(sample, pair, theta)?,
        method: TreltMethod::Extreme,
        eps_used: Some(eps_prime),
        pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(p: f64, q: f64) -> OrderPair {
        OrderPair::unchecked(p, q, 0.3).unwrap()
    }

    #[test]
    fn limit_closed_forms() {
        assert!((ctrelt_limit_ell(1.0 / 3.0, 2.0, 1.0).unwrap() - 0.5).abs() < 1e-13);
        assert!(
            (ratio_limit_l(1.0 / 3.0, 2.0, 1.0).unwrap() - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-13
        );
        assert!((ctrelt_limit_ell(0.45, 2.0, 1.0).unwrap() - 0.45 / 0.55).abs() < 1e-13);
        assert!(
            (ratio_limit_l(0.45, 2.0, 1.0).unwrap() - (0.45f64 / 0.55).powf(0.45)).abs() < 1e-13
        );
        assert_eq!(ctrelt_limit_ell(0.3, 2.2, 2.2).unwrap(), 1.0);
        assert_eq!(ratio_limit_l(0.3, 2.2, 2.2).unwrap(), 1.0);
    }

    #[test]
    fn limit_rejects_infinite_moments() {
        assert!(matches!(ctrelt_limit_ell(0.5, 3.0, 1.0), Err(Error::Regime(_))));
        assert!(ctrelt_limit_ell(0.0, 2.0, 1.0).is_err());
        assert!(ctrelt_limit_ell(0.3, 2.0, 0.5).is_err());
    }

    #[test]
    fn pair_regimes() {
        assert!(OrderPair::new(2.4, 1.8, 1.0 / 3.0).is_ok());
        assert!(OrderPair::new(2.4, 2.0, 1.0 / 3.0).is_ok());
        assert!(OrderPair::new(2.0, 1.5, 0.45).is_ok());
        assert!(OrderPair::new(2.0, 1.8, 0.45).is_ok());
        // boundary equality of the trichotomy is outside the strict regime
        assert!(matches!(OrderPair::new(2.0, 1.0, 0.5), Err(Error::Regime(_))));
        assert!(OrderPair::moment(2.0, 1.0, 0.5).is_ok());
        assert!(OrderPair::new(1.8, 1.8, 0.3).is_err());
        assert!(OrderPair::unchecked(1.5, 2.0, 0.3).is_err());
    }

    #[test]
    fn two_point_hand_example() {
        let s = Sample::new(vec![0.0, 2.0]).unwrap();
        let v = empirical_ctrelt_value(&s, pair(2.0, 1.0), 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_orders_give_one() {
        let s = Sample::new(vec![0.3, 1.0, 2.5, 7.0, 11.0]).unwrap();
        assert_eq!(empirical_ctrelt_value(&s, pair(1.7, 1.7), 2.0).unwrap(), 1.0);
        let est = intermediate_ctrelt(&s, pair(1.7, 1.7), 0.3).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.eps_used, Some(0.3));
    }

    #[test]
    fn no_exceedance_is_degenerate() {
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            empirical_ctrelt_value(&s, pair(2.0, 1.5), 3.0),
            Err(Error::DegenerateTail(_))
        ));
    }

    #[test]
    fn location_ties_use_zero_power_convention() {
        // theta sits on an observation; with q = 1 the tie counts in |.|^0.
        let s = Sample::new(vec![0.0, 1.0, 3.0]).unwrap();
        let v = empirical_ctrelt_value(&s, pair(2.0, 1.0), 1.0).unwrap();
        // up: (3-1)^1 = 2 over one exceedance; all: three points over 1 + 0 + 2
        assert!((v - 2.0 * 3.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn extreme_reduces_to_intermediate() {
        let s = Sample::new((1..=40).map(|i| (i as f64).powf(0.8)).collect()).unwrap();
        let pr = pair(2.4, 1.8);
        let int = intermediate_ctrelt(&s, pr, 0.2).unwrap().value;
        assert_eq!(extreme_ctrelt(&s, pr, 0.2, 0.2, 0.3).unwrap().value, int);
        assert_eq!(extreme_ctrelt(&s, pr, 0.2, 0.05, 0.0).unwrap().value, int);
    }

    #[test]
    fn plugin_ignores_data() {
        let e = plugin_ctrelt(1.0 / 3.0, OrderPair::moment(2.0, 1.0, 1.0 / 3.0).unwrap()).unwrap();
        assert!((e.value - 0.5).abs() < 1e-13);
        assert_eq!(e.method, TreltMethod::PlugIn);
        assert_eq!(e.eps_used, None);
    }
}
