//! Extrapolative estimators of the extreme Lp-quantile `theta_p(1 - eps')`.

use std::fmt;

use crate::error::{Error, Result};
use crate::lp_quantile::{empirical_lp_quantile, order_statistic_quantile, Level, Sample};
use crate::special::ln_beta;
use crate::trelt::{extreme_ctrelt, intermediate_ctrelt, plugin_ctrelt, OrderPair, TreltEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtremeMethod {
    Bm,
    Qua,
    ExtraM1,
    ExtraM2,
    ExtraM3,
}

impl fmt::Display for ExtremeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bm => "BM",
            Self::Qua => "QUA",
            Self::ExtraM1 => "ExtraM-I",
            Self::ExtraM2 => "ExtraM-II",
            Self::ExtraM3 => "ExtraM-III",
        })
    }
}

/// Which transition multiplier feeds the ExtraM family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtraMVariant {
    /// Empirical multiplier at the intermediate level.
    I,
    /// Empirical multiplier at the extrapolated extreme level.
    II,
    /// Plug-in Beta-ratio limit.
    III,
}

impl ExtraMVariant {
    pub fn method(self) -> ExtremeMethod {
        match self {
            Self::I => ExtremeMethod::ExtraM1,
            Self::II => ExtremeMethod::ExtraM2,
            Self::III => ExtremeMethod::ExtraM3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeEstimate {
    pub value: f64,
    pub method: ExtremeMethod,
    pub eps_n: f64,
    pub eps_prime: f64,
    pub gamma_hat: f64,
    pub ctrelt_used: Option<TreltEstimate>,
}

fn check_levels(eps_n: f64, eps_prime: f64) -> Result<()> {
    if !(eps_n > 0.0 && eps_n < 1.0) {
        return Err(Error::domain(format!("eps_n must lie in (0, 1), got {eps_n}")));
    }
    if !(eps_prime > 0.0 && eps_prime <= eps_n) {
        return Err(Error::domain(format!(
            "need 0 < eps_prime <= eps_n, got eps_prime = {eps_prime}, eps_n = {eps_n}"
        )));
    }
    Ok(())
}

fn check_gamma(gamma_hat: f64) -> Result<()> {
    if gamma_hat >= 0.0 && gamma_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "tail index estimate must be finite and nonnegative, got {gamma_hat}"
        )))
    }
}

/// Weissman-type extrapolation `(eps_prime / eps_n)^(-gamma_hat) * intermediate`.
///
/// A nonpositive intermediate value cannot be extrapolated by a power law and
/// is reported as a degenerate tail.
pub fn extrapolate(intermediate: f64, eps_n: f64, eps_prime: f64, gamma_hat: f64) -> Result<f64> {
    check_levels(eps_n, eps_prime)?;
    check_gamma(gamma_hat)?;
    if !(intermediate > 0.0 && intermediate.is_finite()) {
        return Err(Error::DegenerateTail(format!(
            "intermediate estimate {intermediate} is not positive; power extrapolation undefined"
        )));
    }
    Ok((eps_prime / eps_n).powf(-gamma_hat) * intermediate)
}

/// `(c * eps_n / eps_prime)^gamma_hat * theta_q_int`, the common ExtraM form.
pub fn transition_extrapolate(
    theta_q_int: f64,
    c: f64,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
) -> Result<f64> {
    check_levels(eps_n, eps_prime)?;
    check_gamma(gamma_hat)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("transition multiplier must be positive, got {c}")));
    }
    if !(theta_q_int > 0.0 && theta_q_int.is_finite()) {
        return Err(Error::DegenerateTail(format!(
            "intermediate estimate {theta_q_int} is not positive; power extrapolation undefined"
        )));
    }
    Ok((c * eps_n / eps_prime).powf(gamma_hat) * theta_q_int)
}

/// `[gamma / B(p, 1/gamma - p + 1)]^(-gamma)`, the asymptotic ratio
/// `theta_p(1 - eps) / F^{-1}(1 - eps)`.
pub fn quantile_prefactor(gamma_hat: f64, p: f64) -> Result<f64> {
    check_gamma(gamma_hat)?;
    if p < 1.0 {
        return Err(Error::domain(format!("order p must be >= 1, got {p}")));
    }
    if p == 1.0 || gamma_hat == 0.0 {
        return Ok(1.0);
    }
    let b = 1.0 / gamma_hat - p + 1.0;
    if b <= 0.0 {
        return Err(Error::Regime(format!(
            "need p < 1 + 1/gamma_hat, got p = {p} with gamma_hat = {gamma_hat}"
        )));
    }
    Ok((-gamma_hat * (gamma_hat.ln() - ln_beta(p, b)?)).exp())
}

/// Benchmark: the intermediate empirical Lp-quantile extrapolated by the Hill slope.
pub fn bm_estimator(
    sample: &Sample,
    p: f64,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
) -> Result<ExtremeEstimate> {
    check_levels(eps_n, eps_prime)?;
    let theta = empirical_lp_quantile(sample, p, Level::from_eps(eps_n)?)?;
    Ok(ExtremeEstimate {
        value: extrapolate(theta, eps_n, eps_prime, gamma_hat)?,
        method: ExtremeMethod::Bm,
        eps_n,
        eps_prime,
        gamma_hat,
        ctrelt_used: None,
    })
}

/// Quantile-based: the extrapolated order statistic scaled by the asymptotic
/// Lp-to-quantile ratio.
pub fn qua_estimator(
    sample: &Sample,
    p: f64,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
) -> Result<ExtremeEstimate> {
    check_levels(eps_n, eps_prime)?;
    let prefactor = quantile_prefactor(gamma_hat, p)?;
    let q_int = order_statistic_quantile(sample, eps_n)?;
    Ok(ExtremeEstimate {
        value: prefactor * extrapolate(q_int, eps_n, eps_prime, gamma_hat)?,
        method: ExtremeMethod::Qua,
        eps_n,
        eps_prime,
        gamma_hat,
        ctrelt_used: None,
    })
}

/// ExtraM family: `theta_q(1 - eps_n)` carried to `theta_p(1 - eps_prime)`
/// through an estimated transition multiplier.
pub fn extram(
    sample: &Sample,
    pair: OrderPair,
    eps_n: f64,
    eps_prime: f64,
    gamma_hat: f64,
    variant: ExtraMVariant,
) -> Result<ExtremeEstimate> {
    check_levels(eps_n, eps_prime)?;
    let c = match variant {
        ExtraMVariant::I => intermediate_ctrelt(sample, pair, eps_n)?,
        ExtraMVariant::II => extreme_ctrelt(sample, pair, eps_n, eps_prime, gamma_hat)?,
        ExtraMVariant::III => plugin_ctrelt(gamma_hat, pair)?,
    };
    let theta = empirical_lp_quantile(sample, pair.q(), Level::from_eps(eps_n)?)?;
    Ok(ExtremeEstimate {
        value: transition_extrapolate(theta, c.value, eps_n, eps_prime, gamma_hat)?,
        method: variant.method(),
        eps_n,
        eps_prime,
        gamma_hat,
        ctrelt_used: Some(c),
    })
}
