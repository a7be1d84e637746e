//! Hill estimation of the extreme value index and Hill-plot series.

use crate::error::{Error, Result};
use crate::lp_quantile::Sample;
use crate::numeric::KahanSum;

/// Two-sided 90% normal quantile used for the Hill band.
pub const Z_90: f64 = 1.6449;

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k + 1 > n {
        return Err(Error::domain(format!(
            "Hill needs 2 <= k <= n - 1, got k = {k} with n = {n}"
        )));
    }
    Ok(())
}

/// Hill estimator from the top `k` log-spacings above `X_{n-k,n}`.
pub fn hill(sample: &Sample, k: usize) -> Result<f64> {
    let n = sample.len();
    check_k(n, k)?;
    let xs = sample.sorted();
    let anchor = xs[n - k - 1];
    if anchor <= 0.0 {
        return Err(Error::domain(format!(
            "Hill needs the top k + 1 order statistics positive, X_(n-k) = {anchor}"
        )));
    }
    let ln_anchor = anchor.ln();
    let acc: KahanSum = xs[n - k..].iter().map(|x| x.ln() - ln_anchor).collect();
    // Mathematically nonnegative; clamp the sign of a rounding-level residue.
    Ok((acc.value() / k as f64).max(0.0))
}

/// Hill estimates over a range of `k` with a pointwise 90% band.
#[derive(Debug, Clone, PartialEq)]
pub struct HillSeries {
    pub k_values: Vec<usize>,
    pub gamma_hat: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

impl HillSeries {
    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }
}

/// Hill plot for `k_min..=k_max`, computed with a running sum over the sorted
/// sample so the whole series is linear in `k_max`.
pub fn hill_series(sample: &Sample, k_min: usize, k_max: usize) -> Result<HillSeries> {
    let n = sample.len();
    if k_min >= k_max {
        return Err(Error::domain(format!(
            "hill_series needs k_min < k_max, got {k_min} and {k_max}"
        )));
    }
    check_k(n, k_min)?;
    check_k(n, k_max)?;
    let xs = sample.sorted();
    if xs[n - k_max - 1] <= 0.0 {
        return Err(Error::domain(format!(
            "Hill needs the top k + 1 order statistics positive, X_(n-{k_max}) = {}",
            xs[n - k_max - 1]
        )));
    }
    let len = k_max - k_min + 1;
    let mut out = HillSeries {
        k_values: Vec::with_capacity(len),
        gamma_hat: Vec::with_capacity(len),
        ci_low: Vec::with_capacity(len),
        ci_high: Vec::with_capacity(len),
    };
    let mut top = KahanSum::new();
    for k in 1..=k_max {
        top.add(xs[n - k].ln());
        if k < k_min {
            continue;
        }
        let g = (top.value() / k as f64 - xs[n - k - 1].ln()).max(0.0);
        let half = Z_90 / (k as f64).sqrt();
        out.k_values.push(k);
        out.gamma_hat.push(g);
        out.ci_low.push(g * (1.0 - half));
        out.ci_high.push(g * (1.0 + half));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_example() {
        let s = sample(&[1.0, 2.0, 4.0, 8.0]);
        let h = hill(&s, 2).unwrap();
        assert!((h - 1.5 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn constant_sample_is_zero() {
        let s = sample(&[3.0; 20]);
        assert_eq!(hill(&s, 5).unwrap(), 0.0);
        let hs = hill_series(&s, 2, 19).unwrap();
        assert!(hs.gamma_hat.iter().chain(&hs.ci_low).chain(&hs.ci_high).all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_k_and_nonpositive_data() {
        let s = sample(&[1.0, 2.0, 4.0, 8.0]);
        assert!(hill(&s, 1).is_err());
        assert!(hill(&s, 4).is_err());
        let s = sample(&[-1.0, 2.0, 4.0, 8.0]);
        assert!(matches!(hill(&s, 3), Err(Error::Domain(_))));
        assert!(hill(&s, 2).is_ok());
    }

    #[test]
    fn series_matches_pointwise_hill() {
        let s = sample(&(1..=50).map(|i| (i as f64).powf(1.3)).collect::<Vec<_>>());
        let hs = hill_series(&s, 2, 49).unwrap();
        assert_eq!(hs.len(), 48);
        for (j, &k) in hs.k_values.iter().enumerate() {
            assert!((hs.gamma_hat[j] - hill(&s, k).unwrap()).abs() < 1e-13);
            assert!(hs.ci_low[j] <= hs.gamma_hat[j] && hs.gamma_hat[j] <= hs.ci_high[j]);
        }
        let two = hill_series(&s, 10, 11).unwrap();
        assert_eq!(two.k_values, vec![10, 11]);
        assert!(hill_series(&s, 11, 11).is_err());
    }
}
