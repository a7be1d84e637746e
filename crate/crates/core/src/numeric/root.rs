//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Stopping rule on the bracket half-width: `max(abs, rel * |x|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, max_iter: usize) -> Self {
        Self { abs, rel, max_iter }
    }
}

/// Brent's method on `[a, b]` with precomputed endpoint values.
///
/// Non-finite function values are tolerated as long as their sign is
/// meaningful: interpolation is skipped and the step falls back to
/// bisection. The function must change sign over the bracket.
pub fn brent_with_values<F>(
    mut f: F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    tol: Tolerance,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::numeric(format!(
            "NaN at bracket endpoints [{a}, {b}]"
        )));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numeric(format!(
            "no sign change on [{a}, {b}]: f = ({fa}, {fb})"
        )));
    }

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs.max(tol.rel * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        let finite = fa.is_finite() && fb.is_finite() && fc.is_finite();
        if finite && e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::numeric(format!("NaN encountered at x = {b}")));
        }
    }
    Err(Error::numeric(format!(
        "root finder did not converge in {} iterations; final bracket [{}, {}]",
        tol.max_iter,
        b.min(c),
        b.max(c)
    )))
}

pub fn brent<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let fa = f(a);
    let fb = f(b);
    brent_with_values(f, a, b, fa, fb, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT: Tolerance = Tolerance {
        abs: 1e-14,
        rel: 1e-14,
        max_iter: 200,
    };

    #[test]
    fn finds_sqrt_two() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, TIGHT).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_root_is_returned() {
        let r = brent(|x| x - 1.0, 1.0, 3.0, TIGHT).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn rejects_same_sign() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, TIGHT).is_err());
    }

    #[test]
    fn survives_infinite_endpoint() {
        let r = brent(
            |x| if x <= 0.0 { f64::INFINITY } else { 1.0 - x.ln().exp() * 2.0 },
            0.0,
            1.0,
            TIGHT,
        )
        .unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steep_function() {
        let r = brent(|x| (x - 0.3).powi(3) * 1e6, -10.0, 10.0, TIGHT).unwrap();
        assert!((r - 0.3).abs() < 1e-4);
    }
}
