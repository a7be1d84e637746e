//! Reference heavy-tailed distributions: Pareto, Fréchet, Student-t and the
//! Koenker–Bassett law whose expectile and quantile curves coincide.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lp_quantile::Sample;
use crate::special::{ln_gamma, reg_inc_beta, reg_inc_beta_complement, PositiveReal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistKind {
    Pareto,
    Frechet,
    StudentT,
    KoenkerBassett,
}

impl DistKind {
    pub fn name(self) -> &'static str {
        match self {
            DistKind::Pareto => "pareto",
            DistKind::Frechet => "frechet",
            DistKind::StudentT => "student_t",
            DistKind::KoenkerBassett => "koenker_bassett",
        }
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pareto" => Ok(DistKind::Pareto),
            "frechet" | "fréchet" => Ok(DistKind::Frechet),
            "student_t" | "studentt" | "student" | "t" => Ok(DistKind::StudentT),
            "koenker_bassett" | "koenkerbassett" | "kb" => Ok(DistKind::KoenkerBassett),
            other => Err(Error::Validation(format!("unknown distribution '{other}'"))),
        }
    }
}

/// A heavy-tailed reference distribution indexed by its extreme value
/// index `gamma`. Student-t has `1/gamma` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTailDist {
    kind: DistKind,
    gamma: f64,
    /// Student-t log normalizing constant; unused otherwise.
    ln_norm: f64,
}

impl HeavyTailDist {
    pub fn new(kind: DistKind, gamma: f64) -> Result<Self> {
        if kind == DistKind::KoenkerBassett {
            return Ok(Self::koenker_bassett());
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!(
                "extreme value index must be positive, got {gamma}"
            )));
        }
        let ln_norm = if kind == DistKind::StudentT {
            let nu = 1.0 / gamma;
            ln_gamma(PositiveReal::new(0.5 * (nu + 1.0))?)
                - ln_gamma(PositiveReal::new(0.5 * nu)?)
                - 0.5 * (nu * PI).ln()
        } else {
            0.0
        };
        Ok(Self {
            kind,
            gamma,
            ln_norm,
        })
    }

    pub fn pareto(gamma: f64) -> Result<Self> {
        Self::new(DistKind::Pareto, gamma)
    }

    pub fn frechet(gamma: f64) -> Result<Self> {
        Self::new(DistKind::Frechet, gamma)
    }

    pub fn student_t(gamma: f64) -> Result<Self> {
        Self::new(DistKind::StudentT, gamma)
    }

    pub fn koenker_bassett() -> Self {
        Self {
            kind: DistKind::KoenkerBassett,
            gamma: 0.5,
            ln_norm: 0.0,
        }
    }

    pub fn kind(&self) -> DistKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lower end of the support (`-inf` for the symmetric laws).
    pub fn support_lower(&self) -> f64 {
        match self.kind {
            DistKind::Pareto => 1.0,
            DistKind::Frechet => 0.0,
            DistKind::StudentT | DistKind::KoenkerBassett => f64::NEG_INFINITY,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Pareto | DistKind::Frechet => 1.0 - self.survival(x),
            DistKind::StudentT | DistKind::KoenkerBassett => {
                if x >= 0.0 {
                    1.0 - self.survival(x)
                } else {
                    self.survival(-x)
                }
            }
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let g = self.gamma;
        match self.kind {
            DistKind::Pareto => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-1.0 / g)
                }
            }
            DistKind::Frechet => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-x.powf(-1.0 / g)).exp_m1()
                }
            }
            DistKind::StudentT => {
                if x < 0.0 {
                    return 1.0 - self.survival(-x);
                }
                if x.is_infinite() {
                    return 0.0;
                }
                let nu = 1.0 / g;
                let x2 = x * x;
                let z = nu / (nu + x2);
                let w = x2 / (nu + x2);
                let half = if z < w {
                    reg_inc_beta(z, 0.5 * nu, 0.5)
                } else {
                    reg_inc_beta_complement(w, 0.5, 0.5 * nu)
                };
                0.5 * half.expect("arguments are in range by construction")
            }
            DistKind::KoenkerBassett => {
                if x < 0.0 {
                    return 1.0 - self.survival(-x);
                }
                if x.is_infinite() {
                    return 0.0;
                }
                let r = (4.0 + x * x).sqrt();
                2.0 / ((r + x) * r)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let g = self.gamma;
        match self.kind {
            DistKind::Pareto => {
                if x < 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -g.ln() - (1.0 / g + 1.0) * x.ln()
                }
            }
            DistKind::Frechet => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let lx = x.ln();
                    -g.ln() - (1.0 / g + 1.0) * lx - (-lx / g).exp()
                }
            }
            DistKind::StudentT => {
                let nu = 1.0 / g;
                let ax = x.abs();
                let l = if ax > 1e150 {
                    g.ln() + 2.0 * ax.ln()
                } else {
                    (g * x * x).ln_1p()
                };
                self.ln_norm - 0.5 * (nu + 1.0) * l
            }
            DistKind::KoenkerBassett => {
                let ax = x.abs();
                let l = if ax > 1e150 {
                    2.0 * ax.ln()
                } else {
                    (4.0 + x * x).ln()
                };
                std::f64::consts::LN_2 - 1.5 * l
            }
        }
    }

    /// `F^{-1}(tau)` for `tau` in `(0, 1)`.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        check_open_unit(tau, "tau")?;
        Ok(match self.kind {
            DistKind::Pareto => (-self.gamma * (-tau).ln_1p()).exp(),
            DistKind::Frechet => (-tau.ln()).powf(-self.gamma),
            DistKind::StudentT | DistKind::KoenkerBassett => {
                if tau >= 0.5 {
                    self.upper_tail_quantile(1.0 - tau)?
                } else {
                    -self.upper_tail_quantile(tau)?
                }
            }
        })
    }

    /// `F^{-1}(1 - eps)`, accurate for tiny tail probabilities `eps`.
    pub fn upper_quantile(&self, eps: f64) -> Result<f64> {
        check_open_unit(eps, "eps")?;
        Ok(match self.kind {
            DistKind::Pareto => eps.powf(-self.gamma),
            DistKind::Frechet => (-(-eps).ln_1p()).powf(-self.gamma),
            DistKind::StudentT | DistKind::KoenkerBassett => {
                if eps <= 0.5 {
                    self.upper_tail_quantile(eps)?
                } else {
                    -self.upper_tail_quantile(1.0 - eps)?
                }
            }
        })
    }

    /// Symmetric laws only: the `x >= 0` with `S(x) = eps`, `eps <= 1/2`.
    fn upper_tail_quantile(&self, eps: f64) -> Result<f64> {
        if eps == 0.5 {
            return Ok(0.0);
        }
        match self.kind {
            DistKind::KoenkerBassett => Ok((1.0 - 2.0 * eps) / (eps * (1.0 - eps)).sqrt()),
            DistKind::StudentT => self.student_upper_quantile(eps),
            _ => unreachable!("only symmetric laws use the tail solver"),
        }
    }

    /// Bracketed Newton on `ln S(x) = ln eps`, starting from the power-tail
    /// approximation; steps leaving the bracket are replaced by bisection.
    fn student_upper_quantile(&self, eps: f64) -> Result<f64> {
        let nu = 1.0 / self.gamma;
        let f0 = self.ln_norm.exp();
        let ln_eps = eps.ln();
        let mut x = if eps > 0.25 {
            (0.5 - eps) / f0
        } else {
            // S(x) ~ C nu^{(nu-1)/2} x^{-nu}
            ((self.ln_norm + 0.5 * (nu - 1.0) * nu.ln() - ln_eps) / nu).exp()
        };
        let mut lo = 0.0;
        let mut hi = f64::INFINITY;
        for _ in 0..200 {
            let s = self.survival(x);
            let phi = s.ln() - ln_eps;
            if phi == 0.0 {
                return Ok(x);
            }
            if phi > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let step = phi * s / self.pdf(x);
            let mut next = x + step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
            }
            if (next - x).abs() <= 1e-15 * x.abs() || (hi.is_finite() && hi - lo <= 1e-15 * hi) {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::numeric(format!(
            "Student-t quantile did not converge for eps = {eps}"
        )))
    }

    /// `n` draws by inverse transform, `X = F^{-1}(1 - V)` with `V` uniform.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<Sample> {
        if n == 0 {
            return Err(Error::domain("sample size must be at least 1"));
        }
        let values = (0..n)
            .map(|_| self.upper_quantile(rng.next_open01()))
            .collect::<Result<Vec<_>>>()?;
        Sample::new(values)
    }
}

impl fmt::Display for HeavyTailDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.gamma)
    }
}

fn check_open_unit(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// A reproducible uniform stream: ChaCha8 keyed by `seed`, with `stream_id`
/// selecting one of 2^64 independent keystreams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    pub fn next_open01(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
