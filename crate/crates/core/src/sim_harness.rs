//! Seeded Monte Carlo comparison of the transition and extreme Lp-quantile
//! estimators against oracle truths.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::distributions::{DistKind, HeavyTailDist, RngStream};
use crate::error::{Error, Result};
use crate::extreme_lp::{extrapolate, transition_extrapolate};
use crate::lp_quantile::{empirical_lp_quantile, Level, Sample};
use crate::numeric::KahanSum;
use crate::oracle::{true_ctrelt, true_lp_quantile, QuadratureSpec};
use crate::output::{fmt_g17, fmt_opt};
use crate::tail_index::hill;
use crate::trelt::{ctrelt_limit_ell, empirical_ctrelt_value, OrderPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LimTrelt1,
    LimTrelt2,
    IntTrelt,
    ExtTrelt,
    Bm,
    ExtraM1,
    ExtraM2,
    ExtraM3,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::LimTrelt1,
        Method::LimTrelt2,
        Method::IntTrelt,
        Method::ExtTrelt,
        Method::Bm,
        Method::ExtraM1,
        Method::ExtraM2,
        Method::ExtraM3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LimTrelt1 => "LimTRELT-I",
            Method::LimTrelt2 => "LimTRELT-II",
            Method::IntTrelt => "IntTRELT",
            Method::ExtTrelt => "ExtTRELT",
            Method::Bm => "BM",
            Method::ExtraM1 => "ExtraM-I",
            Method::ExtraM2 => "ExtraM-II",
            Method::ExtraM3 => "ExtraM-III",
        }
    }

    /// What the method estimates, and therefore which oracle value is its truth.
    pub fn target(self) -> Target {
        match self {
            Method::LimTrelt1 | Method::IntTrelt => Target::TransitionIntermediate,
            Method::LimTrelt2 | Method::ExtTrelt => Target::TransitionExtreme,
            _ => Target::ExtremeLpQuantile,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        Method::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase().replace('-', "") == key)
            .ok_or_else(|| Error::Validation(format!("unknown method '{}'", s.trim())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// `Pi(eps_n)`
    TransitionIntermediate,
    /// `Pi(eps')`
    TransitionExtreme,
    /// `theta_p(1 - eps')`
    ExtremeLpQuantile,
}

/// One simulation cell family: a law, sample size and tuning, run over
/// several order pairs and methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub dist: HeavyTailDist,
    pub pairs: Vec<OrderPair>,
    pub n: usize,
    pub replications: usize,
    pub k: usize,
    pub eps_prime: f64,
    pub tau0: f64,
    pub base_seed: u64,
    pub methods: Vec<Method>,
}

impl ExperimentConfig {
    /// 0 for laws bounded below, 1/2 for the symmetric ones.
    pub fn default_tau0(kind: DistKind) -> f64 {
        match kind {
            DistKind::Pareto | DistKind::Frechet => 0.0,
            DistKind::StudentT | DistKind::KoenkerBassett => 0.5,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.dist.gamma()
    }

    pub fn eps_n(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Validation("replications must be at least 1".into()));
        }
        if self.k < 2 || self.k >= self.n {
            return Err(Error::Validation(format!(
                "need 2 <= k < n, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if !(0.0..1.0).contains(&self.tau0) {
            return Err(Error::Validation(format!("tau0 must lie in [0, 1), got {}", self.tau0)));
        }
        let eps_n = self.eps_n();
        if eps_n >= 1.0 - self.tau0 {
            return Err(Error::Validation(format!(
                "eps_n = k/n = {eps_n} must be below 1 - tau0 = {}",
                1.0 - self.tau0
            )));
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < eps_n) {
            return Err(Error::Validation(format!(
                "need 0 < eps_prime < eps_n, got eps_prime = {}, eps_n = {eps_n}",
                self.eps_prime
            )));
        }
        if self.tau0 == 0.0 && !self.dist.support_lower().is_finite() {
            return Err(Error::Validation(format!(
                "tau0 = 0 needs a law bounded below; {} needs tau0 > 0",
                self.dist.kind()
            )));
        }
        Ok(())
    }
}

/// Mean squared relative error over the finite estimates.
pub fn msre(estimates: &[f64], truth: f64) -> Result<f64> {
    if truth == 0.0 || !truth.is_finite() {
        return Err(Error::domain(format!("truth must be finite and nonzero, got {truth}")));
    }
    let mut acc = KahanSum::new();
    let mut used = 0usize;
    for &e in estimates.iter().filter(|e| e.is_finite()) {
        let r = e / truth - 1.0;
        acc.add(r * r);
        used += 1;
    }
    if used == 0 {
        return Err(Error::domain("no finite estimates"));
    }
    Ok(acc.value() / used as f64)
}

/// Aggregated result for one (experiment, pair, method).
#[derive(Debug, Clone, PartialEq)]
pub struct MsreCell {
    pub experiment: String,
    pub dist: DistKind,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub k: usize,
    pub eps_n: f64,
    pub eps_prime: f64,
    pub method: Method,
    pub truth: f64,
    /// `None` when every replication was skipped.
    pub msre: Option<f64>,
    pub skip_count: usize,
    /// Per replication, in replication order; `None` for skipped ones.
    pub relative_errors: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MsreTable {
    pub cells: Vec<MsreCell>,
}

impl MsreTable {
    pub fn extend(&mut self, other: MsreTable) {
        self.cells.extend(other.cells);
    }

    pub fn find(&self, dist: DistKind, n: usize, p: f64, q: f64, method: Method) -> Option<&MsreCell> {
        self.cells
            .iter()
            .find(|c| c.dist == dist && c.n == n && c.p == p && c.q == q && c.method == method)
    }

    /// Cells whose MSRE grew markedly from a smaller to a larger sample size.
    /// The decrease is a statistical tendency, so this only produces warnings.
    pub fn sample_size_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.cells {
            for b in &self.cells {
                let same = a.dist == b.dist
                    && a.gamma == b.gamma
                    && a.p == b.p
                    && a.q == b.q
                    && a.method == b.method;
                if same && a.n < b.n {
                    if let (Some(ma), Some(mb)) = (a.msre, b.msre) {
                        if mb > 1.5 * ma {
                            out.push(format!(
                                "{} {} gamma={} ({}, {}): MSRE rose from {ma:.5} (n={}) to {mb:.5} (n={})",
                                a.method, a.dist, a.gamma, a.p, a.q, a.n, b.n
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn write_msre_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        w.write_record([
            "experiment",
            "dist",
            "gamma",
            "p",
            "q",
            "n",
            "k",
            "eps_n",
            "eps_prime",
            "method",
            "truth",
            "msre",
            "replications",
            "skip_count",
        ])
        .map_err(io)?;
        for c in &self.cells {
            w.write_record([
                c.experiment.clone(),
                c.dist.to_string(),
                fmt_g17(c.gamma),
                fmt_g17(c.p),
                fmt_g17(c.q),
                c.n.to_string(),
                c.k.to_string(),
                fmt_g17(c.eps_n),
                fmt_g17(c.eps_prime),
                c.method.to_string(),
                fmt_g17(c.truth),
                fmt_opt(c.msre),
                c.relative_errors.len().to_string(),
                c.skip_count.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn write_boxplot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        w.write_record(["dist", "gamma", "p", "q", "n", "method", "replication", "relative_error"])
            .map_err(io)?;
        for c in &self.cells {
            for (i, r) in c.relative_errors.iter().enumerate() {
                w.write_record([
                    c.dist.to_string(),
                    fmt_g17(c.gamma),
                    fmt_g17(c.p),
                    fmt_g17(c.q),
                    c.n.to_string(),
                    c.method.to_string(),
                    i.to_string(),
                    fmt_opt(*r),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Validation(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_msre_csv(table: &MsreTable, path: &Path) -> Result<()> {
    table.write_msre_csv(create(path)?)
}

/// Long-format per-replication relative errors for external boxplots.
pub fn export_boxplot_data(table: &MsreTable, path: &Path) -> Result<()> {
    table.write_boxplot_csv(create(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TruthKey {
    kind: DistKind,
    gamma: u64,
    target: Target,
    p: u64,
    q: u64,
    eps: u64,
    tau0: u64,
}

/// Runs experiments on a fixed worker pool and caches oracle truths across them.
pub struct Harness {
    pool: rayon::ThreadPool,
    quad: QuadratureSpec,
    truths: Mutex<HashMap<TruthKey, f64>>,
}

impl Harness {
    pub fn new(workers: usize) -> Result<Self> {
        Self::with_quadrature(workers, QuadratureSpec::default())
    }

    pub fn with_quadrature(workers: usize, quad: QuadratureSpec) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Validation("workers must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            pool,
            quad,
            truths: Mutex::new(HashMap::new()),
        })
    }

    fn truth(&self, cfg: &ExperimentConfig, pair: OrderPair, target: Target) -> Result<f64> {
        let eps = match target {
            Target::TransitionIntermediate => cfg.eps_n(),
            _ => cfg.eps_prime,
        };
        let key = TruthKey {
            kind: cfg.dist.kind(),
            gamma: cfg.gamma().to_bits(),
            target,
            p: pair.p().to_bits(),
            q: if target == Target::ExtremeLpQuantile { 0 } else { pair.q().to_bits() },
            eps: eps.to_bits(),
            tau0: cfg.tau0.to_bits(),
        };
        if let Some(v) = self.truths.lock().expect("truth cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = match target {
            Target::ExtremeLpQuantile => {
                true_lp_quantile(&cfg.dist, pair.p(), Level::from_eps(eps)?, &self.quad)?
            }
            _ => true_ctrelt(&cfg.dist, pair, eps, cfg.tau0, &self.quad)?,
        };
        self.truths.lock().expect("truth cache poisoned").insert(key, v);
        Ok(v)
    }

    /// Runs every replication of `cfg` and aggregates one cell per
    /// (pair, method). Bitwise deterministic for any worker count.
    pub fn run(&self, cfg: &ExperimentConfig) -> Result<MsreTable> {
        cfg.validate()?;
        let mut truths = Vec::with_capacity(cfg.pairs.len());
        for &pair in &cfg.pairs {
            let row = cfg
                .methods
                .iter()
                .map(|m| {
                    self.truth(cfg, pair, m.target()).map_err(|e| match e {
                        Error::Numeric(msg) | Error::Existence(msg) => Error::Numeric(format!(
                            "oracle truth for {m} on {} gamma={} pair {pair}: {msg}",
                            cfg.dist.kind(),
                            cfg.gamma()
                        )),
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            truths.push(row);
        }
        let reps: Vec<Result<Vec<Vec<Option<f64>>>>> = self.pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|i| replicate(cfg, i as u64))
                .collect()
        });
        let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;

        let mut table = MsreTable::default();
        for (pi, &pair) in cfg.pairs.iter().enumerate() {
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let truth = truths[pi][mi];
                let rel: Vec<Option<f64>> = reps
                    .iter()
                    .map(|r| r[pi][mi].map(|e| e / truth - 1.0))
                    .collect();
                let used: Vec<f64> = reps.iter().filter_map(|r| r[pi][mi]).collect();
                let skip_count = rel.len() - used.len();
                let m = if used.is_empty() { None } else { Some(msre(&used, truth)?) };
                table.cells.push(MsreCell {
                    experiment: cfg.name.clone(),
                    dist: cfg.dist.kind(),
                    gamma: cfg.gamma(),
                    p: pair.p(),
                    q: pair.q(),
                    n: cfg.n,
                    k: cfg.k,
                    eps_n: cfg.eps_n(),
                    eps_prime: cfg.eps_prime,
                    method,
                    truth,
                    msre: m,
                    skip_count,
                    relative_errors: rel,
                });
            }
        }
        Ok(table)
    }

    pub fn run_all(&self, cfgs: &[ExperimentConfig]) -> Result<MsreTable> {
        let mut table = MsreTable::default();
        for cfg in cfgs {
            table.extend(self.run(cfg)?);
        }
        Ok(table)
    }
}

/// Runs one experiment on `workers` threads with default quadrature.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<MsreTable> {
    Harness::new(workers)?.run(cfg)
}

/// Maps a per-replication failure to a skip, keeping real faults fatal.
fn skip_or<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_skippable() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Lazily computed intermediate Lp-quantiles keyed by order.
struct IntermediateLp<'a> {
    sample: &'a Sample,
    level: Level,
    memo: Vec<(f64, Option<f64>)>,
}

impl IntermediateLp<'_> {
    fn get(&mut self, p: f64) -> Result<Option<f64>> {
        if let Some((_, v)) = self.memo.iter().find(|(k, _)| *k == p) {
            return Ok(*v);
        }
        let v = skip_or(empirical_lp_quantile(self.sample, p, self.level))?;
        self.memo.push((p, v));
        Ok(v)
    }
}

/// Estimates for one replication, indexed `[pair][method]`.
fn replicate(cfg: &ExperimentConfig, index: u64) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rng = RngStream::new(cfg.base_seed, index);
    let sample = cfg.dist.sample(cfg.n, &mut rng)?;
    let eps_n = cfg.eps_n();
    let eps_p = cfg.eps_prime;
    let empty = || vec![vec![None; cfg.methods.len()]; cfg.pairs.len()];
    let Some(gamma_hat) = skip_or(hill(&sample, cfg.k))? else {
        return Ok(empty());
    };
    let mut lp = IntermediateLp {
        sample: &sample,
        level: Level::from_eps(eps_n)?,
        memo: Vec::new(),
    };
    let mut out = Vec::with_capacity(cfg.pairs.len());
    for &pair in &cfg.pairs {
        let plug = skip_or(ctrelt_limit_ell(gamma_hat, pair.p(), pair.q()))?;
        let theta_q = lp.get(pair.q())?;
        let mut int_c = None;
        let mut ext_c = None;
        let mut need_int = false;
        let mut need_ext = false;
        for m in &cfg.methods {
            need_int |= matches!(m, Method::IntTrelt | Method::ExtraM1);
            need_ext |= matches!(m, Method::ExtTrelt | Method::ExtraM2);
        }
        if let Some(t) = theta_q {
            if need_int {
                int_c = skip_or(empirical_ctrelt_value(&sample, pair, t))?;
            }
            if need_ext {
                if let Some(t_ext) = skip_or(extrapolate(t, eps_n, eps_p, gamma_hat))? {
                    ext_c = skip_or(empirical_ctrelt_value(&sample, pair, t_ext))?;
                }
            }
        }
        let via = |c: Option<f64>| -> Result<Option<f64>> {
            match (theta_q, c) {
                (Some(t), Some(c)) => skip_or(transition_extrapolate(t, c, eps_n, eps_p, gamma_hat)),
                _ => Ok(None),
            }
        };
        let mut row = Vec::with_capacity(cfg.methods.len());
        for &m in &cfg.methods {
            let est = match m {
                Method::LimTrelt1 | Method::LimTrelt2 => plug,
                Method::IntTrelt => int_c,
                Method::ExtTrelt => ext_c,
                Method::Bm => match lp.get(pair.p())? {
                    Some(t) => skip_or(extrapolate(t, eps_n, eps_p, gamma_hat))?,
                    None => None,
                },
                Method::ExtraM1 => via(int_c)?,
                Method::ExtraM2 => via(ext_c)?,
                Method::ExtraM3 => via(plug)?,
            };
            row.push(est);
        }
        out.push(row);
    }
    Ok(out)
}
