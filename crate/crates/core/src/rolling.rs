//! Moving-window tail estimation on a price history: log-losses, Hill index,
//! transition multipliers and extreme Lp-quantiles per window end.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

/// Calendar date used by price and loss series.
pub use chrono::NaiveDate as Date;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extreme_lp::{extrapolate, transition_extrapolate};
use crate::lp_quantile::{empirical_lp_quantile, Level, Sample};
use crate::output::fmt_opt;
use crate::tail_index::hill;
use crate::trelt::{ctrelt_limit_ell, empirical_ctrelt_value, OrderPair};

/// Dated positive prices with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::Validation(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "dates must be strictly increasing: {} follows {}",
                dates[i + 1],
                dates[i]
            )));
        }
        if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::domain(format!(
                "price on {} must be positive, got {}",
                dates[i], prices[i]
            )));
        }
        Ok(Self { dates, prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Every price multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dates.clone(), self.prices.iter().map(|p| p * factor).collect())
    }
}

/// Log-losses `-ln(P_t / P_{t-1})`, each dated by its later price.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl LossSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `len` losses.
    pub fn prefix(&self, len: usize) -> LossSeries {
        let len = len.min(self.len());
        LossSeries {
            dates: self.dates[..len].to_vec(),
            values: self.values[..len].to_vec(),
        }
    }
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

/// Reads `date,adjusted_close` CSV text. Rows with a missing price are
/// dropped; their count is returned alongside the series.
pub fn parse_price_csv<R: Read>(input: R) -> Result<(PriceSeries, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(di), Some(pi)) = (col("date"), col("adjusted_close")) else {
        return Err(Error::Parse {
            line: 1,
            msg: "header must contain `date` and `adjusted_close`".into(),
        });
    };
    let mut dates = Vec::new();
    let mut prices = Vec::new();
    let mut dropped = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date_field = rec.get(di).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|_| Error::Parse {
            line: line as usize,
            msg: format!("malformed date `{date_field}` (expected YYYY-MM-DD)"),
        })?;
        let price_field = rec.get(pi).unwrap_or("");
        if is_missing(price_field) {
            dropped += 1;
            continue;
        }
        let price: f64 = price_field.parse().map_err(|_| Error::Parse {
            line: line as usize,
            msg: format!("malformed price `{price_field}`"),
        })?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::Validation(format!(
                    "line {line}: date {date} does not follow {prev}; dates must be strictly increasing"
                )));
            }
        }
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Validation(format!(
                "line {line}: price must be positive, got {price}"
            )));
        }
        dates.push(date);
        prices.push(price);
    }
    Ok((PriceSeries::new(dates, prices)?, dropped))
}

/// Loads a price file, logging a warning for dropped rows.
pub fn load_price_csv(path: &Path) -> Result<PriceSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (series, dropped) = parse_price_csv(std::io::BufReader::new(file))?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with a missing price", path.display());
    }
    Ok(series)
}

pub fn log_losses(series: &PriceSeries) -> Result<LossSeries> {
    if series.len() < 2 {
        return Err(Error::domain("log-losses need at least two prices"));
    }
    let values = series
        .prices
        .windows(2)
        .map(|w| -(w[1] / w[0]).ln())
        .collect();
    Ok(LossSeries {
        dates: series.dates[1..].to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingConfig {
    pub window: usize,
    pub k: usize,
    pub pairs: Vec<OrderPair>,
    pub eps_prime: f64,
    /// Tail index the pairs are validated against.
    pub gamma_ref: f64,
}

impl RollingConfig {
    /// Window 1800, `k = 80`, pairs (2,1), (2.2,1.5), (2.4,2), `eps' = 0.005`,
    /// reference tail index 0.34.
    pub fn weekly_default() -> Result<Self> {
        Self::new(1800, 80, &[(2.0, 1.0), (2.2, 1.5), (2.4, 2.0)], 0.005, 0.34)
    }

    pub fn new(window: usize, k: usize, pairs: &[(f64, f64)], eps_prime: f64, gamma_ref: f64) -> Result<Self> {
        let pairs = pairs
            .iter()
            .map(|&(p, q)| OrderPair::new(p, q, gamma_ref))
            .collect::<Result<Vec<_>>>()?;
        let cfg = Self {
            window,
            k,
            pairs,
            eps_prime,
            gamma_ref,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn eps_n(&self) -> f64 {
        self.k as f64 / self.window as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k >= self.window {
            return Err(Error::domain(format!(
                "need 2 <= k < window, got k = {}, window = {}",
                self.k, self.window
            )));
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < self.eps_n()) {
            return Err(Error::domain(format!(
                "need 0 < eps_prime < k/window = {}, got {}",
                self.eps_n(),
                self.eps_prime
            )));
        }
        Ok(())
    }

    /// Distinct `p` orders in first-seen order (one BM column each).
    pub fn bm_orders(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for pr in &self.pairs {
            if !out.contains(&pr.p()) {
                out.push(pr.p());
            }
        }
        out
    }
}

/// Per-pair cells of one window; `None` marks a value the window's data
/// could not support (regime violation or degenerate tail).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairCells {
    pub pi_plugin: Option<f64>,
    pub pi_int: Option<f64>,
    pub pi_ext: Option<f64>,
    pub theta_extram1: Option<f64>,
    pub theta_extram2: Option<f64>,
    pub theta_extram3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingRow {
    pub date: NaiveDate,
    pub gamma_hat: Option<f64>,
    pub pairs: Vec<PairCells>,
    /// Aligned with [`RollingConfig::bm_orders`].
    pub theta_bm: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingResult {
    pub config: RollingConfig,
    pub rows: Vec<RollingRow>,
}

fn ok_or_missing(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_skippable() => Ok(None),
        Err(e) => Err(e),
    }
}

fn window_row(cfg: &RollingConfig, values: &[f64], date: NaiveDate) -> Result<RollingRow> {
    let sample = Sample::new(values.to_vec())?;
    let eps_n = cfg.eps_n();
    let eps_p = cfg.eps_prime;
    let level = Level::from_eps(eps_n)?;
    let gamma_hat = ok_or_missing(hill(&sample, cfg.k))?;
    let mut memo: Vec<(f64, Option<f64>)> = Vec::new();
    let mut lp = |p: f64| -> Result<Option<f64>> {
        if let Some((_, v)) = memo.iter().find(|(k, _)| *k == p) {
            return Ok(*v);
        }
        let v = ok_or_missing(empirical_lp_quantile(&sample, p, level))?;
        memo.push((p, v));
        Ok(v)
    };
    let mut pairs = Vec::with_capacity(cfg.pairs.len());
    for &pair in &cfg.pairs {
        let theta_q = lp(pair.q())?;
        let mut cells = PairCells::default();
        if let Some(t) = theta_q {
            cells.pi_int = ok_or_missing(empirical_ctrelt_value(&sample, pair, t))?;
        }
        if let Some(g) = gamma_hat {
            cells.pi_plugin = ok_or_missing(ctrelt_limit_ell(g, pair.p(), pair.q()))?;
            if let Some(t) = theta_q {
                if let Some(t_ext) = ok_or_missing(extrapolate(t, eps_n, eps_p, g))? {
                    cells.pi_ext = ok_or_missing(empirical_ctrelt_value(&sample, pair, t_ext))?;
                }
                let via = |c: Option<f64>| match c {
                    Some(c) => ok_or_missing(transition_extrapolate(t, c, eps_n, eps_p, g)),
                    None => Ok(None),
                };
                cells.theta_extram1 = via(cells.pi_int)?;
                cells.theta_extram2 = via(cells.pi_ext)?;
                cells.theta_extram3 = via(cells.pi_plugin)?;
            }
        }
        pairs.push(cells);
    }
    let mut theta_bm = Vec::new();
    for p in cfg.bm_orders() {
        theta_bm.push(match (lp(p)?, gamma_hat) {
            (Some(t), Some(g)) => ok_or_missing(extrapolate(t, eps_n, eps_p, g))?,
            _ => None,
        });
    }
    Ok(RollingRow {
        date,
        gamma_hat,
        pairs,
        theta_bm,
    })
}

/// One row per window end `t >= window`, using losses `t - window + 1 ..= t`.
/// Windows run on the current rayon pool; rows come out in date order.
pub fn rolling_estimates(losses: &LossSeries, cfg: &RollingConfig) -> Result<RollingResult> {
    cfg.validate()?;
    if losses.len() < cfg.window {
        return Err(Error::domain(format!(
            "series of {} losses is shorter than the window of {}",
            losses.len(),
            cfg.window
        )));
    }
    let ends: Vec<usize> = (cfg.window..=losses.len()).collect();
    let rows = ends
        .par_iter()
        .map(|&end| window_row(cfg, &losses.values[end - cfg.window..end], losses.dates[end - 1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingResult {
        config: cfg.clone(),
        rows,
    })
}

/// [`rolling_estimates`] on a dedicated pool of `workers` threads. Output is
/// identical for every worker count.
pub fn rolling_estimates_with_workers(
    losses: &LossSeries,
    cfg: &RollingConfig,
    workers: usize,
) -> Result<RollingResult> {
    if workers == 0 {
        return Err(Error::Validation("workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?
        .install(|| rolling_estimates(losses, cfg))
}

impl RollingResult {
    pub fn header(&self) -> Vec<String> {
        let tag = |p: f64, q: f64| format!("p{p}_q{q}");
        let mut h = vec!["date".to_string(), "gamma_hat".to_string()];
        for pr in &self.config.pairs {
            let t = tag(pr.p(), pr.q());
            h.push(format!("pi_plugin_{t}"));
            h.push(format!("pi_int_{t}"));
            h.push(format!("pi_ext_{t}"));
        }
        for p in self.config.bm_orders() {
            h.push(format!("theta_bm_p{p}"));
        }
        for pr in &self.config.pairs {
            let t = tag(pr.p(), pr.q());
            h.push(format!("theta_extram1_{t}"));
            h.push(format!("theta_extram2_{t}"));
            h.push(format!("theta_extram3_{t}"));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let err = |e: csv::Error| Error::Validation(format!("csv write failed: {e}"));
        w.write_record(self.header()).map_err(err)?;
        for r in &self.rows {
            let mut rec = vec![r.date.format("%Y-%m-%d").to_string(), fmt_opt(r.gamma_hat)];
            for c in &r.pairs {
                rec.extend([fmt_opt(c.pi_plugin), fmt_opt(c.pi_int), fmt_opt(c.pi_ext)]);
            }
            rec.extend(r.theta_bm.iter().map(|v| fmt_opt(*v)));
            for c in &r.pairs {
                rec.extend([
                    fmt_opt(c.theta_extram1),
                    fmt_opt(c.theta_extram2),
                    fmt_opt(c.theta_extram3),
                ]);
            }
            w.write_record(rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
