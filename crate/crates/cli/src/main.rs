use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trelt::config::{load_config, parse_real};
use trelt::distributions::{DistKind, HeavyTailDist};
use trelt::error::{Error, ErrorClass, Result};
use trelt::extreme_lp::{bm_estimator, extram, qua_estimator, ExtraMVariant};
use trelt::lp_quantile::{empirical_lp_quantile, Level, Sample};
use trelt::oracle::{true_ctrelt, true_dual_ctrelt, true_lp_quantile, QuadratureSpec};
use trelt::output::fmt_g17;
use trelt::rolling::{log_losses, parse_price_csv, rolling_estimates_with_workers, RollingConfig};
use trelt::sim_harness::{export_boxplot_data, write_msre_csv, ExperimentConfig, Harness};
use trelt::tail_index::{hill, hill_series};
use trelt::trelt::{extreme_ctrelt, intermediate_ctrelt, plugin_ctrelt, OrderPair};

#[derive(Parser, Debug)]
#[command(name = "trelt", version, about = "Lp-quantiles, tail transition multipliers and extreme extrapolation")]
struct Cli {
    /// Base seed; overrides the config file's `seed` for `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for `simulate` and `rolling`.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Empirical Lp-quantile, or an extreme Lp-quantile when --eps-prime is set.
    Estimate {
        /// One value per line; a non-numeric first line is taken as a header.
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        tau: Option<f64>,
        /// Order of the intermediate Lp-quantile used by the ExtraM methods.
        #[arg(long)]
        q: Option<f64>,
        /// Intermediate tail level; defaults to k/n, then 1 - tau.
        #[arg(long)]
        eps_n: Option<f64>,
        #[arg(long)]
        eps_prime: Option<f64>,
        /// Top order statistics for the Hill estimate; defaults to floor(n * eps_n).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = ExtremeChoice::Bm)]
        method: ExtremeChoice,
    },
    /// Hill estimates with 90% bands over a range of k, as CSV.
    Hill {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        /// Defaults to n - 1.
        #[arg(long)]
        k_max: Option<usize>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Plug-in, intermediate and extreme transition multipliers.
    Trelt {
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.005)]
        eps_prime: f64,
    },
    /// Exact Lp-quantiles and multipliers of a reference law over a level grid.
    Oracle {
        #[arg(long)]
        dist: DistKind,
        /// Tail index; fractions such as 1/3 are accepted. Ignored for koenker_bassett.
        #[arg(long, value_parser = real_arg)]
        gamma: Option<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Comma-separated tail levels.
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.01, 0.005, 0.001])]
        eps: Vec<f64>,
        /// Lower end of the level search; defaults to 0 for laws bounded below, 1/2 otherwise.
        #[arg(long)]
        tau0: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation config; writes {stem}_msre.csv and {stem}_boxplot.csv.
    Simulate {
        config: PathBuf,
        /// Override the replication count of every experiment.
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Moving-window estimates on a `date,adjusted_close` price file.
    Rolling {
        input: PathBuf,
        #[arg(long, default_value_t = 1800)]
        window: usize,
        #[arg(long, default_value_t = 80)]
        k: usize,
        /// Order pairs written p:q, comma-separated.
        #[arg(long, default_value = "2:1,2.2:1.5,2.4:2")]
        pairs: String,
        #[arg(long, default_value_t = 0.005)]
        eps_prime: f64,
        /// Tail index the pairs are validated against.
        #[arg(long, default_value_t = 0.34)]
        gamma_ref: f64,
        /// Defaults to {out-dir}/rolling.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ExtremeChoice {
    Bm,
    Qua,
    Extram1,
    Extram2,
    Extram3,
}

fn real_arg(s: &str) -> std::result::Result<f64, String> {
    parse_real(s).ok_or_else(|| format!("`{s}` is not a number"))
}

fn read_values(path: &Path) -> Result<Sample> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    let mut values = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::Io { path: path.into(), source: e })?;
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("`{field}` is not a number"),
                })
            }
        }
    }
    Sample::new(values)
}

fn output_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::Io { path: p.into(), source: e })?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_err(e: std::io::Error) -> Error {
    Error::Io { path: "<output>".into(), source: e }
}

fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    p: f64,
    tau: Option<f64>,
    q: Option<f64>,
    eps_n: Option<f64>,
    eps_prime: Option<f64>,
    k: Option<usize>,
    method: ExtremeChoice,
) -> Result<f64> {
    let sample = read_values(input)?;
    let n = sample.len();
    let Some(eps_prime) = eps_prime else {
        let tau = tau.ok_or_else(|| validation("--tau is required without --eps-prime"))?;
        return empirical_lp_quantile(&sample, p, Level::from_tau(tau)?);
    };
    let eps_n = match (eps_n, k, tau) {
        (Some(e), _, _) => e,
        (None, Some(k), _) => k as f64 / n as f64,
        (None, None, Some(t)) => 1.0 - t,
        _ => return Err(validation("extreme estimation needs one of --eps-n, --k or --tau")),
    };
    if !(eps_n > 0.0 && eps_n < 1.0) {
        return Err(validation(format!("eps_n must lie in (0, 1), got {eps_n}")));
    }
    let k = k.unwrap_or((n as f64 * eps_n).floor() as usize);
    let gamma_hat = hill(&sample, k)?;
    let pair = |q: Option<f64>| -> Result<OrderPair> {
        let q = q.ok_or_else(|| validation("the ExtraM methods need --q"))?;
        OrderPair::unchecked(p, q, gamma_hat)
    };
    let est = match method {
        ExtremeChoice::Bm => bm_estimator(&sample, p, eps_n, eps_prime, gamma_hat)?,
        ExtremeChoice::Qua => qua_estimator(&sample, p, eps_n, eps_prime, gamma_hat)?,
        ExtremeChoice::Extram1 => extram(&sample, pair(q)?, eps_n, eps_prime, gamma_hat, ExtraMVariant::I)?,
        ExtremeChoice::Extram2 => extram(&sample, pair(q)?, eps_n, eps_prime, gamma_hat, ExtraMVariant::II)?,
        ExtremeChoice::Extram3 => extram(&sample, pair(q)?, eps_n, eps_prime, gamma_hat, ExtraMVariant::III)?,
    };
    Ok(est.value)
}

fn run(cli: Cli) -> Result<()> {
    if cli.workers == 0 {
        return Err(validation("--workers must be at least 1"));
    }
    match cli.command {
        Command::Estimate { input, p, tau, q, eps_n, eps_prime, k, method } => {
            let v = estimate(&input, p, tau, q, eps_n, eps_prime, k, method)?;
            println!("{}", fmt_g17(v));
        }
        Command::Hill { input, k_min, k_max, output } => {
            let sample = read_values(&input)?;
            let k_max = k_max.unwrap_or(sample.len().saturating_sub(1));
            let s = hill_series(&sample, k_min, k_max)?;
            let mut w = output_sink(output.as_deref())?;
            writeln!(w, "k,gamma_hat,ci_low,ci_high").map_err(write_err)?;
            for i in 0..s.len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    s.k_values[i],
                    fmt_g17(s.gamma_hat[i]),
                    fmt_g17(s.ci_low[i]),
                    fmt_g17(s.ci_high[i])
                )
                .map_err(write_err)?;
            }
            w.flush().map_err(write_err)?;
        }
        Command::Trelt { input, p, q, k, eps_prime } => {
            let sample = read_values(&input)?;
            let eps_n = k as f64 / sample.len() as f64;
            let gamma_hat = hill(&sample, k)?;
            let pair = OrderPair::unchecked(p, q, gamma_hat)?;
            let plugin = plugin_ctrelt(gamma_hat, pair)?;
            let int = intermediate_ctrelt(&sample, pair, eps_n)?;
            let ext = extreme_ctrelt(&sample, pair, eps_n, eps_prime, gamma_hat)?;
            println!("method,value");
            println!("gamma_hat,{}", fmt_g17(gamma_hat));
            println!("plugin,{}", fmt_g17(plugin.value));
            println!("intermediate,{}", fmt_g17(int.value));
            println!("extreme,{}", fmt_g17(ext.value));
        }
        Command::Oracle { dist, gamma, p, q, eps, tau0, output } => {
            let law = match dist {
                DistKind::KoenkerBassett => HeavyTailDist::koenker_bassett(),
                kind => HeavyTailDist::new(kind, gamma.ok_or_else(|| validation("--gamma is required"))?)?,
            };
            let pair = OrderPair::moment(p, q, law.gamma())?;
            let tau0 = tau0.unwrap_or(ExperimentConfig::default_tau0(dist));
            let quad = QuadratureSpec::default();
            let mut w = output_sink(output.as_deref())?;
            writeln!(w, "eps,theta_p,theta_q,ctrelt,dual_ctrelt").map_err(write_err)?;
            for e in eps {
                let lvl = Level::from_eps(e)?;
                let tp = true_lp_quantile(&law, p, lvl, &quad)?;
                let tq = true_lp_quantile(&law, q, lvl, &quad)?;
                let big = true_ctrelt(&law, pair, e, tau0, &quad)?;
                let small = true_dual_ctrelt(&law, pair, e, &quad)?;
                writeln!(w, "{},{},{},{},{}", fmt_g17(e), fmt_g17(tp), fmt_g17(tq), fmt_g17(big), fmt_g17(small))
                    .map_err(write_err)?;
            }
            w.flush().map_err(write_err)?;
        }
        Command::Simulate { config, replications } => {
            let mut cfgs = load_config(&config)?;
            for c in &mut cfgs {
                if let Some(s) = cli.seed {
                    c.base_seed = s;
                }
                if let Some(r) = replications {
                    c.replications = r;
                }
                c.validate()?;
            }
            let harness = Harness::new(cli.workers)?;
            let mut table = trelt::sim_harness::MsreTable::default();
            for (i, c) in cfgs.iter().enumerate() {
                eprintln!("[{}/{}] {}: {} replications", i + 1, cfgs.len(), c.name, c.replications);
                table.extend(harness.run(c)?);
            }
            for w in table.sample_size_warnings() {
                eprintln!("warning: {w}");
            }
            let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
            std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::Io { path: cli.out_dir.clone(), source: e })?;
            write_msre_csv(&table, &cli.out_dir.join(format!("{stem}_msre.csv")))?;
            export_boxplot_data(&table, &cli.out_dir.join(format!("{stem}_boxplot.csv")))?;
        }
        Command::Rolling { input, window, k, pairs, eps_prime, gamma_ref, output } => {
            let pairs = pairs
                .split(',')
                .map(|item| {
                    let (p, q) = item
                        .split_once(':')
                        .ok_or_else(|| validation(format!("pair `{}` must be written p:q", item.trim())))?;
                    match (parse_real(p), parse_real(q)) {
                        (Some(p), Some(q)) => Ok((p, q)),
                        _ => Err(validation(format!("pair `{}` is not numeric", item.trim()))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = RollingConfig::new(window, k, &pairs, eps_prime, gamma_ref)?;
            let file = std::fs::File::open(&input).map_err(|e| Error::Io { path: input.clone(), source: e })?;
            let (prices, dropped) = parse_price_csv(std::io::BufReader::new(file))?;
            if dropped > 0 {
                eprintln!("warning: dropped {dropped} rows with a missing price");
            }
            let losses = log_losses(&prices)?;
            let result = rolling_estimates_with_workers(&losses, &cfg, cli.workers)?;
            let missing = result
                .rows
                .iter()
                .filter(|r| r.gamma_hat.is_none() || r.pairs.iter().any(|c| c.pi_ext.is_none() || c.theta_extram3.is_none()))
                .count();
            if missing > 0 {
                eprintln!("warning: {missing} windows have missing cells");
            }
            let path = match output {
                Some(p) => p,
                None => {
                    std::fs::create_dir_all(&cli.out_dir)
                        .map_err(|e| Error::Io { path: cli.out_dir.clone(), source: e })?;
                    cli.out_dir.join("rolling.csv")
                }
            };
            result.write_csv_file(&path)?;
        }
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[E_USAGE]: {} (see --help)", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            match e.class() {
                ErrorClass::Validation => ExitCode::from(1),
                ErrorClass::Numeric => ExitCode::from(2),
            }
        }
    }
}
