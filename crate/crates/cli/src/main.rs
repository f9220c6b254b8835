use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use lifecat_cli::commands::fit::read_fit_report;
use lifecat_cli::commands::*;
use lifecat_cli::report::OutDir;
use lifecat_cli::{CliError, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "lifecat",
    version,
    about = "Extreme-value fitting and catastrophe reinsurance pricing for accidental deaths"
)]
struct Cli {
    /// Master seed; overrides `run.seed` of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides `run.workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for reports and CSV files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON run configuration (price, simulate).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Window {
    /// First day of the observation window (YYYY-MM-DD).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last day of the observation window (YYYY-MM-DD).
    #[arg(long)]
    end: Option<NaiveDate>,
}

impl Window {
    fn get(&self) -> Result<Option<(NaiveDate, NaiveDate)>> {
        match (self.start, self.end) {
            (Some(s), Some(e)) => Ok(Some((s, e))),
            (None, None) => Ok(None),
            _ => Err(CliError::Invalid(
                "--start and --end must be given together".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the GPD severity and Poisson frequency of threshold exceedances.
    Fit {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Separate catalog for the exceedance rate.
        #[arg(long)]
        frequency_catalog: Option<PathBuf>,
        #[command(flatten)]
        window: Window,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Threshold-selection and homogeneity diagnostics.
    Diagnose {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[command(flatten)]
        window: Window,
        /// Comma-separated thresholds for the mean-excess and stability scans.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.05)]
        significance: f64,
    },
    /// Return levels, VaR and expected shortfall from a fit or given parameters.
    Risk {
        /// `fit.json` written by `fit`.
        #[arg(long, conflicts_with_all = ["xi", "beta", "rate", "threshold"])]
        fit: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Exceedances per year.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = risk::DEFAULT_PERIODS)]
        periods: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = risk::DEFAULT_LEVELS)]
        levels: Vec<f64>,
        /// Confidence level of the return-level intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Simulate the portfolio and price every configured contract.
    Price {
        /// Overrides `run.paths`.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Dump simulated paths and accidents.
    Simulate {
        /// Overrides `run.paths`.
        #[arg(long)]
        paths: Option<usize>,
        /// Also write every claim.
        #[arg(long)]
        claims: bool,
    },
}

fn load_config(cli: &Cli, paths: Option<usize>) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.run.seed = s;
    }
    if let Some(w) = cli.workers {
        config.run.workers = w;
    }
    if let Some(n) = paths {
        config.run.paths = n;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let out = OutDir::new(&cli.out_dir)?;
    match &cli.command {
        Command::Fit {
            catalog,
            threshold,
            frequency_catalog,
            window,
            level,
        } => {
            let args = FitArgs {
                catalog: catalog.clone(),
                threshold: *threshold,
                frequency_catalog: frequency_catalog.clone(),
                window: window.get()?,
                frequency_window: None,
                level: *level,
            };
            let r = cmd_fit(&args, Some(&out))?;
            let s = &r.severity;
            println!("exceedances  {} over u = {}", s.exceedances, r.threshold);
            println!(
                "xi           {:.4} (se {})",
                s.xi.estimate,
                fmt_opt(s.xi.std_error)
            );
            println!(
                "beta         {:.4} (se {})",
                s.beta.estimate,
                fmt_opt(s.beta.std_error)
            );
            println!(
                "rate         {:.4} per year [{:.4}, {:.4}]",
                r.frequency.rate, r.frequency.interval.lower, r.frequency.interval.upper
            );
            println!("loglik       {:.4}", r.marked_process_loglik);
        }
        Command::Diagnose {
            catalog,
            threshold,
            window,
            grid,
            significance,
        } => {
            let args = DiagnoseArgs {
                catalog: catalog.clone(),
                threshold: *threshold,
                window: window.get()?,
                grid: grid.clone(),
                significance: *significance,
            };
            let r = cmd_diagnose(&args, Some(&out))?;
            println!(
                "K-S          D = {:.4}, p = {:.4}",
                r.ks.statistic, r.ks.p_value
            );
            for t in &r.trends {
                match &t.test {
                    Some(lr) => println!(
                        "{} vs M0     LR = {:.4}, p = {:.4}",
                        t.model, lr.statistic, lr.p_value
                    ),
                    None => println!(
                        "{} vs M0     failed: {}",
                        t.model,
                        t.error.as_deref().unwrap_or("")
                    ),
                }
            }
        }
        Command::Risk {
            fit,
            threshold,
            xi,
            beta,
            rate,
            periods,
            levels,
            level,
        } => {
            let input = match (fit, threshold, xi, beta, rate) {
                (Some(p), ..) => RiskInput::Fit(Box::new(read_fit_report(p)?)),
                (None, Some(u), Some(x), Some(b), Some(l)) => RiskInput::Params {
                    threshold: *u,
                    xi: *x,
                    beta: *b,
                    rate: *l,
                },
                _ => {
                    return Err(CliError::Invalid(
                        "give --fit, or all of --threshold, --xi, --beta and --rate".into(),
                    ))
                }
            };
            let args = RiskArgs {
                periods: periods.clone(),
                levels: levels.clone(),
                ci_level: *level,
            };
            let r = cmd_risk(&input, &args, Some(&out))?;
            println!("{:>8} {:>12} {:>8}", "t", "level", "rounded");
            for x in &r.return_levels {
                println!("{:>8} {:>12.2} {:>8}", x.period, x.estimate, x.rounded);
            }
            println!("{:>8} {:>12} {:>12}", "alpha", "VaR", "ES");
            for m in &r.measures {
                println!("{:>8} {:>12.2} {:>12}", m.alpha, m.var, fmt_opt(m.es));
            }
        }
        Command::Price { paths } => {
            let config = load_config(&cli, *paths)?;
            let r = cmd_price(&config, Some(&out))?;
            println!(
                "seed {} config {}",
                config.run.seed, r.provenance.config_hash
            );
            println!(
                "{:<16} {:>14} {:>14} {:>14}",
                "contract", "gross mean", "recovered", "after"
            );
            for c in &r.contracts {
                println!(
                    "{:<16} {:>14.2} {:>14.2} {:>14.2}",
                    c.name, c.summary.gross.mean, c.summary.recovered.mean, c.summary.after.mean
                );
            }
        }
        Command::Simulate { paths, claims } => {
            let config = load_config(&cli, *paths)?;
            let r = cmd_simulate(&config, *claims, &out)?;
            println!(
                "{} paths, {} accidents, {} claims",
                r.paths, r.events, r.claims
            );
        }
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
