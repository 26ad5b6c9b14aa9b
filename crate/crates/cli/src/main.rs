//! `lss`: simulate, measure and verify Lévy semi-stationary processes.

// `!(x >= 1.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use lss_core::estimators::{
    estimate_h, fit_alpha_beta, ratio_stat, scale_stat, variations_on_grid, PGrid, ParamDomainJ,
};
use lss_core::harness::{run_estimate, run_oracle, run_verify, simulate_path, ExperimentConfig, Mode, CONFIG_KEYS};
use lss_core::io::{
    read_path_csv, write_constants_csv, write_estimate_csv, write_path_csv, write_report_csv, write_samples_csv,
    write_variation_csv,
};
use lss_core::kernel::{hk_abs_power_integral, HkParams};
use lss_core::oracles::{abs_moment_stable, mp_constant, vm_series};
use lss_core::variation::{normalization_factor, power_variation_values, regime_classify, RegimeTag};
use lss_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "lss", version, about = "Simulation and power-variation inference for Lévy semi-stationary processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path from a configuration file and write `t,x` CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Sampling frequency; defaults to the first entry of n_list.
        #[arg(long)]
        n: Option<u64>,
        /// Replication index used to derive the random streams.
        #[arg(long, default_value_t = 0)]
        replication: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power variation V(p;k) of a path CSV sampled at i/n.
    Powervar {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Normalize by the rate of regime i, ii or iii (needs --alpha, and --beta for ii).
        #[arg(long)]
        regime: Option<RegimeTag>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate (alpha, beta) and H from a path CSV on [0, 1].
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated powers of the scale statistic.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.01)]
        d_alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        d_beta: f64,
        #[arg(long, default_value_t = 0.5)]
        ratio_p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo experiment described by a configuration file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Summary report; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-replication values.
        #[arg(long)]
        samples: Option<PathBuf>,
        /// Run replications one after another.
        #[arg(long)]
        serial: bool,
    },
    /// Oracle constants for the given parameters.
    Oracle {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        p: f64,
        /// Stable index; omit for compound Poisson drivers.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        gamma_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        /// Marks u at which to evaluate the jump weight series (regime i).
        #[arg(long, value_delimiter = ',')]
        u: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Frequency of a path sampled at `i/n` from 0.
fn frequency(times: &[f64]) -> Result<f64> {
    if times.len() < 2 || times[0] != 0.0 {
        return Err(Error::Parse("path must start at t = 0 and hold at least two points".into()));
    }
    let n = (1.0 / (times[1] - times[0])).round();
    let uniform = times.iter().enumerate().all(|(i, &t)| (t * n - i as f64).abs() < 1e-6);
    if !(n >= 1.0) || !uniform {
        return Err(Error::Parse("path times must form the grid i/n".into()));
    }
    Ok(n)
}

fn simulate(config: &Path, n: Option<u64>, replication: usize, out: Option<&Path>) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config)?;
    let n = n.unwrap_or(cfg.n_list[0]);
    let path = simulate_path(&cfg, n, replication)?;
    write_path_csv(output(out)?, &path)
}

fn powervar(
    input: &Path,
    p: f64,
    k: u32,
    regime: Option<RegimeTag>,
    alpha: Option<f64>,
    beta: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let (times, values) = read_path_csv(open(input)?)?;
    let n = frequency(&times)?;
    let mut series = power_variation_values(&values, n, p, k)?;
    if let Some(tag) = regime {
        let alpha = alpha.ok_or_else(|| Error::ConfigInvalid("--regime needs --alpha".into()))?;
        let beta = match (tag, beta) {
            (RegimeTag::II, None) => return Err(Error::ConfigInvalid("regime ii needs --beta".into())),
            (_, b) => b.unwrap_or(0.0),
        };
        series = series.with_normalization(tag, normalization_factor(tag, n, p, k, alpha, beta)?);
    }
    write_variation_csv(output(out)?, &series)
}

fn estimate(
    input: &Path,
    p_grid: Option<Vec<f64>>,
    d_alpha: f64,
    d_beta: f64,
    ratio_p: f64,
    out: Option<&Path>,
) -> Result<()> {
    let (times, values) = read_path_csv(open(input)?)?;
    let n = frequency(&times)?;
    let grid = match p_grid {
        Some(points) => PGrid::new(points)?,
        None => PGrid::default(),
    };
    let domain = ParamDomainJ::new(d_alpha, d_beta)?;
    let report = fit_alpha_beta(&scale_stat(&variations_on_grid(&values, &grid)?, n)?, &grid, &domain)?;
    let h_ratio = estimate_h(ratio_stat(&values, ratio_p)?, ratio_p)?;
    eprintln!(
        "n = {n}: alpha_hat = {:.4}, beta_hat = {:.4}, H_hat = {:.4} (grid fit), {h_ratio:.4} (ratio, p = {ratio_p}); \
         objective {:.3e}",
        report.alpha_hat, report.beta_hat, report.h_hat, report.objective
    );
    write_estimate_csv(output(out)?, &report, Some(h_ratio))
}

fn verify(config: &Path, out: Option<&Path>, samples: Option<&Path>, serial: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    cfg.parallel &= !serial;
    let report = match cfg.mode {
        Mode::VerifyI | Mode::VerifyII | Mode::VerifyIII => run_verify(&cfg)?,
        Mode::Estimate => run_estimate(&cfg)?,
        Mode::Oracle => return write_constants_csv(output(out)?, &run_oracle(&cfg)?),
    };
    if let Some(path) = samples {
        write_samples_csv(output(Some(path))?, &report)?;
    }
    write_report_csv(output(out)?, &report)
}

#[allow(clippy::too_many_arguments)]
fn oracle(
    alpha: f64,
    k: u32,
    p: f64,
    beta: Option<f64>,
    gamma_scale: f64,
    c0: f64,
    u: &[f64],
    out: Option<&Path>,
) -> Result<()> {
    let bg = beta.unwrap_or(0.0);
    let tag = regime_classify(alpha, bg, p, k);
    let mut rows = vec![(format!("regime_{tag}"), 1.0)];
    if let Some(b) = beta {
        rows.push((format!("abs_moment_stable(beta={b},p={p})"), abs_moment_stable(b, p)?));
        let hk = hk_abs_power_integral(HkParams::new(alpha, k)?, b)?;
        rows.push((format!("hk_abs_power_integral(alpha={alpha},k={k},q={b})"), hk.value));
        if tag == RegimeTag::II {
            rows.push(("mp_constant".into(), mp_constant(c0, gamma_scale, alpha, k, b, p)?));
        }
    }
    for &m in u {
        rows.push((format!("vm_series(u={m})"), vm_series(alpha, k, p, m)?));
    }
    write_constants_csv(output(out)?, &rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, n, replication, out } => simulate(&config, n, replication, out.as_deref()),
        Command::Powervar { input, p, k, regime, alpha, beta, out } => {
            powervar(&input, p, k, regime, alpha, beta, out.as_deref())
        }
        Command::Estimate { input, p_grid, d_alpha, d_beta, ratio_p, out } => {
            estimate(&input, p_grid, d_alpha, d_beta, ratio_p, out.as_deref())
        }
        Command::Verify { config, out, samples, serial } => verify(&config, out.as_deref(), samples.as_deref(), serial),
        Command::Oracle { alpha, k, p, beta, gamma_scale, c0, u, out } => {
            oracle(alpha, k, p, beta, gamma_scale, c0, &u, out.as_deref())
        }
    }
}

fn config_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let keys: String = CONFIG_KEYS.iter().map(|(k, d)| format!("  {k:<width$}  {d}\n")).collect();
    format!(
        "Configuration files hold one `key = value` per line; `#` starts a comment.\nKeys:\n{keys}\n\
         Exit codes: 0 success, 2 configuration error, 3 numerical failure."
    )
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(config_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
