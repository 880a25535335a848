//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 solver
//! divergence or a failed invariant check.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::checks::selftest;
use super::config::{ExperimentConfig, Problem};
use super::experiments::{run_benchmark_alg1_vs_alg2, run_gps_experiments, run_noise_sweep};
use crate::error::Error;
use crate::solver::Mode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tvpd", version, about = "TV-regularized primal-dual reconstruction experiments")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed; replaces the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// alg1, alg2 or bregman.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Noise sweep over the configured fractions and seeds.
    Sweep,
    /// Algorithm 1 against Algorithm 2 on one measurement.
    Bench,
    /// GPS ray-count experiments.
    Gps,
    /// Runs the invariant suite and writes selftest.csv.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None if matches!(cli.command, Command::Gps) => ExperimentConfig::for_problem(Problem::Gps3d),
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(n) = cli.max_iter {
        cfg.solver.max_iter = n;
    }
    if let Some(m) = cli.mode {
        cfg.solver.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Sweep => {
            let out = run_noise_sweep(&cfg)?;
            for c in &out.cells {
                match &c.result {
                    Ok(s) => println!(
                        "noise={} seed={} stop={} i*={} residual={:.6e} rel_error={:.6e}",
                        c.noise_fraction,
                        c.seed,
                        s.stop_reason.name(),
                        s.i_star,
                        s.final_residual,
                        s.final_rel_error
                    ),
                    Err(msg) => println!("noise={} seed={} failed: {msg}", c.noise_fraction, c.seed),
                }
            }
            println!("monotone_in_delta: {}", if out.monotone { "pass" } else { "fail" });
            Ok(if out.diverged { EXIT_DIVERGENCE } else { EXIT_OK })
        }
        Command::Bench => {
            let out = run_benchmark_alg1_vs_alg2(&cfg)?;
            for (name, s) in [("alg1", &out.alg1_summary), ("alg2", &out.alg2_summary)] {
                println!(
                    "{name}: stop={} i*={} residual={:.6e} rel_error={:.6e}",
                    s.stop_reason.name(),
                    s.i_star,
                    s.final_residual,
                    s.final_rel_error
                );
            }
            println!("lower_error: {}", out.lower_error.name());
            Ok(EXIT_OK)
        }
        Command::Gps => {
            let out = run_gps_experiments(&cfg)?;
            for r in &out.runs {
                println!(
                    "schedule={:?} rays={} i*={} rel_error={:.6e} support_jaccard={:.4}",
                    r.schedule, r.num_rays, r.summary.i_star, r.summary.final_rel_error, r.support_jaccard
                );
            }
            Ok(EXIT_OK)
        }
        Command::Selftest => {
            let dir = cfg.prepare_output_dir()?;
            let results = selftest(Some(dir))?;
            let mut ok = true;
            for c in &results {
                println!("{} {} value={:e} threshold={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
                ok &= c.pass;
            }
            Ok(if ok { EXIT_OK } else { EXIT_DIVERGENCE })
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(cli_main(["tvpd", "--bogus", "selftest"]), EXIT_CONFIG);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(cli_main(["tvpd", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_config_is_config_error() {
        assert_eq!(cli_main(["tvpd", "--config", "/nonexistent/cfg.json", "bench"]), EXIT_CONFIG);
    }

    #[test]
    fn bad_mode_is_usage_error() {
        assert_eq!(cli_main(["tvpd", "--mode", "alg3", "bench"]), EXIT_CONFIG);
    }
}
