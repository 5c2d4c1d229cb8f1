//! `owc-sim` command line.
//!
//! Exit status: 0 on success, 2 for usage or configuration errors, 1 when a
//! run fails.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::config::{Experiment, ScenarioConfig};
use super::run_with_workers;
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "owc-sim", version, about = "VCSEL-array optical wireless downlink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SNR over the central cell (or the whole footprint).
    SnrMap(RunArgs),
    /// Empirical SNR density against the exact and uniform laws.
    Pdf(RunArgs),
    /// Single-user average rate against cell size.
    RateVsCell(RunArgs),
    /// Single-user average rate against array size, with its bound.
    RateVsArray(RunArgs),
    /// Total SDMA rate against the number of users, with and without ICI.
    Multiuser(RunArgs),
    /// Throughput and outage of moving users per activation scheme.
    Mobility(RunArgs),
    /// Maximum eye-safe transmit power per divergence angle.
    Eyesafety(RunArgs),
    /// Train the RSS beam classifier and report activation accuracy.
    TrainAnn(RunArgs),
    /// Resolve and check a configuration without running it.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON configuration file, merged over the experiment preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one field, e.g. `--set layout.d_cell=0.05` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for the CSV table.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Also write a whitespace-separated `.dat` copy.
    #[arg(long)]
    dat: bool,
    /// Worker threads (default: OWC_SIM_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Experiment whose preset the document is merged onto.
    #[arg(long)]
    experiment: Option<Experiment>,
    #[command(flatten)]
    config: ConfigArgs,
}

fn resolve(experiment: Option<Experiment>, args: &ConfigArgs) -> Result<ScenarioConfig> {
    let text = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::config(p.display().to_string(), e.to_string()))?),
        None => None,
    };
    let mut set = args.set.clone();
    if let Some(seed) = args.seed {
        set.push(format!("seed={seed}"));
    }
    ScenarioConfig::resolve(experiment, text.as_deref(), &set)
}

fn execute(experiment: Experiment, args: RunArgs) -> Result<()> {
    let cfg = resolve(Some(experiment), &args.config)?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    if args.threads == Some(0) {
        return Err(Error::config("--threads", "must be at least 1"));
    }
    let start = Instant::now();
    let out = run_with_workers(&cfg, args.threads)?;
    let dat = args.dat || cfg.output.dat;
    let path = out.table.save(&args.out, dat)?;
    for (stem, model) in &out.models {
        model.save(&args.out.join(format!("{stem}.json")))?;
    }
    println!("{}: {}", experiment, out.summary);
    println!(
        "wrote {} ({} rows, config {}) in {:.2} s",
        path.display(),
        out.table.rows.len(),
        cfg.hash(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn cli<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let parsed = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match parsed.command {
        Command::SnrMap(a) => execute(Experiment::SnrMap, a),
        Command::Pdf(a) => execute(Experiment::Pdf, a),
        Command::RateVsCell(a) => execute(Experiment::RateVsCell, a),
        Command::RateVsArray(a) => execute(Experiment::RateVsArray, a),
        Command::Multiuser(a) => execute(Experiment::Multiuser, a),
        Command::Mobility(a) => execute(Experiment::Mobility, a),
        Command::Eyesafety(a) => execute(Experiment::Eyesafety, a),
        Command::TrainAnn(a) => execute(Experiment::TrainAnn, a),
        Command::ValidateConfig(a) => resolve(a.experiment, &a.config).map(|cfg| {
            println!("config ok: {} (hash {})", cfg.experiment, cfg.hash());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("owc-sim").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(cli(args("no-such-command")), 2);
        assert_eq!(cli(args("eyesafety --threads many")), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(cli(args("--help")), 0);
        assert_eq!(cli(args("--version")), 0);
    }

    #[test]
    fn bad_override_is_a_config_error() {
        assert_eq!(cli(args("validate-config --set layout.n_side=0")), 2);
        assert_eq!(cli(args("validate-config --set layout.d_cel=1")), 2);
        assert_eq!(cli(args("validate-config --experiment pdf --set lambda_nm=850")), 0);
        assert_eq!(cli(args("validate-config --set d_cell=0.05")), 2);
    }
}
