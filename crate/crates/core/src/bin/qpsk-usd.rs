//! Command-line front end: presets, config sweeps, bound tables and lookup tables.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime or numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qpsk_usd::experiment::{
    parse_config, preset, run_series, to_csv, to_json, ExperimentConfig, Method, RowRecord, RunOptions, Sweep,
    SweepVariable, PRESET_NAMES,
};
use qpsk_usd::receivers::{build_lookup_table, CycleRule, ReceiverConfig};
use qpsk_usd::{ChannelParams, Error, Result};

#[derive(Parser)]
#[command(
    name = "qpsk-usd",
    version,
    about = "Unambiguous discrimination of QPSK coherent states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named figure preset.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a sweep described by a key = value config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the optimal conclusive probability.
    Bound {
        /// `start:stop:step`
        #[arg(long, value_name = "START:STOP:STEP")]
        alpha_sq_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the receiver policy as a lookup table.
    Lut {
        #[arg(long)]
        stages: usize,
        /// `rotate` or `restart`
        #[arg(long, default_value = "rotate")]
        rule: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per batch.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    batches: Option<usize>,
    /// Worker threads for the Monte Carlo engine.
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON summary with binomial errors.
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            trials: self.trials,
            batches: self.batches,
            workers: self.workers,
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_and_write(series: &[ExperimentConfig], common: &Common, fallback_out: Option<&Path>) -> Result<()> {
    let rows: Vec<RowRecord> = run_series(series, &common.options())?;
    emit(&to_csv(&rows), common.out.as_deref().or(fallback_out))?;
    if let Some(path) = &common.json {
        fs::write(path, to_json(&rows))?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<Sweep> {
    let parts: Vec<&str> = text.split(':').collect();
    let numbers: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match numbers.as_deref() {
        Some(&[start, stop, step]) => Ok(Sweep {
            variable: SweepVariable::AlphaSq,
            start,
            stop,
            step,
        }),
        _ => Err(Error::InvalidConfig(format!(
            "alpha-sq-range `{text}` is not START:STOP:STEP"
        ))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preset { name, common } => run_and_write(&preset(&name)?, &common, None),
        Command::Sweep { config, common } => {
            let text = fs::read_to_string(&config)?;
            let parsed = parse_config(&text)?;
            let out = parsed.output.clone();
            run_and_write(&[parsed], &common, out.as_deref())
        }
        Command::Bound { alpha_sq_range, out } => {
            let mut config = ExperimentConfig::new(parse_range(&alpha_sq_range)?);
            config.params = ChannelParams::ideal(0.0);
            config.timing = None;
            config.methods = vec![Method::OptimalBound];
            let rows = run_series(&[config], &RunOptions::default())?;
            emit(&to_csv(&rows), out.as_deref())
        }
        Command::Lut { stages, rule, out } => {
            let rule = CycleRule::parse(&rule)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown rule `{rule}` (rotate or restart)")))?;
            let config = if stages == 4 {
                ReceiverConfig::static_four()
            } else {
                ReceiverConfig::adaptive(stages)
            }
            .with_rule(rule);
            emit(&build_lookup_table(&config)?.to_text(), out.as_deref())
        }
    }
}

fn exit_code(result: &Result<()>) -> u8 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_validation() => 1,
        Err(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = run(cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result))
}
