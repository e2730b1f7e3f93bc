use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::Value;

use rc_symdet::harness::{emit_report, parse_detector_list, run_sweep, ExperimentConfig, Profile};

#[derive(Parser)]
#[command(name = "rc-symdet", version, about = "Reservoir-computing MIMO-OFDM symbol detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep and write ber.csv, manifest.json and learning curves.
    Run {
        /// JSON experiment config; omitted fields come from the profile.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Comma-separated subset of time-rc,tf-rc,rcnet-time,rcnet-tf,lmmse,sphere.
        #[arg(long)]
        detectors: Option<String>,
        #[arg(long, default_value = "desk")]
        profile: Profile,
        /// Overrides the number of trials per sweep point.
        #[arg(long)]
        trials: Option<usize>,
        /// Also write ber_<detector>.dat files and a ber.gp script.
        #[arg(long)]
        emit_gnuplot: bool,
    },
    /// Print the full configuration of a profile as JSON.
    Config {
        #[arg(long, default_value = "desk")]
        profile: Profile,
    },
}

/// Overlays `patch` onto `base`, recursing into objects.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}

fn load_config(profile: Profile, path: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    let mut value = serde_json::to_value(ExperimentConfig::profile(profile))?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let patch: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        merge(&mut value, patch);
    }
    Ok(serde_json::from_value(value)?)
}

fn run() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::Config { profile } => {
            println!("{}", ExperimentConfig::profile(profile).to_json()?);
            Ok(true)
        }
        Command::Run { config, out, seed, workers, detectors, profile, trials, emit_gnuplot } => {
            let mut cfg = load_config(profile, config.as_ref())?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(d) = detectors {
                cfg.detectors = parse_detector_list(&d)?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            if workers == Some(0) {
                bail!("--workers must be positive");
            }
            let result = run_sweep(&cfg, workers)?;
            for path in emit_report(&result, &out, emit_gnuplot)? {
                eprintln!("wrote {}", path.display());
            }
            for f in &result.manifest.failures {
                eprintln!("trial {} at point {} failed: {}", f.trial, f.point, f.error);
            }
            Ok(!result.manifest.partial)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
