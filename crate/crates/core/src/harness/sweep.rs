//! Monte-Carlo sweeps: trials fanned out over a worker pool, errors
//! aggregated per detector and sweep point.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DetectorKind, ExperimentConfig};
use super::seeds::TrialSeeds;
use super::trial::{run_trial, TrialOutcome};
use crate::error::{Error, Result};

/// One row of `ber.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub detector: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub point: usize,
    pub trial: u64,
    pub error: String,
}

/// Training summary of one reservoir detector at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub detector: DetectorKind,
    pub sweep_value: f64,
    pub mean_final_objective: f64,
    pub mean_trace_len: f64,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub trial_seeds: Vec<TrialSeeds>,
    /// Reference-signal overhead `q / (q + n_d)`.
    pub overhead: f64,
    pub overhead_percent: String,
    pub snr_mapping: String,
    pub channel_policy: String,
    pub workers: usize,
    /// Set when any trial failed; the failed trials are listed and excluded from the counts.
    pub partial: bool,
    pub failures: Vec<TrialFailure>,
    pub detector_summaries: Vec<DetectorSummary>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<BerRecord>,
    pub manifest: RunManifest,
    /// Objective trace of trial 0 at the first sweep point, per reservoir detector id.
    pub learning_curves: BTreeMap<String, Vec<f64>>,
}

/// Sums trial outcomes into one record per (sweep point, detector), in
/// sweep order and then configuration order. Integer sums make the result
/// independent of the order in which trials finished.
pub fn aggregate(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Vec<BerRecord> {
    let mut records = Vec::new();
    for (p, &value) in cfg.sweep.values.iter().enumerate() {
        for &det in &cfg.detectors {
            let (mut trials, mut errors, mut bits) = (0u64, 0u64, 0u64);
            for o in outcomes.iter().filter(|o| o.point == p) {
                if let Some(d) = o.outcomes.iter().find(|d| d.detector == det) {
                    trials += 1;
                    errors += d.bit_errors;
                    bits += d.total_bits;
                }
            }
            records.push(BerRecord {
                detector: det.id().to_string(),
                sweep_variable: cfg.sweep.variable.id().to_string(),
                sweep_value: value,
                trials,
                bit_errors: errors,
                total_bits: bits,
                ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
            });
        }
    }
    records
}

fn summarize(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Vec<DetectorSummary> {
    let mut out = Vec::new();
    for (p, &value) in cfg.sweep.values.iter().enumerate() {
        for &det in cfg.detectors.iter().filter(|d| d.is_reservoir()) {
            let diags: Vec<_> = outcomes
                .iter()
                .filter(|o| o.point == p)
                .filter_map(|o| o.outcomes.iter().find(|d| d.detector == det))
                .filter_map(|d| d.diagnostics.as_ref())
                .collect();
            if diags.is_empty() {
                continue;
            }
            let n = diags.len() as f64;
            out.push(DetectorSummary {
                detector: det,
                sweep_value: value,
                mean_final_objective: diags.iter().map(|d| d.final_objective()).sum::<f64>() / n,
                mean_trace_len: diags.iter().map(|d| d.objective_trace.len() as f64).sum::<f64>() / n,
                warnings: diags.iter().map(|d| d.warnings.len()).sum(),
            });
        }
    }
    out
}

/// Runs every (sweep point, trial) pair on `workers` threads (all cores
/// when `None`). The tables do not depend on the worker count.
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, u64)> = (0..cfg.sweep.values.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();
    let results: Vec<(usize, u64, Result<TrialOutcome>)> =
        pool.install(|| jobs.par_iter().map(|&(p, t)| (p, t, run_trial(cfg, p, t))).collect());

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (point, trial, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(TrialFailure { point, trial, error: e.to_string() }),
        }
    }

    let mut learning_curves = BTreeMap::new();
    if let Some(first) = outcomes.iter().find(|o| o.point == 0 && o.trial == 0) {
        for d in &first.outcomes {
            if let Some(diag) = &d.diagnostics {
                learning_curves.insert(d.detector.id().to_string(), diag.objective_trace.clone());
            }
        }
    }

    let overhead = cfg.overhead();
    let manifest = RunManifest {
        software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        master_seed: cfg.master_seed,
        seed_derivation: "ChaCha8 keyed by master_seed; stream = trial << 24 | point << 8 | component \
                          (channel 0, pilots 1, data 2, noise 3, reservoir 4); channel, pilots, data and \
                          reservoir use point 65535 so every sweep point shares them"
            .into(),
        trial_seeds: (0..cfg.trials as u64).map(|t| TrialSeeds::derive(cfg.master_seed, t)).collect(),
        overhead,
        overhead_percent: format!("{:.1}%", 100.0 * overhead),
        snr_mapping: "received SNR = mean received signal power per sample and antenna over the subframe / \
                      noise variance; Eb/N0 sweeps use SNR = Eb/N0 + 10 log10(bits per symbol)"
            .into(),
        channel_policy: "channel redrawn independently for every trial".into(),
        workers: pool.current_num_threads(),
        partial: !failures.is_empty(),
        failures,
        detector_summaries: summarize(cfg, &outcomes),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(SweepResult { records: aggregate(cfg, &outcomes), manifest, learning_curves })
}
