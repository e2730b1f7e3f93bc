//! Experiment orchestration: configuration, seeded trials, parallel
//! sweeps and report files.

pub mod config;
pub mod report;
pub mod seeds;
pub mod sweep;
pub mod trial;

pub use config::{
    ebn0_to_snr_db, parse_detector_list, ChannelModel, DetectorKind, ExperimentConfig, Precision, Profile, RcConfig,
    SweepConfig, SweepVariable,
};
pub use report::{emit_report, read_ber_csv, read_learning_curve};
pub use seeds::{component_rng, Component, TrialSeeds};
pub use sweep::{aggregate, run_sweep, BerRecord, RunManifest, SweepResult};
pub use trial::{evaluate_detectors, run_trial, simulate_subframe, DetectorOutcome, Subframe, TrialOutcome};
