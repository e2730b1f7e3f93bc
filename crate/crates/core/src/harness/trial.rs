//! One Monte-Carlo trial: simulate a subframe, train every enabled
//! detector on its reference symbols and count errors on its data symbols.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ChannelModel, DetectorKind, ExperimentConfig, Precision};
use super::seeds::{component_rng, Component, TrialSeeds, SHARED_POINT};
use crate::baselines::{lmmse_channel_estimate, lmmse_equalize, reference_grids, sphere_detect_grid};
use crate::detectors::{
    detect_tf_rc, detect_time_rc, rcnet_detect, train_rcnet_deep_tf, train_rcnet_deep_time, train_tf_rc,
    train_time_rc, uniform_delay_grid, Detection, TrainDiagnostics, TrainingSet,
};
use crate::error::{Error, Result};
use crate::impairments::{add_noise, apply_adc, apply_channel, apply_pa, generate_channel, noise_variance, ChannelRealization};
use crate::ofdm::{ofdm_demodulate, ofdm_modulate, qam_modulate, FrequencyGrid, TimeFrame};
use crate::scalar::Scalar;

/// A simulated subframe as seen by the receiver.
#[derive(Debug, Clone)]
pub struct Subframe<T: Scalar> {
    /// `q` reference grids.
    pub reference: Vec<FrequencyGrid<T>>,
    /// `n_d` data grids.
    pub data: Vec<FrequencyGrid<T>>,
    /// Bits of each data grid in row-major symbol order.
    pub data_bits: Vec<Vec<u8>>,
    /// Received frames after the full impairment chain, reference symbols first.
    pub received: Vec<TimeFrame<T>>,
    /// Thermal noise variance per time-domain sample.
    pub noise_var: f64,
    pub channel: ChannelRealization<T>,
}

impl<T: Scalar> Subframe<T> {
    pub fn training_set(&self, cfg: &ExperimentConfig) -> Result<TrainingSet<T>> {
        TrainingSet::new(cfg.subframe, &self.received[..cfg.subframe.q], &self.reference)
    }

    pub fn data_frames(&self, cfg: &ExperimentConfig) -> &[TimeFrame<T>] {
        &self.received[cfg.subframe.q..]
    }
}

/// Simulates the subframe of `trial` at sweep point `point`. `cfg` must
/// already carry the point's settings (see [`ExperimentConfig::at_point`]).
///
/// Channel, pilots and data depend on the trial only, so every sweep point
/// sees the same link; the noise stream also depends on the point.
pub fn simulate_subframe<T: Scalar>(cfg: &ExperimentConfig, point: u32, trial: u64) -> Result<Subframe<T>> {
    let sf = &cfg.subframe;
    let master = cfg.master_seed;
    let channel = match cfg.channel {
        ChannelModel::Identity => ChannelRealization::identity(sf.n_t),
        ChannelModel::Rayleigh(profile) => {
            let mut rng = component_rng(master, trial, SHARED_POINT, Component::Channel);
            generate_channel(&profile, sf.n_r, sf.n_t, sf.n_cp, &mut rng)?
        }
    };
    let reference = reference_grids::<T, _>(sf, cfg.modulation, &mut component_rng(master, trial, SHARED_POINT, Component::Pilots));

    let mut data_rng = component_rng(master, trial, SHARED_POINT, Component::Data);
    let bits_per_grid = sf.n_sc * sf.n_t * cfg.modulation.bits_per_symbol();
    let mut data = Vec::with_capacity(sf.n_d);
    let mut data_bits = Vec::with_capacity(sf.n_d);
    for _ in 0..sf.n_d {
        let bits: Vec<u8> = (0..bits_per_grid).map(|_| data_rng.random_range(0..2u8)).collect();
        let symbols = qam_modulate::<T>(&bits, cfg.modulation)?;
        data.push(FrequencyGrid::from_row_major(&symbols, sf.n_sc, sf.n_t)?);
        data_bits.push(bits);
    }

    // unit-power symbols through a 1/N inverse DFT: 1/n_sc per sample and antenna
    let nominal_power = 1.0 / sf.n_sc as f64;
    let clean = reference
        .iter()
        .chain(&data)
        .map(|g| {
            let tx = ofdm_modulate(g, sf)?;
            let tx = match &cfg.pa {
                Some(pa) => apply_pa(&tx, pa, nominal_power),
                None => tx,
            };
            apply_channel(&tx, &channel)
        })
        .collect::<Result<Vec<_>>>()?;

    let noise_var = match cfg.snr_db {
        None => 0.0,
        Some(snr) => {
            let power = clean.iter().map(|f| f.mean_power().as_f64()).sum::<f64>() / clean.len() as f64;
            noise_variance(power, snr)
        }
    };
    let mut noise_rng = component_rng(master, trial, point, Component::Noise);
    let received = clean
        .iter()
        .map(|f| apply_adc(&add_noise(f, noise_var, &mut noise_rng), &cfg.adc))
        .collect::<Result<Vec<_>>>()?;

    Ok(Subframe { reference, data, data_bits, received, noise_var, channel })
}

/// Bit errors of one detector over the data symbols of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorOutcome {
    pub detector: DetectorKind,
    pub bit_errors: u64,
    pub total_bits: u64,
    /// Training diagnostics of the reservoir detectors.
    pub diagnostics: Option<TrainDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub point: usize,
    pub outcomes: Vec<DetectorOutcome>,
}

fn count_errors<T: Scalar>(detections: &[Detection<T>], truth: &[Vec<u8>]) -> u64 {
    detections
        .iter()
        .zip(truth)
        .map(|(d, t)| d.bits.iter().zip(t).filter(|(a, b)| a != b).count() as u64)
        .sum()
}

/// Trains every detector of `cfg.detectors` on the reference symbols of
/// `subframe` and detects its data symbols. Detectors only ever see the
/// training set and the received data frames.
pub fn evaluate_detectors<T: Scalar>(
    cfg: &ExperimentConfig,
    subframe: &Subframe<T>,
    seeds: &TrialSeeds,
) -> Result<Vec<DetectorOutcome>> {
    let sf = &cfg.subframe;
    let scheme = cfg.modulation;
    let rc = &cfg.rc;
    let seed = seeds.reservoir;
    let frames = subframe.data_frames(cfg);
    let needs_rc = cfg.detectors.iter().any(|d| d.is_reservoir());
    let train = if needs_rc { Some(subframe.training_set(cfg)?) } else { None };
    let total_bits = cfg.data_bits_per_trial();

    let mut out = Vec::with_capacity(cfg.detectors.len());
    for &kind in &cfg.detectors {
        let (detections, diagnostics) = match kind {
            DetectorKind::TimeRc => {
                let grid = uniform_delay_grid(rc.shallow_delay_points, rc.max_delay);
                let (m, d) = train_time_rc(train.as_ref().unwrap(), &rc.reservoir, rc.max_delay, &grid, seed, &rc.train)?;
                let det = frames.iter().map(|f| detect_time_rc(&m, f, sf, scheme)).collect::<Result<Vec<_>>>()?;
                (det, Some(d))
            }
            DetectorKind::TfRc => {
                let grid = uniform_delay_grid(rc.tf_delay_points, rc.max_delay);
                let (m, d) =
                    train_tf_rc(train.as_ref().unwrap(), &rc.reservoir, &grid, rc.als_iters, rc.als_tol, seed, &rc.train)?;
                let det = frames.iter().map(|f| detect_tf_rc(&m, f, sf, scheme)).collect::<Result<Vec<_>>>()?;
                (det, Some(d))
            }
            DetectorKind::RcnetTime => {
                let grid = uniform_delay_grid(rc.deep_delay_points, rc.max_delay);
                let (m, d) = train_rcnet_deep_time(
                    train.as_ref().unwrap(),
                    rc.depth,
                    &rc.layer_specs(),
                    rc.max_delay,
                    &grid,
                    seed,
                    &rc.train,
                )?;
                let det = frames.iter().map(|f| rcnet_detect(&m, f, sf, scheme)).collect::<Result<Vec<_>>>()?;
                (det, Some(d))
            }
            DetectorKind::RcnetTf => {
                let grid = uniform_delay_grid(rc.deep_delay_points, rc.max_delay);
                let (m, d) = train_rcnet_deep_tf(
                    train.as_ref().unwrap(),
                    rc.depth,
                    &rc.layer_specs(),
                    &grid,
                    rc.als_iters,
                    rc.als_tol,
                    seed,
                    &rc.train,
                )?;
                let det = frames.iter().map(|f| rcnet_detect(&m, f, sf, scheme)).collect::<Result<Vec<_>>>()?;
                (det, Some(d))
            }
            DetectorKind::Lmmse | DetectorKind::Sphere => {
                let rx_ref = subframe.received[..sf.q]
                    .iter()
                    .map(|f| ofdm_demodulate(f, sf))
                    .collect::<Result<Vec<_>>>()?;
                // the unnormalized DFT scales the per-sample noise variance by n_sc
                let nv = T::lit(subframe.noise_var * sf.n_sc as f64);
                let est = lmmse_channel_estimate(&rx_ref, &subframe.reference, nv)?;
                let det = frames
                    .iter()
                    .map(|f| {
                        let y = ofdm_demodulate(f, sf)?;
                        let z = if kind == DetectorKind::Lmmse {
                            lmmse_equalize(&est, &y)?
                        } else {
                            sphere_detect_grid(&est, &y, scheme)?
                        };
                        Ok(Detection::from_grid(z, scheme))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (det, None)
            }
        };
        out.push(DetectorOutcome {
            detector: kind,
            bit_errors: count_errors(&detections, &subframe.data_bits),
            total_bits,
            diagnostics,
        });
    }
    Ok(out)
}

fn run_trial_as<T: Scalar>(cfg: &ExperimentConfig, point: usize, trial: u64) -> Result<TrialOutcome> {
    let at = cfg.at_point(cfg.sweep.values[point]);
    let subframe = simulate_subframe::<T>(&at, point as u32, trial)?;
    let seeds = TrialSeeds::derive(cfg.master_seed, trial);
    let outcomes = evaluate_detectors(&at, &subframe, &seeds)?;
    Ok(TrialOutcome { trial, point, outcomes })
}

/// Runs trial `trial` at sweep point index `point` of `cfg`.
pub fn run_trial(cfg: &ExperimentConfig, point: usize, trial: u64) -> Result<TrialOutcome> {
    if point >= cfg.sweep.values.len() {
        return Err(Error::Config(format!("sweep has no point {point}")));
    }
    match cfg.precision {
        Precision::F64 => run_trial_as::<f64>(cfg, point, trial),
        Precision::F32 => run_trial_as::<f32>(cfg, point, trial),
    }
}
