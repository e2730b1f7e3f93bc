//! Experiment configuration and the built-in profiles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::TrainOptions;
use crate::error::{Error, Result};
use crate::impairments::{AdcConfig, ChannelProfile, PaConfig};
use crate::ofdm::{ModulationScheme, SubframeConfig};
use crate::reservoir::ReservoirSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    TimeRc,
    TfRc,
    RcnetTime,
    RcnetTf,
    Lmmse,
    Sphere,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::TimeRc,
        DetectorKind::TfRc,
        DetectorKind::RcnetTime,
        DetectorKind::RcnetTf,
        DetectorKind::Lmmse,
        DetectorKind::Sphere,
    ];

    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::TimeRc => "time-rc",
            DetectorKind::TfRc => "tf-rc",
            DetectorKind::RcnetTime => "rcnet-time",
            DetectorKind::RcnetTf => "rcnet-tf",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::Sphere => "sphere",
        }
    }

    pub fn is_reservoir(self) -> bool {
        !matches!(self, DetectorKind::Lmmse | DetectorKind::Sphere)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.id() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown detector '{s}'")))
    }
}

/// Parses a comma-separated detector list such as `tf-rc,lmmse`.
pub fn parse_detector_list(s: &str) -> Result<Vec<DetectorKind>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    /// Received SNR in dB.
    SnrDb,
    /// Eb/N0 in dB, mapped to SNR by adding `10·log10(bits per symbol)`.
    EbN0Db,
    /// PA input back-off in dB (enables the PA).
    IboDb,
    /// ADC resolution (enables the ADC).
    AdcBits,
    /// Number of RCNet layers.
    Depth,
}

impl SweepVariable {
    pub fn id(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::EbN0Db => "ebn0_db",
            SweepVariable::IboDb => "ibo_db",
            SweepVariable::AdcBits => "adc_bits",
            SweepVariable::Depth => "depth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelModel {
    /// Unit single-tap channel, antenna `i` to antenna `i` (needs `n_r = n_t`).
    Identity,
    /// I.i.d. Rayleigh taps with an exponential power-delay profile, redrawn every trial.
    Rayleigh(ChannelProfile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

/// Reservoir and training settings shared by the RC detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcConfig {
    pub reservoir: ReservoirSpec,
    /// Per-layer reservoirs for the RCNet stacks; when absent every layer uses `reservoir`.
    pub layer_specs: Option<Vec<ReservoirSpec>>,
    /// RCNet depth `L`.
    pub depth: usize,
    /// Largest delay `P` searched by the time-domain readouts.
    pub max_delay: usize,
    /// Delay-grid size for the shallow time RC.
    pub shallow_delay_points: usize,
    /// Delay-grid size for every RCNet layer.
    pub deep_delay_points: usize,
    /// Delay-grid size for the shallow time-frequency RC.
    pub tf_delay_points: usize,
    /// ALS iterations per time-frequency layer.
    pub als_iters: usize,
    pub als_tol: f64,
    pub train: TrainOptions,
}

impl Default for RcConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirSpec::default(),
            layer_specs: None,
            depth: 3,
            max_delay: 16,
            shallow_delay_points: 50,
            deep_delay_points: 5,
            tf_delay_points: 5,
            als_iters: 5,
            als_tol: 1e-8,
            train: TrainOptions::default(),
        }
    }
}

impl RcConfig {
    pub fn layer_specs(&self) -> Vec<ReservoirSpec> {
        self.layer_specs.clone().unwrap_or_else(|| vec![self.reservoir.clone()])
    }
}

/// Everything that defines a run. Every field can be set from JSON;
/// omitted fields take the desk-profile defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subframe: SubframeConfig,
    pub modulation: ModulationScheme,
    /// PA model; `null` keeps the transmitter linear.
    pub pa: Option<PaConfig>,
    pub adc: AdcConfig,
    pub channel: ChannelModel,
    /// Received SNR in dB when the sweep does not set it; `null` means noiseless.
    pub snr_db: Option<f64>,
    pub sweep: SweepConfig,
    pub detectors: Vec<DetectorKind>,
    pub rc: RcConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub precision: Precision,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Named defaults selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile '{s}' (expected desk or paper)"))),
        }
    }
}

impl ExperimentConfig {
    pub fn profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Laptop-sized link: 2x2 MIMO, 64 subcarriers, 4 + 13 symbols.
    pub fn desk() -> Self {
        Self {
            subframe: SubframeConfig { n_sc: 64, n_cp: 16, q: 4, n_d: 13, n_t: 2, n_r: 2 },
            modulation: ModulationScheme::Qam16,
            pa: None,
            adc: AdcConfig::default(),
            channel: ChannelModel::Rayleigh(ChannelProfile::default()),
            snr_db: None,
            sweep: SweepConfig { variable: SweepVariable::SnrDb, values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0] },
            detectors: DetectorKind::ALL.to_vec(),
            rc: RcConfig::default(),
            trials: 50,
            master_seed: 1,
            precision: Precision::F64,
        }
    }

    /// The full-size 4x4 link with 1024 subcarriers and 128-neuron reservoirs.
    pub fn paper() -> Self {
        let reservoir = ReservoirSpec { n_neurons: 128, window_len: 128, ..ReservoirSpec::default() };
        Self {
            subframe: SubframeConfig { n_sc: 1024, n_cp: 160, q: 4, n_d: 13, n_t: 4, n_r: 4 },
            channel: ChannelModel::Rayleigh(ChannelProfile { taps: 16, decay_db_per_tap: 1.5 }),
            rc: RcConfig { reservoir, max_delay: 160, ..RcConfig::default() },
            trials: 100,
            ..Self::desk()
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every constraint a trial relies on, so misconfiguration
    /// surfaces before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.subframe.validate()?;
        self.adc.validate()?;
        if let Some(pa) = &self.pa {
            pa.validate()?;
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep needs at least one point".into()));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("select at least one detector".into()));
        }
        if self.subframe.n_r < self.subframe.n_t && self.detectors.contains(&DetectorKind::Sphere) {
            return Err(Error::Config("sphere decoding needs at least as many receive as transmit antennas".into()));
        }
        match self.channel {
            ChannelModel::Identity if self.subframe.n_r != self.subframe.n_t => {
                return Err(Error::Config("identity channel needs n_r = n_t".into()));
            }
            ChannelModel::Rayleigh(p) if p.taps == 0 || p.taps > self.subframe.n_cp.max(1) => {
                return Err(Error::Config(format!(
                    "{} channel taps do not fit in the {}-sample cyclic prefix",
                    p.taps, self.subframe.n_cp
                )));
            }
            _ => {}
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config("snr_db must be finite; use null for a noiseless link".into()));
            }
        }
        for v in &self.sweep.values {
            match self.sweep.variable {
                SweepVariable::AdcBits | SweepVariable::Depth if *v < 1.0 || v.fract() != 0.0 => {
                    return Err(Error::Config(format!("{} must be a positive integer, got {v}", self.sweep.variable.id())));
                }
                _ => {}
            }
        }
        let rc = &self.rc;
        if self.detectors.iter().any(|d| d.is_reservoir()) {
            for spec in std::iter::once(&rc.reservoir).chain(rc.layer_specs.iter().flatten()) {
                spec.validate()?;
            }
            if let Some(specs) = &rc.layer_specs {
                let depths: Vec<usize> = if self.sweep.variable == SweepVariable::Depth {
                    self.sweep.values.iter().map(|v| *v as usize).collect()
                } else {
                    vec![rc.depth]
                };
                if specs.len() != 1 && depths.iter().any(|&d| d != specs.len()) {
                    return Err(Error::Config(format!("{} layer specs for depth {:?}", specs.len(), depths)));
                }
            }
            if rc.depth == 0 || rc.als_iters == 0 || rc.shallow_delay_points == 0 || rc.deep_delay_points == 0 || rc.tf_delay_points == 0 {
                return Err(Error::Config("depth, ALS iterations and delay-grid sizes must be positive".into()));
            }
            if !(rc.als_tol >= 0.0) || !(rc.train.ridge >= 0.0) || !(rc.train.pinv_rel_tol >= 0.0) {
                return Err(Error::Config("ALS tolerance, ridge and pseudo-inverse cutoff must be non-negative".into()));
            }
        }
        Ok(())
    }

    /// Configuration of one sweep point: the sweep value written into the field it controls.
    pub fn at_point(&self, value: f64) -> Self {
        let mut cfg = self.clone();
        match self.sweep.variable {
            SweepVariable::SnrDb => cfg.snr_db = Some(value),
            SweepVariable::EbN0Db => cfg.snr_db = Some(ebn0_to_snr_db(value, self.modulation)),
            SweepVariable::IboDb => {
                let mut pa = cfg.pa.unwrap_or_default();
                pa.input_backoff_db = value;
                cfg.pa = Some(pa);
            }
            SweepVariable::AdcBits => {
                cfg.adc.enabled = true;
                cfg.adc.bits = value as u32;
            }
            SweepVariable::Depth => cfg.rc.depth = value as usize,
        }
        cfg
    }

    /// Reference-signal overhead `q / (q + n_d)`.
    pub fn overhead(&self) -> f64 {
        self.subframe.overhead()
    }

    /// Information bits carried by the data symbols of one subframe.
    pub fn data_bits_per_trial(&self) -> u64 {
        let s = &self.subframe;
        (s.n_d * s.n_sc * s.n_t * self.modulation.bits_per_symbol()) as u64
    }
}

/// `SNR = Eb/N0 + 10·log10(bits per symbol)`.
pub fn ebn0_to_snr_db(ebn0_db: f64, scheme: ModulationScheme) -> f64 {
    ebn0_db + 10.0 * (scheme.bits_per_symbol() as f64).log10()
}
