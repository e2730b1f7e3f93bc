//! Transmit/receive distortion chain: RAPP power amplifier, multipath
//! channel, additive noise and low-resolution ADCs.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, MatrixRecord};
use crate::ofdm::{FrameRole, TimeFrame};
use crate::scalar::{cabs, Scalar};

/// RAPP solid-state amplifier with input back-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaConfig {
    pub rho: f64,
    pub x_sat: f64,
    pub input_backoff_db: f64,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self { rho: 3.0, x_sat: 1.0, input_backoff_db: 8.0 }
    }
}

impl PaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.x_sat > 0.0) || !self.input_backoff_db.is_finite() {
            return Err(Error::Config(format!("invalid PA configuration {self:?}")));
        }
        Ok(())
    }

    /// Mean PA input power that realizes the configured back-off.
    pub fn target_input_power(&self) -> f64 {
        self.x_sat * self.x_sat / 10f64.powf(self.input_backoff_db / 10.0)
    }
}

/// AM/AM RAPP compression; the phase of `x` is preserved.
pub fn rapp_pa<T: Scalar>(x: Complex<T>, cfg: &PaConfig) -> Complex<T> {
    let r = cabs(x);
    if r == T::zero() {
        return x;
    }
    let two_rho = T::lit(2.0 * cfg.rho);
    let x_sat = T::lit(cfg.x_sat);
    let ratio = r / x_sat;
    let magnitude = if ratio <= T::one() {
        r / (T::one() + ratio.powf(two_rho)).powf(T::one() / two_rho)
    } else {
        // same curve, arranged so rounding never lifts the output above x_sat
        x_sat / (T::one() + ratio.powf(-two_rho)).powf(T::one() / two_rho)
    };
    x.scale(magnitude / r)
}

/// Gain applied ahead of the PA so a signal of `nominal_power` hits the
/// configured back-off.
pub fn backoff_gain(cfg: &PaConfig, nominal_power: f64) -> f64 {
    (cfg.target_input_power() / nominal_power).sqrt()
}

/// Scales `frame` to the back-off operating point, then compresses every sample.
pub fn apply_pa<T: Scalar>(frame: &TimeFrame<T>, cfg: &PaConfig, nominal_power: f64) -> TimeFrame<T> {
    let g = T::lit(backoff_gain(cfg, nominal_power));
    TimeFrame::new(frame.samples.map(|z| rapp_pa(z.scale(g), cfg)), frame.role)
}

/// Mid-rise uniform quantizer with `2^bits` levels and clipping at `a_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub delta: f64,
    pub a_max: f64,
}

impl Quantizer {
    pub fn new(bits: u32, a_max: f64) -> Result<Self> {
        if bits == 0 || !(a_max > 0.0) || !a_max.is_finite() {
            return Err(Error::Config(format!("quantizer needs bits >= 1 and a_max > 0 (bits={bits}, a_max={a_max})")));
        }
        let levels = 2f64.powi(bits as i32) - 1.0;
        Ok(Self { delta: 2.0 * a_max / levels, a_max })
    }

    pub fn quantize<T: Scalar>(&self, x: T) -> T {
        quantize_adc(x, self.delta, self.a_max)
    }
}

/// One ADC branch: `Δ⌈x/Δ⌉ − Δ/2` inside the range, `A_max·sign(x)` outside.
pub fn quantize_adc<T: Scalar>(x: T, delta: f64, a_max: f64) -> T {
    let xf = x.as_f64();
    if xf.abs() < a_max {
        T::lit(delta * (xf / delta).ceil() - delta / 2.0)
    } else if xf >= 0.0 {
        T::lit(a_max)
    } else {
        T::lit(-a_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub enabled: bool,
    pub bits: u32,
    /// Fixed clip amplitude; when absent each antenna clips at
    /// `clip_factor` times the per-component RMS of its input.
    #[serde(default)]
    pub a_max: Option<f64>,
    #[serde(default = "default_clip_factor")]
    pub clip_factor: f64,
}

fn default_clip_factor() -> f64 {
    3.0
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self { enabled: false, bits: 1, a_max: None, clip_factor: default_clip_factor() }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 {
            return Err(Error::Config("ADC needs at least one bit".into()));
        }
        if let Some(a) = self.a_max {
            if !(a > 0.0) {
                return Err(Error::Config(format!("ADC clip amplitude must be positive, got {a}")));
            }
        }
        if !(self.clip_factor > 0.0) {
            return Err(Error::Config("ADC clip factor must be positive".into()));
        }
        Ok(())
    }
}

/// Quantizes the in-phase and quadrature parts of every antenna stream.
/// A disabled ADC passes the frame through untouched.
pub fn apply_adc<T: Scalar>(frame: &TimeFrame<T>, cfg: &AdcConfig) -> Result<TimeFrame<T>> {
    if !cfg.enabled {
        return Ok(frame.clone());
    }
    let mut out = frame.samples.clone();
    for (a, mut col) in out.column_iter_mut().enumerate() {
        let a_max = match cfg.a_max {
            Some(v) => v,
            None => {
                let p: f64 = frame.samples.column(a).iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>()
                    / frame.len().max(1) as f64;
                let rms = (p / 2.0).sqrt();
                if rms == 0.0 {
                    continue;
                }
                cfg.clip_factor * rms
            }
        };
        let q = Quantizer::new(cfg.bits, a_max)?;
        for z in col.iter_mut() {
            *z = Complex::new(q.quantize(z.re), q.quantize(z.im));
        }
    }
    Ok(TimeFrame::new(out, frame.role))
}

/// Exponential power-delay profile for the tap-delay-line Rayleigh channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub taps: usize,
    pub decay_db_per_tap: f64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self { taps: 3, decay_db_per_tap: 6.0 }
    }
}

impl ChannelProfile {
    /// Per-tap average powers, normalized to sum to one.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.taps).map(|l| 10f64.powf(-self.decay_db_per_tap * l as f64 / 10.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// MIMO FIR channel; `taps[l]` is the `n_r x n_t` coupling at delay `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Scalar> {
    pub taps: Vec<CMatrix<T>>,
}

impl<T: Scalar> ChannelRealization<T> {
    /// Single unit tap coupling antenna `i` to antenna `i`.
    pub fn identity(n: usize) -> Self {
        Self { taps: vec![CMatrix::identity(n, n)] }
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn n_r(&self) -> usize {
        self.taps[0].nrows()
    }

    pub fn n_t(&self) -> usize {
        self.taps[0].ncols()
    }

    /// Channel matrix on subcarrier `n` of an `n_sc`-point DFT: `Σ_l h_l e^{-j2πnl/n_sc}`.
    pub fn frequency_response(&self, n: usize, n_sc: usize) -> CMatrix<T> {
        let mut h = CMatrix::zeros(self.n_r(), self.n_t());
        for (l, tap) in self.taps.iter().enumerate() {
            let th = -std::f64::consts::TAU * ((n * l) % n_sc) as f64 / n_sc as f64;
            h += tap.map(|z| z * Complex::new(T::lit(th.cos()), T::lit(th.sin())));
        }
        h
    }

    pub fn to_records(&self) -> Vec<MatrixRecord> {
        self.taps.iter().map(MatrixRecord::from_complex).collect()
    }

    pub fn from_records(records: &[MatrixRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Config("channel needs at least one tap".into()));
        }
        let taps = records.iter().map(|r| r.to_complex()).collect::<Result<Vec<_>>>()?;
        Ok(Self { taps })
    }
}

/// Complex Gaussian sample with total variance `var`.
pub fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex<T> {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::lit(re * s), T::lit(im * s))
}

/// Draws i.i.d. Rayleigh taps with the profile's power-delay shape.
pub fn generate_channel<T: Scalar, R: Rng + ?Sized>(
    profile: &ChannelProfile,
    n_r: usize,
    n_t: usize,
    n_cp: usize,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    if profile.taps == 0 {
        return Err(Error::Config("channel needs at least one tap".into()));
    }
    if profile.taps > n_cp.max(1) {
        return Err(Error::Config(format!(
            "{} channel taps exceed the {}-sample cyclic prefix",
            profile.taps, n_cp
        )));
    }
    let taps = profile
        .tap_powers()
        .into_iter()
        .map(|p| CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng, p)))
        .collect();
    Ok(ChannelRealization { taps })
}

/// Per receive antenna, the sum over transmit streams of their FIR
/// convolution with the corresponding taps, truncated to the frame length.
pub fn apply_channel<T: Scalar>(frame: &TimeFrame<T>, ch: &ChannelRealization<T>) -> Result<TimeFrame<T>> {
    if frame.antennas() != ch.n_t() {
        return Err(Error::Size(format!(
            "frame has {} streams, channel expects {}",
            frame.antennas(),
            ch.n_t()
        )));
    }
    let len = frame.len();
    let mut out = CMatrix::zeros(len, ch.n_r());
    for (l, tap) in ch.taps.iter().enumerate() {
        if l >= len {
            break;
        }
        let src = frame.samples.rows(0, len - l);
        let contrib = src * tap.transpose();
        let mut dst = out.rows_mut(l, len - l);
        dst += contrib;
    }
    Ok(TimeFrame::new(out, FrameRole::Received))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Received SNR in dB; `+inf` disables the noise.
    pub snr_db: f64,
}

/// Noise variance per complex sample that yields `snr_db` for a signal of
/// mean power `signal_power`.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        signal_power / 10f64.powf(snr_db / 10.0)
    }
}

/// Adds complex Gaussian noise of per-sample variance `var`.
pub fn add_noise<T: Scalar, R: Rng + ?Sized>(frame: &TimeFrame<T>, var: f64, rng: &mut R) -> TimeFrame<T> {
    if var == 0.0 {
        return frame.clone();
    }
    TimeFrame::new(frame.samples.map(|z| z + complex_gaussian(rng, var)), frame.role)
}

/// Additive white Gaussian noise at the frame's measured mean power.
pub fn awgn<T: Scalar, R: Rng + ?Sized>(frame: &TimeFrame<T>, noise: &NoiseConfig, rng: &mut R) -> TimeFrame<T> {
    let var = noise_variance(frame.mean_power().as_f64(), noise.snr_db);
    add_noise(frame, var, rng)
}
