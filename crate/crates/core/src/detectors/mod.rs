//! Reservoir-computing symbol detectors.
//!
//! * [`time_rc`]: shallow time-domain RC with a delay search over the
//!   target offset.
//! * [`tf_rc`]: time-frequency RC, a time-domain readout followed by a
//!   fixed FFT and a unit-modulus per-subcarrier layer, fitted by
//!   alternating least squares.
//! * [`rcnet`]: sequential stacks of either building block.

pub mod artifact;
pub mod rcnet;
pub mod tf_rc;
pub mod time_rc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{frob2, CMatrix, PINV_REL_TOL};
use crate::ofdm::{ofdm_modulate, FrequencyGrid, ModulationScheme, SubframeConfig, TimeFrame};
use crate::scalar::Scalar;

pub use rcnet::{rcnet_detect, train_rcnet_deep_tf, train_rcnet_deep_time, RcLayer, RcnetKind, RcnetModel};
pub use tf_rc::{detect_tf_rc, tf_phase_update, tf_time_update, train_tf_rc, TfRc, TfReadout};
pub use time_rc::{detect_time_rc, train_time_rc, uniform_delay_grid, TimeRc, TimeReadout};

/// Reference symbols of one subframe: received frames paired with the
/// transmitted waveform and its frequency-domain symbols.
///
/// Only the `q` reference symbols ever enter a training set; data symbols
/// are never visible to a trainer.
#[derive(Debug, Clone)]
pub struct TrainingSet<T: Scalar> {
    pub cfg: SubframeConfig,
    /// `X_q`: received frames, `(n_cp + n_sc) x streams`.
    pub inputs: Vec<CMatrix<T>>,
    /// `X̃_q`: transmitted time-domain frames, `(n_cp + n_sc) x n_t`.
    pub time_targets: Vec<CMatrix<T>>,
    /// `Z_q`: transmitted symbols, `n_sc x n_t`.
    pub freq_targets: Vec<CMatrix<T>>,
}

impl<T: Scalar> TrainingSet<T> {
    /// Builds the set from received frames and the reference grids that produced them.
    pub fn new(cfg: SubframeConfig, received: &[TimeFrame<T>], reference: &[FrequencyGrid<T>]) -> Result<Self> {
        if received.is_empty() {
            return Err(Error::Config("training set needs at least one reference symbol".into()));
        }
        if received.len() != reference.len() {
            return Err(Error::Size(format!(
                "{} received frames for {} reference grids",
                received.len(),
                reference.len()
            )));
        }
        let mut time_targets = Vec::with_capacity(reference.len());
        for g in reference {
            time_targets.push(ofdm_modulate(g, &cfg)?.samples);
        }
        let set = Self {
            cfg,
            inputs: received.iter().map(|f| f.samples.clone()).collect(),
            time_targets,
            freq_targets: reference.iter().map(|g| g.symbols.clone()).collect(),
        };
        set.validate()?;
        Ok(set)
    }

    /// Same targets, different inputs (the next layer of a stack).
    pub fn with_inputs(&self, inputs: Vec<CMatrix<T>>) -> Result<Self> {
        let set = Self { inputs, ..self.clone() };
        set.validate()?;
        Ok(set)
    }

    pub fn batches(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_streams(&self) -> usize {
        self.inputs[0].ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.inputs.len();
        if q == 0 {
            return Err(Error::Config("training set needs at least one reference symbol".into()));
        }
        if self.time_targets.len() != q || self.freq_targets.len() != q {
            return Err(Error::Size("inputs and targets disagree on the number of batches".into()));
        }
        let len = self.cfg.frame_len();
        let streams = self.inputs[0].ncols();
        for x in &self.inputs {
            if x.nrows() != len || x.ncols() != streams {
                return Err(Error::Size(format!(
                    "input batch is {}x{}, expected {len}x{streams}",
                    x.nrows(),
                    x.ncols()
                )));
            }
        }
        for (xt, z) in self.time_targets.iter().zip(&self.freq_targets) {
            if xt.nrows() != len || xt.ncols() != self.cfg.n_t {
                return Err(Error::Size("time-domain target has the wrong shape".into()));
            }
            if z.nrows() != self.cfg.n_sc || z.ncols() != self.cfg.n_t {
                return Err(Error::Size("frequency-domain target has the wrong shape".into()));
            }
        }
        Ok(())
    }

    /// Gain that brings the training inputs to unit RMS per complex sample.
    pub fn input_gain(&self) -> T {
        let (energy, count) = self.inputs.iter().fold((T::zero(), 0usize), |(e, n), x| (e + frob2(x), n + x.len()));
        if energy == T::zero() {
            return T::one();
        }
        (T::from_usize(count).unwrap() / energy).sqrt()
    }
}

/// Solver knobs shared by the readout fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    /// Relative singular-value cutoff of the pseudo-inverse.
    pub pinv_rel_tol: f64,
    /// Tikhonov weight; zero gives the plain pseudo-inverse solution.
    pub ridge: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { pinv_rel_tol: PINV_REL_TOL, ridge: 0.0 }
    }
}

/// Objective values recorded while training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    /// One value per delay-grid point (time RC) or ALS iteration (TF RC),
    /// concatenated across layers for stacked models.
    pub objective_trace: Vec<f64>,
    /// The same values split per layer.
    pub layer_traces: Vec<Vec<f64>>,
    /// Final objective of each layer.
    pub layer_final: Vec<f64>,
    /// Objective after every half-step of an ALS fit (time-layer step, then
    /// phase step); empty for delay-searched layers.
    #[serde(default)]
    pub sub_steps: Vec<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl TrainDiagnostics {
    pub fn single(trace: Vec<f64>, final_objective: f64) -> Self {
        Self {
            objective_trace: trace.clone(),
            layer_traces: vec![trace],
            layer_final: vec![final_objective],
            sub_steps: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push_layer(&mut self, other: TrainDiagnostics) {
        self.objective_trace.extend(other.objective_trace.iter().copied());
        self.layer_traces.extend(other.layer_traces);
        self.layer_final.extend(other.layer_final);
        self.sub_steps.extend(other.sub_steps);
        self.warnings.extend(other.warnings);
    }

    pub fn final_objective(&self) -> f64 {
        self.layer_final.last().copied().unwrap_or(f64::NAN)
    }
}

/// Estimated symbols of one OFDM symbol and their hard bit decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T: Scalar> {
    pub grid: FrequencyGrid<T>,
    pub bits: Vec<u8>,
}

impl<T: Scalar> Detection<T> {
    pub fn from_grid(grid: FrequencyGrid<T>, scheme: ModulationScheme) -> Self {
        let bits = crate::ofdm::qam_demodulate(&grid.to_row_major(), scheme);
        Self { grid, bits }
    }
}

/// Least-squares readout `argmin_W ‖S W − target‖²` (optionally ridge-regularized).
pub(crate) fn fit_readout<T: Scalar>(states: &CMatrix<T>, target: &CMatrix<T>, opts: &TrainOptions) -> Result<CMatrix<T>> {
    readout_solver(states, opts).map(|p| p * target)
}

/// Matrix `M` with `argmin_W ‖S W − target‖² = M · target`.
pub(crate) fn readout_solver<T: Scalar>(states: &CMatrix<T>, opts: &TrainOptions) -> Result<CMatrix<T>> {
    let tol = T::lit(opts.pinv_rel_tol);
    if opts.ridge > 0.0 {
        // [S; √λ I] stacked: the ridge solution is the plain least-squares fit
        // of the augmented system against a zero-padded target
        let n = states.ncols();
        let m = states.nrows();
        let mut aug = CMatrix::zeros(m + n, n);
        aug.rows_mut(0, m).copy_from(states);
        let s = T::lit(opts.ridge.sqrt());
        for k in 0..n {
            aug[(m + k, k)] = Complex::new(s, T::zero());
        }
        let pinv = crate::numerics::pseudo_inverse(&aug, tol)?;
        Ok(pinv.columns(0, m).into_owned())
    } else {
        crate::numerics::pseudo_inverse(states, tol)
    }
}

/// Stacks matrices with equal column counts on top of each other.
pub(crate) fn vstack<T: Scalar>(blocks: &[CMatrix<T>]) -> CMatrix<T> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.rows_mut(r, b.nrows()).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Relative normal-equation residual `‖Sᴴ(S W − T)‖ / ‖Sᴴ T‖`.
pub fn normal_equation_residual<T: Scalar>(states: &CMatrix<T>, w: &CMatrix<T>, target: &CMatrix<T>) -> f64 {
    let sh = states.adjoint();
    let num = frob2(&(&sh * (states * w - target))).as_f64().sqrt();
    let den = frob2(&(&sh * target)).as_f64().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Derives the seed of layer `l` of a stack; layer 0 keeps the master seed
/// so a depth-1 stack matches its shallow counterpart.
pub fn layer_seed(master: u64, layer: usize) -> u64 {
    if layer == 0 {
        master
    } else {
        splitmix64(master ^ splitmix64(layer as u64))
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
