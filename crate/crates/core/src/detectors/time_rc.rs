//! Shallow time-domain RC with a delay-offset search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit_readout, layer_seed, vstack, Detection, TrainDiagnostics, TrainOptions, TrainingSet};
use crate::error::{Error, Result};
use crate::numerics::{fft_columns, frob2, CMatrix};
use crate::ofdm::{strip_cyclic_prefix, FrequencyGrid, ModulationScheme, SubframeConfig, TimeFrame};
use crate::reservoir::{init_reservoir, ReservoirSpec, ReservoirWeights};
use crate::scalar::Scalar;

/// Readout of a time-domain RC: `y(t) = s(t) W_tout`, read `p_star` samples late.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeReadout<T: Scalar> {
    /// `n_neurons x n_t`
    pub w_tout: CMatrix<T>,
    pub p_star: usize,
    /// Scalar applied to the input before it enters the reservoir.
    pub input_gain: T,
}

/// A trained time-domain RC: reservoir plus readout.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRc<T: Scalar> {
    pub weights: ReservoirWeights<T>,
    pub readout: TimeReadout<T>,
}

/// `points` delays spread evenly over `0..=max_delay`, rounded and deduplicated.
pub fn uniform_delay_grid(points: usize, max_delay: usize) -> Vec<usize> {
    match points {
        0 => Vec::new(),
        1 => vec![0],
        _ => {
            let mut grid: Vec<usize> = (0..points)
                .map(|i| ((i * max_delay) as f64 / (points - 1) as f64).round() as usize)
                .collect();
            grid.dedup();
            grid
        }
    }
}

fn pad_rows<T: Scalar>(m: &CMatrix<T>, head: usize, tail: usize) -> CMatrix<T> {
    let mut out = CMatrix::zeros(m.nrows() + head + tail, m.ncols());
    out.rows_mut(head, m.nrows()).copy_from(m);
    out
}

/// State and target matrices of the `p`-delayed training set, stacked over
/// all batches: inputs are zero-padded by `p` rows at the tail, targets by
/// `p` rows at the head, and the first `washout` rows of each batch dropped.
pub fn delayed_design<T: Scalar>(
    batch_states: &[CMatrix<T>],
    train: &TrainingSet<T>,
    p: usize,
    washout: usize,
) -> (CMatrix<T>, CMatrix<T>) {
    let len = train.cfg.frame_len();
    let rows = len + p;
    let skip = washout.min(rows);
    let states: Vec<CMatrix<T>> = batch_states.iter().map(|s| s.rows(skip, rows - skip).into_owned()).collect();
    let targets: Vec<CMatrix<T>> = train
        .time_targets
        .iter()
        .map(|x| pad_rows(x, p, 0).rows(skip, rows - skip).into_owned())
        .collect();
    (vstack(&states), vstack(&targets))
}

/// Reservoir states of every batch driven by `[g·X_q; 0_pad]`.
pub fn batch_states<T: Scalar>(
    weights: &ReservoirWeights<T>,
    train: &TrainingSet<T>,
    gain: T,
    pad: usize,
    noise_seed: u64,
) -> Result<Vec<CMatrix<T>>> {
    train
        .inputs
        .iter()
        .enumerate()
        .map(|(q, x)| {
            let input = pad_rows(&x.map(|z| z.scale(gain)), 0, pad);
            if weights.spec.state_noise_std > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(layer_seed(noise_seed, q + 1));
                weights.run_noisy(&input, &mut rng)
            } else {
                weights.run(&input)
            }
        })
        .collect()
}

/// Trains a time-domain RC: for each delay in `delay_grid`, solves the
/// least-squares readout and keeps the delay with the smallest objective.
///
/// The diagnostics trace holds the objective of every grid point in grid order.
pub fn train_time_rc<T: Scalar>(
    train: &TrainingSet<T>,
    spec: &ReservoirSpec,
    max_delay: usize,
    delay_grid: &[usize],
    seed: u64,
    opts: &TrainOptions,
) -> Result<(TimeRc<T>, TrainDiagnostics)> {
    train.validate()?;
    if delay_grid.is_empty() {
        return Err(Error::Config("delay grid is empty".into()));
    }
    if let Some(bad) = delay_grid.iter().find(|&&p| p > max_delay) {
        return Err(Error::Config(format!("delay {bad} exceeds the maximum delay {max_delay}")));
    }
    let weights = init_reservoir::<T>(spec, train.n_streams(), seed)?;
    let gain = train.input_gain();
    let pad = *delay_grid.iter().max().unwrap();
    let states = batch_states(&weights, train, gain, pad, seed)?;

    let fits: Vec<Result<(CMatrix<T>, f64, bool)>> = delay_grid
        .par_iter()
        .map(|&p| {
            let (s, target) = delayed_design(&states, train, p, spec.washout);
            let w = fit_readout(&s, &target, opts)?;
            let obj = frob2(&(&s * &w - &target)).as_f64();
            if !obj.is_finite() {
                return Err(Error::Numeric(format!("non-finite objective at delay {p}")));
            }
            Ok((w, obj, frob2(&s) == T::zero()))
        })
        .collect();
    let mut fits = fits.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if f.1 < fits[best].1 {
            best = i;
        }
    }
    let trace: Vec<f64> = fits.iter().map(|f| f.1).collect();
    let mut diag = TrainDiagnostics::single(trace, fits[best].1);
    if fits[best].2 {
        diag.warnings.push("reservoir states are identically zero; readout is rank deficient".into());
    }
    let (w_tout, _, _) = fits.swap_remove(best);
    let readout = TimeReadout { w_tout, p_star: delay_grid[best], input_gain: gain };
    Ok((TimeRc { weights, readout }, diag))
}

impl<T: Scalar> TimeRc<T> {
    /// Time-domain estimate aligned with the input frame: the input is
    /// zero-padded by `p_star` rows and the first `p_star` outputs dropped.
    pub fn forward(&self, input: &CMatrix<T>) -> Result<CMatrix<T>> {
        let p = self.readout.p_star;
        if self.readout.w_tout.nrows() != self.weights.n_neurons() {
            return Err(Error::Untrained("readout does not match the reservoir size".into()));
        }
        let padded = pad_rows(&input.map(|z| z.scale(self.readout.input_gain)), 0, p);
        let states = self.weights.run(&padded)?;
        let y = states * &self.readout.w_tout;
        Ok(y.rows(p, input.nrows()).into_owned())
    }

    pub fn n_outputs(&self) -> usize {
        self.readout.w_tout.ncols()
    }
}

/// Runs the reservoir on `frame`, reads out, undoes the delay, strips the
/// CP, transforms to frequency and slices to the constellation.
pub fn detect_time_rc<T: Scalar>(
    model: &TimeRc<T>,
    frame: &TimeFrame<T>,
    cfg: &SubframeConfig,
    scheme: ModulationScheme,
) -> Result<Detection<T>> {
    if frame.len() != cfg.frame_len() {
        return Err(Error::Size(format!("frame has {} samples, expected {}", frame.len(), cfg.frame_len())));
    }
    let y = model.forward(&frame.samples)?;
    let grid = FrequencyGrid::new(fft_columns(&strip_cyclic_prefix(&y, cfg.n_cp)));
    Ok(Detection::from_grid(grid, scheme))
}
