//! Time-frequency RC: time-domain readout, fixed FFT, and a unit-modulus
//! per-subcarrier output layer fitted by alternating least squares.

use num_complex::Complex;
use rayon::prelude::*;

use super::time_rc::batch_states;
use super::{readout_solver, vstack, Detection, TrainDiagnostics, TrainOptions, TrainingSet};
use crate::error::{Error, Result};
use crate::numerics::{fft_columns, frob2, ifft_columns, lstsq, CMatrix};
use crate::ofdm::{FrequencyGrid, ModulationScheme, SubframeConfig, TimeFrame};
use crate::reservoir::{init_reservoir, ReservoirSpec, ReservoirWeights};
use crate::scalar::{cabs, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct TfReadout<T: Scalar> {
    /// `n_neurons x n_t`
    pub w_tout: CMatrix<T>,
    /// `n_sc x n_t`; row `n` is the unit-modulus weight vector of subcarrier `n`.
    pub w_fout: CMatrix<T>,
    /// Delay of the training set the layers were fitted on.
    pub delay: usize,
    pub input_gain: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfRc<T: Scalar> {
    pub weights: ReservoirWeights<T>,
    pub readout: TfReadout<T>,
}

/// Closed-form phase step for one subcarrier.
///
/// `zbar_n` and `z_n` are `q x n_t`: the current frequency-domain outputs and
/// the targets across batches. Entry `j` of the result is
/// `exp(-j∠(z_jᴴ z̄_j))`, or `1` when the inner product vanishes.
pub fn tf_phase_update<T: Scalar>(zbar_n: &CMatrix<T>, z_n: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    if zbar_n.shape() != z_n.shape() {
        return Err(Error::Shape(format!(
            "outputs are {:?} but targets are {:?}",
            zbar_n.shape(),
            z_n.shape()
        )));
    }
    Ok((0..z_n.ncols())
        .map(|j| {
            let inner = z_n.column(j).iter().zip(zbar_n.column(j).iter()).fold(
                Complex::new(T::zero(), T::zero()),
                |acc, (z, zb)| acc + z.conj() * zb,
            );
            unit_phase_conj(inner)
        })
        .collect())
}

fn unit_phase_conj<T: Scalar>(inner: Complex<T>) -> Complex<T> {
    let mag = cabs(inner);
    if mag == T::zero() {
        Complex::new(T::one(), T::zero())
    } else {
        inner.conj().unscale(mag)
    }
}

/// Phase step applied to every subcarrier at once; `outputs[q]` and
/// `targets[q]` are `n_sc x n_t`.
fn phase_update_all<T: Scalar>(outputs: &[CMatrix<T>], targets: &[CMatrix<T>]) -> CMatrix<T> {
    let (n_sc, n_t) = targets[0].shape();
    CMatrix::from_fn(n_sc, n_t, |n, j| {
        let inner = outputs
            .iter()
            .zip(targets)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (y, z)| acc + z[(n, j)].conj() * y[(n, j)]);
        unit_phase_conj(inner)
    })
}

/// Least-squares time-layer step: with the frequency layer fixed, the
/// optimal readout maps the stacked CP-free states onto the inverse DFT of
/// the phase-compensated targets `Ẑ`.
///
/// `states` is `(q·n_sc) x n_neurons`, `z_hat` is `(q·n_sc) x n_t`, both
/// stacked batch after batch.
pub fn tf_time_update<T: Scalar>(
    states: &CMatrix<T>,
    z_hat: &CMatrix<T>,
    n_sc: usize,
    opts: &TrainOptions,
) -> Result<CMatrix<T>> {
    if n_sc == 0 || states.nrows() != z_hat.nrows() || !states.nrows().is_multiple_of(n_sc) {
        return Err(Error::Size(format!(
            "{} state rows and {} target rows do not split into {n_sc}-subcarrier batches",
            states.nrows(),
            z_hat.nrows()
        )));
    }
    let target = time_targets_of(z_hat, n_sc);
    if opts.ridge > 0.0 {
        Ok(readout_solver(states, opts)? * target)
    } else {
        lstsq(states, &target, T::lit(opts.pinv_rel_tol))
    }
}

fn time_targets_of<T: Scalar>(z_hat: &CMatrix<T>, n_sc: usize) -> CMatrix<T> {
    let blocks: Vec<CMatrix<T>> = (0..z_hat.nrows() / n_sc)
        .map(|q| ifft_columns(&z_hat.rows(q * n_sc, n_sc).into_owned()))
        .collect();
    vstack(&blocks)
}

/// `Σ_q ‖(Ȳ_q ∘ w) − Z_q‖²`
fn tf_objective<T: Scalar>(outputs: &[CMatrix<T>], w_fout: &CMatrix<T>, targets: &[CMatrix<T>]) -> f64 {
    outputs
        .iter()
        .zip(targets)
        .map(|(y, z)| frob2(&(y.component_mul(w_fout) - z)).as_f64())
        .sum()
}

/// CP-free reservoir states of every batch for delay `p`, `n_sc x n_neurons`
/// each: rows `n_cp + p .. n_cp + p + n_sc` of the states driven by the
/// tail-padded input.
pub fn tf_batch_states<T: Scalar>(
    batch_states: &[CMatrix<T>],
    train: &TrainingSet<T>,
    p: usize,
) -> Vec<CMatrix<T>> {
    let (n_cp, n_sc) = (train.cfg.n_cp, train.cfg.n_sc);
    batch_states.iter().map(|s| s.rows(n_cp + p, n_sc).into_owned()).collect()
}

struct AlsFit<T: Scalar> {
    w_tout: CMatrix<T>,
    w_fout: CMatrix<T>,
    trace: Vec<f64>,
    sub_steps: Vec<f64>,
    zero_states: bool,
}

/// ALS on the CP-free states of one delay.
fn fit_als<T: Scalar>(
    per_batch: &[CMatrix<T>],
    targets: &[CMatrix<T>],
    max_als_iters: usize,
    tol: f64,
    opts: &TrainOptions,
) -> Result<AlsFit<T>> {
    let (n_sc, n_t) = targets[0].shape();
    let stacked = vstack(per_batch);
    let solver = readout_solver(&stacked, opts)?;
    let mut w_fout = CMatrix::from_element(n_sc, n_t, Complex::new(T::one(), T::zero()));
    let mut w_tout = CMatrix::zeros(stacked.ncols(), n_t);
    let mut trace = Vec::with_capacity(max_als_iters);
    let mut sub_steps = Vec::with_capacity(2 * max_als_iters);

    for iter in 0..max_als_iters {
        let conj_w = w_fout.map(|w| w.conj());
        let z_hat: Vec<CMatrix<T>> = targets.iter().map(|z| z.component_mul(&conj_w)).collect();
        w_tout = &solver * time_targets_of(&vstack(&z_hat), n_sc);
        let outputs: Vec<CMatrix<T>> = per_batch.iter().map(|s| fft_columns(&(s * &w_tout))).collect();
        sub_steps.push(tf_objective(&outputs, &w_fout, targets));

        w_fout = phase_update_all(&outputs, targets);
        let obj = tf_objective(&outputs, &w_fout, targets);
        sub_steps.push(obj);
        if !obj.is_finite() {
            return Err(Error::Numeric(format!("objective became non-finite at ALS iteration {iter}")));
        }
        let prev = trace.last().copied();
        trace.push(obj);
        if obj == 0.0 || prev.is_some_and(|prev| prev - obj <= tol * prev) {
            break;
        }
    }
    Ok(AlsFit { w_tout, w_fout, trace, sub_steps, zero_states: frob2(&stacked) == T::zero() })
}

/// Trains a time-frequency RC. For every delay of `delay_grid` the states
/// of the delayed training set are fitted by at most `max_als_iters`
/// alternating passes (time-layer step, then phase step), stopping early
/// once the relative objective decrease falls below `tol`; the delay with
/// the smallest final objective wins, the first on ties.
///
/// `objective_trace` holds the winning delay's objective after each full
/// pass and `sub_steps` also the value after each time-layer step.
pub fn train_tf_rc<T: Scalar>(
    train: &TrainingSet<T>,
    spec: &ReservoirSpec,
    delay_grid: &[usize],
    max_als_iters: usize,
    tol: f64,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(TfRc<T>, TrainDiagnostics)> {
    train.validate()?;
    if max_als_iters == 0 {
        return Err(Error::Config("ALS needs at least one iteration".into()));
    }
    if delay_grid.is_empty() {
        return Err(Error::Config("delay grid is empty".into()));
    }
    let weights = init_reservoir::<T>(spec, train.n_streams(), seed)?;
    let gain = train.input_gain();
    let pad = *delay_grid.iter().max().unwrap();
    let states = batch_states(&weights, train, gain, pad, seed)?;

    let fits = delay_grid
        .par_iter()
        .map(|&p| fit_als(&tf_batch_states(&states, train, p), &train.freq_targets, max_als_iters, tol, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let final_of = |f: &AlsFit<T>| *f.trace.last().unwrap();
    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if final_of(f) < final_of(&fits[best]) {
            best = i;
        }
    }
    let mut fits = fits;
    let fit = fits.swap_remove(best);
    let mut diag = TrainDiagnostics::single(fit.trace.clone(), final_of(&fit));
    diag.sub_steps = fit.sub_steps;
    if fit.zero_states {
        diag.warnings.push("reservoir states are identically zero; readout is rank deficient".into());
    }
    let readout = TfReadout { w_tout: fit.w_tout, w_fout: fit.w_fout, delay: delay_grid[best], input_gain: gain };
    Ok((TfRc { weights, readout }, diag))
}

impl<T: Scalar> TfRc<T> {
    /// Frequency-domain output `n_sc x n_t` for a full-length input frame.
    pub fn forward_freq(&self, input: &CMatrix<T>, n_cp: usize) -> Result<CMatrix<T>> {
        let r = &self.readout;
        if r.w_tout.nrows() != self.weights.n_neurons() || r.w_fout.ncols() != r.w_tout.ncols() {
            return Err(Error::Untrained("time and frequency layers do not fit together".into()));
        }
        let n_sc = r.w_fout.nrows();
        if input.nrows() != n_cp + n_sc {
            return Err(Error::Size(format!(
                "frame has {} samples, the frequency layer expects {}",
                input.nrows(),
                n_cp + n_sc
            )));
        }
        let mut driven = CMatrix::zeros(input.nrows() + r.delay, input.ncols());
        driven.rows_mut(0, input.nrows()).copy_from(&input.map(|z| z.scale(r.input_gain)));
        let states = self.weights.run(&driven)?;
        let y = states.rows(n_cp + r.delay, n_sc) * &r.w_tout;
        Ok(fft_columns(&y).component_mul(&r.w_fout))
    }
}

/// Reservoir, time layer, CP removal, FFT, per-subcarrier phase weights, slicing.
pub fn detect_tf_rc<T: Scalar>(
    model: &TfRc<T>,
    frame: &TimeFrame<T>,
    cfg: &SubframeConfig,
    scheme: ModulationScheme,
) -> Result<Detection<T>> {
    if frame.len() != cfg.frame_len() {
        return Err(Error::Size(format!("frame has {} samples, expected {}", frame.len(), cfg.frame_len())));
    }
    let z = model.forward_freq(&frame.samples, cfg.n_cp)?;
    Ok(Detection::from_grid(FrequencyGrid::new(z), scheme))
}
