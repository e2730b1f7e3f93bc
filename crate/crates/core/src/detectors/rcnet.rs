//! RCNet: sequential stacks of time or time-frequency RC blocks.
//!
//! Layers are trained greedily, closest to the input first. Every layer
//! sees the trained output of the layer below and the same targets.

use serde::{Deserialize, Serialize};

use super::tf_rc::{train_tf_rc, TfRc};
use super::time_rc::{train_time_rc, TimeRc};
use super::{layer_seed, Detection, TrainDiagnostics, TrainOptions, TrainingSet};
use crate::error::{Error, Result};
use crate::numerics::{fft_columns, ifft_columns, CMatrix};
use crate::ofdm::{add_cyclic_prefix, strip_cyclic_prefix, FrequencyGrid, ModulationScheme, SubframeConfig, TimeFrame};
use crate::reservoir::ReservoirSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RcnetKind {
    DeepTime,
    DeepTf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RcLayer<T: Scalar> {
    Time(TimeRc<T>),
    Tf(TfRc<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcnetModel<T: Scalar> {
    pub kind: RcnetKind,
    pub layers: Vec<RcLayer<T>>,
}

/// Rebuilds a full-length time frame from a frequency-domain layer output:
/// inverse DFT, then the last `n_cp` samples are prepended as a CP.
pub fn rebuild_frame<T: Scalar>(z: &CMatrix<T>, n_cp: usize) -> CMatrix<T> {
    add_cyclic_prefix(&ifft_columns(z), n_cp)
}

fn layer_specs(specs: &[ReservoirSpec], depth: usize) -> Result<Vec<&ReservoirSpec>> {
    if depth == 0 {
        return Err(Error::Config("an RCNet needs at least one layer".into()));
    }
    match specs.len() {
        1 => Ok(vec![&specs[0]; depth]),
        n if n == depth => Ok(specs.iter().collect()),
        n => Err(Error::Config(format!("{n} reservoir specs for {depth} layers"))),
    }
}

/// Deep time RC with `depth` layers. `specs` holds either one spec shared
/// by all layers or one per layer.
pub fn train_rcnet_deep_time<T: Scalar>(
    train: &TrainingSet<T>,
    depth: usize,
    specs: &[ReservoirSpec],
    max_delay: usize,
    delay_grid: &[usize],
    seed: u64,
    opts: &TrainOptions,
) -> Result<(RcnetModel<T>, TrainDiagnostics)> {
    let specs = layer_specs(specs, depth)?;
    let mut current = train.clone();
    let mut layers = Vec::with_capacity(depth);
    let mut diag = TrainDiagnostics::default();
    for (l, spec) in specs.into_iter().enumerate() {
        let (layer, d) = train_time_rc(&current, spec, max_delay, delay_grid, layer_seed(seed, l), opts)?;
        diag.push_layer(d);
        if l + 1 < depth {
            let next = current.inputs.iter().map(|x| layer.forward(x)).collect::<Result<Vec<_>>>()?;
            current = current.with_inputs(next)?;
        }
        layers.push(RcLayer::Time(layer));
    }
    Ok((RcnetModel { kind: RcnetKind::DeepTime, layers }, diag))
}

/// Deep time-frequency RC with `depth` layers; between layers the
/// frequency output is brought back to a CP-extended time frame.
pub fn train_rcnet_deep_tf<T: Scalar>(
    train: &TrainingSet<T>,
    depth: usize,
    specs: &[ReservoirSpec],
    delay_grid: &[usize],
    max_als_iters: usize,
    tol: f64,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(RcnetModel<T>, TrainDiagnostics)> {
    let specs = layer_specs(specs, depth)?;
    let n_cp = train.cfg.n_cp;
    let mut current = train.clone();
    let mut layers = Vec::with_capacity(depth);
    let mut diag = TrainDiagnostics::default();
    for (l, spec) in specs.into_iter().enumerate() {
        let (layer, d) = train_tf_rc(&current, spec, delay_grid, max_als_iters, tol, layer_seed(seed, l), opts)?;
        diag.push_layer(d);
        if l + 1 < depth {
            let next = current
                .inputs
                .iter()
                .map(|x| layer.forward_freq(x, n_cp).map(|z| rebuild_frame(&z, n_cp)))
                .collect::<Result<Vec<_>>>()?;
            current = current.with_inputs(next)?;
        }
        layers.push(RcLayer::Tf(layer));
    }
    Ok((RcnetModel { kind: RcnetKind::DeepTf, layers }, diag))
}

impl<T: Scalar> RcnetModel<T> {
    /// Frequency-domain estimate `n_sc x n_t` of one received frame.
    pub fn forward_freq(&self, input: &CMatrix<T>, n_cp: usize) -> Result<CMatrix<T>> {
        if self.layers.is_empty() {
            return Err(Error::Untrained("RCNet has no layers".into()));
        }
        let mut x = input.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            match (self.kind, layer) {
                (RcnetKind::DeepTime, RcLayer::Time(m)) => {
                    x = m.forward(&x)?;
                    if l == last {
                        return Ok(fft_columns(&strip_cyclic_prefix(&x, n_cp)));
                    }
                }
                (RcnetKind::DeepTf, RcLayer::Tf(m)) => {
                    let z = m.forward_freq(&x, n_cp)?;
                    if l == last {
                        return Ok(z);
                    }
                    x = rebuild_frame(&z, n_cp);
                }
                _ => return Err(Error::Untrained(format!("layer {l} does not match the model kind"))),
            }
        }
        unreachable!("the last layer returns")
    }
}

/// Runs `frame` through every layer in training order and slices the
/// last layer's frequency-domain output.
pub fn rcnet_detect<T: Scalar>(
    model: &RcnetModel<T>,
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
