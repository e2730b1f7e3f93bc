//! Reservoir-computing symbol detection for MIMO-OFDM links.
//!
//! The crate is generic over the real scalar type through [`Scalar`]; the
//! `*64` / `*32` aliases below fix it for the common cases.

pub mod baselines;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod impairments;
pub mod numerics;
pub mod ofdm;
pub mod reservoir;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CMatrix64 = numerics::CMatrix<f64>;
pub type CMatrix32 = numerics::CMatrix<f32>;
pub type FrequencyGrid64 = ofdm::FrequencyGrid<f64>;
pub type FrequencyGrid32 = ofdm::FrequencyGrid<f32>;
pub type TimeFrame64 = ofdm::TimeFrame<f64>;
pub type TimeFrame32 = ofdm::TimeFrame<f32>;
pub type ChannelRealization64 = impairments::ChannelRealization<f64>;
pub type ReservoirWeights64 = reservoir::ReservoirWeights<f64>;
pub type ReservoirWeights32 = reservoir::ReservoirWeights<f32>;

pub type TrainingSet64 = detectors::TrainingSet<f64>;
pub type TrainingSet32 = detectors::TrainingSet<f32>;
pub type TimeRc64 = detectors::TimeRc<f64>;
pub type TimeRc32 = detectors::TimeRc<f32>;
pub type TfRc64 = detectors::TfRc<f64>;
pub type TfRc32 = detectors::TfRc<f32>;
pub type RcnetModel64 = detectors::RcnetModel<f64>;
pub type RcnetModel32 = detectors::RcnetModel<f32>;
