//! Per-trial random streams.
//!
//! Every random quantity of a run comes from a ChaCha8 generator keyed by
//! the master seed, with the stream number packing the trial index, the
//! sweep point and the component. Distinct triples therefore never share a
//! stream, and a trial can be replayed from the master seed alone.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Component {
    Channel = 0,
    Pilots = 1,
    Data = 2,
    Noise = 3,
    Reservoir = 4,
}

const POINT_BITS: u32 = 16;
const COMPONENT_BITS: u32 = 8;
/// Point index used by components that are shared across sweep points.
pub const SHARED_POINT: u32 = (1 << POINT_BITS) - 1;

/// Stream number of `(trial, point, component)`; injective for
/// `trial < 2^40` and `point < 2^16`.
pub fn stream_id(trial: u64, point: u32, component: Component) -> u64 {
    debug_assert!(trial < 1 << (64 - POINT_BITS - COMPONENT_BITS));
    (trial << (POINT_BITS + COMPONENT_BITS)) | ((point as u64) << COMPONENT_BITS) | component as u64
}

pub fn component_rng(master: u64, trial: u64, point: u32, component: Component) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(trial, point, component));
    rng
}

/// Seeds of one trial as recorded in the run manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub trial: u64,
    /// Seed of the first reservoir; deeper RCNet layers derive theirs from it.
    pub reservoir: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, trial: u64) -> Self {
        let reservoir = component_rng(master, trial, SHARED_POINT, Component::Reservoir).next_u64();
        Self { trial, reservoir }
    }
}
