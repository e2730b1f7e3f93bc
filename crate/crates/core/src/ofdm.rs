//! QAM mapping and the CP-OFDM modulate/demodulate chain.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fft_columns, ifft_columns, CMatrix};
use crate::scalar::Scalar;

/// Square QAM alphabets with a frozen Gray labelling.
///
/// Bits map MSB-first to a constellation index. Per axis the Gray code is
/// `0 -> +1` for QPSK and `00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3` for
/// 16-QAM; the first bit pair drives the in-phase axis. Both alphabets are
/// scaled to unit average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulationScheme {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl ModulationScheme {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Qpsk => 2,
            ModulationScheme::Qam16 => 4,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    fn axis_level(self, bits: &[u8]) -> f64 {
        match self {
            ModulationScheme::Qpsk => {
                if bits[0] == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            ModulationScheme::Qam16 => match (bits[0], bits[1]) {
                (0, 0) => 3.0,
                (0, _) => 1.0,
                (_, 1) => -1.0,
                _ => -3.0,
            },
        }
    }

    fn scale(self) -> f64 {
        match self {
            ModulationScheme::Qpsk => std::f64::consts::FRAC_1_SQRT_2,
            ModulationScheme::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    /// Constellation points indexed by their bit label.
    pub fn constellation<T: Scalar>(self) -> Vec<Complex<T>> {
        let k = self.bits_per_symbol();
        (0..self.order())
            .map(|idx| {
                let bits = index_to_bits(idx, k);
                let half = k / 2;
                let re = self.axis_level(&bits[..half]) * self.scale();
                let im = self.axis_level(&bits[half..]) * self.scale();
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect()
    }

    /// Bit label of constellation index `idx`.
    pub fn label(self, idx: usize) -> Vec<u8> {
        index_to_bits(idx, self.bits_per_symbol())
    }
}

fn index_to_bits(idx: usize, k: usize) -> Vec<u8> {
    (0..k).map(|b| ((idx >> (k - 1 - b)) & 1) as u8).collect()
}

fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// Maps a bit sequence onto constellation points.
pub fn qam_modulate<T: Scalar>(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<Complex<T>>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::Framing(format!(
            "{} bits is not a multiple of {} bits per symbol",
            bits.len(),
            k
        )));
    }
    let table = scheme.constellation::<T>();
    Ok(bits.chunks(k).map(|chunk| table[bits_to_index(chunk)]).collect())
}

/// Index of the nearest constellation point; ties go to the lowest index.
pub fn nearest_index<T: Scalar>(z: Complex<T>, table: &[Complex<T>]) -> usize {
    let mut best = 0;
    let mut best_d = (z - table[0]).norm_sqr();
    for (i, p) in table.iter().enumerate().skip(1) {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Hard nearest-neighbour demapping.
pub fn qam_demodulate<T: Scalar>(symbols: &[Complex<T>], scheme: ModulationScheme) -> Vec<u8> {
    let table = scheme.constellation::<T>();
    let mut bits = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol());
    for &z in symbols {
        bits.extend(scheme.label(nearest_index(z, &table)));
    }
    bits
}

/// Snaps every symbol to its nearest constellation point.
pub fn slice_symbols<T: Scalar>(symbols: &[Complex<T>], scheme: ModulationScheme) -> Vec<Complex<T>> {
    let table = scheme.constellation::<T>();
    symbols.iter().map(|&z| table[nearest_index(z, &table)]).collect()
}

/// Dimensions of one subframe: `q` reference symbols followed by `n_d` data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubframeConfig {
    pub n_sc: usize,
    pub n_cp: usize,
    pub q: usize,
    pub n_d: usize,
    pub n_t: usize,
    pub n_r: usize,
}

impl SubframeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sc == 0 || self.n_t == 0 || self.n_r == 0 {
            return Err(Error::Config("n_sc, n_t and n_r must be positive".into()));
        }
        if self.n_cp >= self.n_sc {
            return Err(Error::Config(format!("cyclic prefix {} must be shorter than {} subcarriers", self.n_cp, self.n_sc)));
        }
        if self.q == 0 || self.n_d == 0 {
            return Err(Error::Config("need at least one reference and one data symbol".into()));
        }
        Ok(())
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn frame_len(&self) -> usize {
        self.n_cp + self.n_sc
    }

    /// Reference-signal overhead `q / (q + n_d)`.
    pub fn overhead(&self) -> f64 {
        self.q as f64 / (self.q + self.n_d) as f64
    }
}

/// Per-subcarrier MIMO symbols of one OFDM symbol, `n_sc x n_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T: Scalar> {
    pub symbols: CMatrix<T>,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(symbols: CMatrix<T>) -> Self {
        Self { symbols }
    }

    pub fn n_sc(&self) -> usize {
        self.symbols.nrows()
    }

    pub fn n_streams(&self) -> usize {
        self.symbols.ncols()
    }

    /// Symbols in subcarrier-major order (all streams of subcarrier 0 first).
    pub fn to_row_major(&self) -> Vec<Complex<T>> {
        let mut out = Vec::with_capacity(self.symbols.len());
        for row in self.symbols.row_iter() {
            out.extend(row.iter().copied());
        }
        out
    }

    /// Inverse of [`FrequencyGrid::to_row_major`].
    pub fn from_row_major(values: &[Complex<T>], n_sc: usize, n_streams: usize) -> Result<Self> {
        if values.len() != n_sc * n_streams {
            return Err(Error::Size(format!("{} symbols for a {n_sc}x{n_streams} grid", values.len())));
        }
        Ok(Self::new(CMatrix::from_row_slice(n_sc, n_streams, values)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameRole {
    Transmitted,
    Received,
}

/// One time-domain OFDM symbol, `(n_cp + n_sc) x antennas`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame<T: Scalar> {
    pub samples: CMatrix<T>,
    pub role: FrameRole,
}

impl<T: Scalar> TimeFrame<T> {
    pub fn new(samples: CMatrix<T>, role: FrameRole) -> Self {
        Self { samples, role }
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn antennas(&self) -> usize {
        self.samples.ncols()
    }

    pub fn mean_power(&self) -> T {
        let n = T::from_usize(self.samples.len().max(1)).unwrap();
        self.samples.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()) / n
    }
}

/// Prepends the last `n_cp` rows of `body`.
pub fn add_cyclic_prefix<T: Scalar>(body: &CMatrix<T>, n_cp: usize) -> CMatrix<T> {
    let n = body.nrows();
    CMatrix::from_fn(n + n_cp, body.ncols(), |r, c| {
        if r < n_cp {
            body[(n - n_cp + r, c)]
        } else {
            body[(r - n_cp, c)]
        }
    })
}

/// Drops the first `n_cp` rows.
pub fn strip_cyclic_prefix<T: Scalar>(frame: &CMatrix<T>, n_cp: usize) -> CMatrix<T> {
    frame.rows(n_cp, frame.nrows() - n_cp).into_owned()
}

/// Per-antenna IFFT followed by cyclic-prefix insertion.
pub fn ofdm_modulate<T: Scalar>(grid: &FrequencyGrid<T>, cfg: &SubframeConfig) -> Result<TimeFrame<T>> {
    if grid.n_sc() != cfg.n_sc || grid.n_streams() != cfg.n_t {
        return Err(Error::Size(format!(
            "grid is {}x{}, subframe expects {}x{}",
            grid.n_sc(),
            grid.n_streams(),
            cfg.n_sc,
            cfg.n_t
        )));
    }
    let body = ifft_columns(&grid.symbols);
    Ok(TimeFrame::new(add_cyclic_prefix(&body, cfg.n_cp), FrameRole::Transmitted))
}

/// Cyclic-prefix removal followed by a per-antenna FFT.
pub fn ofdm_demodulate<T: Scalar>(frame: &TimeFrame<T>, cfg: &SubframeConfig) -> Result<FrequencyGrid<T>> {
    if frame.len() != cfg.frame_len() {
        return Err(Error::Size(format!(
            "frame has {} samples, expected {}",
            frame.len(),
            cfg.frame_len()
        )));
    }
    Ok(FrequencyGrid::new(fft_columns(&strip_cyclic_prefix(&frame.samples, cfg.n_cp))))
}

/// Peak-to-average power ratio in dB, peak over mean instantaneous power
/// across every sample of the frame.
pub fn papr_db<T: Scalar>(frame: &TimeFrame<T>) -> Result<f64> {
    let mean = frame.mean_power().as_f64();
    if frame.is_empty() || mean == 0.0 {
        return Err(Error::Undefined("PAPR of an all-zero frame".into()));
    }
    let peak = frame.samples.iter().map(|z| z.norm_sqr().as_f64()).fold(0.0, f64::max);
    Ok(10.0 * (peak / mean).log10())
}
