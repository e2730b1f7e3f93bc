//! Fixed-weight echo state network.
//!
//! States evolve as `s(t+1) = tanh(s(t)·W_s + u(t)·W_in + n(t))` with
//! `s(0) = 0`, where `u(t)` stacks the current and `window_len − 1` previous
//! input rows. `tanh` acts separately on the real and imaginary parts. The
//! feedback path is not modelled: its weights are identically zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{spectral_radius_real, CMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservoirSpec {
    pub n_neurons: usize,
    pub window_len: usize,
    pub spectral_radius: f64,
    /// Fraction of nonzero entries in `W_s`.
    pub w_s_sparsity: f64,
    /// `W_in` entries are uniform on `[-input_scale, input_scale]`.
    pub input_scale: f64,
    #[serde(default)]
    pub state_noise_std: f64,
    /// Leading state rows of each batch left out of time-domain readout fits.
    #[serde(default)]
    pub washout: usize,
}

impl Default for ReservoirSpec {
    fn default() -> Self {
        Self {
            n_neurons: 64,
            window_len: 16,
            spectral_radius: 0.2,
            w_s_sparsity: 0.2,
            input_scale: 0.03,
            state_noise_std: 0.003,
            washout: 0,
        }
    }
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 {
            return Err(Error::Config("reservoir needs at least one neuron".into()));
        }
        if self.window_len == 0 {
            return Err(Error::Config("input window must hold at least one sample".into()));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius < 1.0) {
            return Err(Error::Config(format!("spectral radius {} outside (0, 1)", self.spectral_radius)));
        }
        if !(self.w_s_sparsity > 0.0 && self.w_s_sparsity <= 1.0) {
            return Err(Error::Config(format!("W_s density {} outside (0, 1]", self.w_s_sparsity)));
        }
        if !(self.input_scale > 0.0) || !(self.state_noise_std >= 0.0) {
            return Err(Error::Config("input scale must be positive and state noise non-negative".into()));
        }
        Ok(())
    }
}

/// `W_s` and `W_in` of one reservoir. Both are real-valued.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights<T: Scalar> {
    pub spec: ReservoirSpec,
    /// Number of input streams (antennas) per time step.
    pub n_inputs: usize,
    pub seed: u64,
    pub w_s: DMatrix<T>,
    pub w_in: DMatrix<T>,
}

/// Draws a reservoir for `n_inputs` streams; identical seeds give identical weights.
pub fn init_reservoir<T: Scalar>(spec: &ReservoirSpec, n_inputs: usize, seed: u64) -> Result<ReservoirWeights<T>> {
    spec.validate()?;
    if n_inputs == 0 {
        return Err(Error::Config("reservoir needs at least one input stream".into()));
    }
    let n = spec.n_neurons;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let nnz = (spec.w_s_sparsity * (n * n) as f64).round() as usize;
    if nnz == 0 {
        return Err(Error::Config(format!(
            "density {} leaves no connections in a {n}-neuron reservoir",
            spec.w_s_sparsity
        )));
    }
    let mut w_s = DMatrix::<T>::zeros(n, n);
    for flat in sample(&mut rng, n * n, nnz).into_iter() {
        let mut v: f64 = rng.random_range(-1.0..1.0);
        while v == 0.0 {
            v = rng.random_range(-1.0..1.0);
        }
        w_s[(flat / n, flat % n)] = T::lit(v);
    }
    let rho = spectral_radius_real(&w_s)?;
    if rho.as_f64() <= f64::EPSILON {
        return Err(Error::Config(format!(
            "density {} with {n} neurons gave a nilpotent W_s; the spectral radius cannot be set",
            spec.w_s_sparsity
        )));
    }
    let gain = T::lit(spec.spectral_radius) / rho;
    w_s.iter_mut().for_each(|x| *x *= gain);

    let width = spec.window_len * n_inputs;
    let w_in = DMatrix::from_fn(width, n, |_, _| T::lit(rng.random_range(-spec.input_scale..=spec.input_scale)));

    Ok(ReservoirWeights { spec: spec.clone(), n_inputs, seed, w_s, w_in })
}

/// Split-complex hyperbolic tangent.
#[inline]
pub fn tanh_split<T: Scalar>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re.tanh(), z.im.tanh())
}

impl<T: Scalar> ReservoirWeights<T> {
    pub fn n_neurons(&self) -> usize {
        self.spec.n_neurons
    }

    /// Windowed input rows `u(t)`, real and imaginary parts separately.
    fn windowed(&self, input: &CMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
        let (len, m) = input.shape();
        let w = self.spec.window_len;
        let mut re = DMatrix::zeros(len, w * m);
        let mut im = DMatrix::zeros(len, w * m);
        for t in 0..len {
            for lag in 0..w.min(t + 1) {
                for i in 0..m {
                    let z = input[(t - lag, i)];
                    re[(t, lag * m + i)] = z.re;
                    im[(t, lag * m + i)] = z.im;
                }
            }
        }
        (re, im)
    }

    fn check_input(&self, input: &CMatrix<T>) -> Result<()> {
        if input.ncols() != self.n_inputs {
            return Err(Error::Size(format!(
                "input has {} streams, reservoir was built for {}",
                input.ncols(),
                self.n_inputs
            )));
        }
        Ok(())
    }

    /// State trajectory `[s(0); …; s(T−1)]` for a `T`-row input, starting from zero.
    pub fn run(&self, input: &CMatrix<T>) -> Result<CMatrix<T>> {
        self.run_from(None, input, None::<&mut ChaCha8Rng>)
    }

    /// Like [`run`](Self::run) but with the state-noise term drawn from `rng`.
    pub fn run_noisy<R: Rng + ?Sized>(&self, input: &CMatrix<T>, rng: &mut R) -> Result<CMatrix<T>> {
        self.run_from(None, input, Some(rng))
    }

    /// General form: optional initial state and optional noise source.
    pub fn run_from<R: Rng + ?Sized>(
        &self,
        initial: Option<&[Complex<T>]>,
        input: &CMatrix<T>,
        mut noise: Option<&mut R>,
    ) -> Result<CMatrix<T>> {
        self.check_input(input)?;
        let n = self.n_neurons();
        let len = input.nrows();
        let mut states = CMatrix::zeros(len, n);
        if len == 0 {
            return Ok(states);
        }

        let (u_re, u_im) = self.windowed(input);
        let drive_re = u_re * &self.w_in;
        let drive_im = u_im * &self.w_in;
        let w_s_t = self.w_s.transpose();

        let mut s_re = DVector::<T>::zeros(n);
        let mut s_im = DVector::<T>::zeros(n);
        if let Some(init) = initial {
            if init.len() != n {
                return Err(Error::Size(format!("initial state has {} entries, reservoir has {n}", init.len())));
            }
            for (k, z) in init.iter().enumerate() {
                s_re[k] = z.re;
                s_im[k] = z.im;
            }
        }
        let noise_dist = if self.spec.state_noise_std > 0.0 {
            Some(Normal::new(0.0, self.spec.state_noise_std).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };

        let mut a_re = DVector::<T>::zeros(n);
        let mut a_im = DVector::<T>::zeros(n);
        for t in 0..len {
            for k in 0..n {
                states[(t, k)] = Complex::new(s_re[k], s_im[k]);
            }
            if t + 1 == len {
                break;
            }
            a_re.gemv(T::one(), &w_s_t, &s_re, T::zero());
            a_im.gemv(T::one(), &w_s_t, &s_im, T::zero());
            for k in 0..n {
                let mut re = a_re[k] + drive_re[(t, k)];
                let mut im = a_im[k] + drive_im[(t, k)];
                if let (Some(dist), Some(rng)) = (noise_dist.as_ref(), noise.as_deref_mut()) {
                    re += T::lit(dist.sample(rng));
                    im += T::lit(dist.sample(rng));
                }
                s_re[k] = re.tanh();
                s_im[k] = im.tanh();
            }
        }
        Ok(states)
    }
}
