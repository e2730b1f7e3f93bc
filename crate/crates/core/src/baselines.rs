//! Conventional receivers: per-subcarrier LMMSE channel estimation and
//! equalization, and exact maximum-likelihood sphere decoding.
//!
//! Both assume a linear link. With at most `n_cp` channel taps the OFDM
//! transform diagonalizes the channel, so every subcarrier is an
//! independent narrowband `y = H z + n` problem.

use nalgebra::DVector;
use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::CMatrix;
use crate::ofdm::{FrequencyGrid, ModulationScheme, SubframeConfig};
use crate::scalar::Scalar;

/// Per-subcarrier channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyChannelEstimate<T: Scalar> {
    /// `n_sc` matrices of size `n_r x n_t`.
    pub h: Vec<CMatrix<T>>,
    /// Noise variance per frequency-domain sample.
    pub noise_var: T,
}

/// `(AᴴA + λI)⁻¹ Aᴴ B` through a Cholesky solve; fails only when the
/// system is singular, which needs `λ = 0` and a rank-deficient `A`.
fn regularized_solve<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>, lambda: T) -> Result<CMatrix<T>> {
    let ah = a.adjoint();
    let mut gram = &ah * a;
    for k in 0..gram.nrows() {
        gram[(k, k)] += Complex::new(lambda, T::zero());
    }
    let rhs = ah * b;
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("regularized normal equations are singular".into())),
    }
}

/// Fits `rx = tx·Hᵀ` on every subcarrier over the `q` pilot symbols.
///
/// `rx[q]` is `n_sc x n_r` and `tx[q]` is `n_sc x n_t`.
pub fn lmmse_channel_estimate<T: Scalar>(
    rx: &[FrequencyGrid<T>],
    tx: &[FrequencyGrid<T>],
    noise_var: T,
) -> Result<FrequencyChannelEstimate<T>> {
    if rx.is_empty() || rx.len() != tx.len() {
        return Err(Error::Size(format!("{} received and {} transmitted pilot grids", rx.len(), tx.len())));
    }
    if noise_var < T::zero() || !noise_var.is_finite() {
        return Err(Error::Config(format!("noise variance {noise_var} must be finite and non-negative")));
    }
    let n_sc = tx[0].n_sc();
    let (n_t, n_r) = (tx[0].n_streams(), rx[0].n_streams());
    if rx.iter().any(|g| g.symbols.shape() != (n_sc, n_r)) || tx.iter().any(|g| g.symbols.shape() != (n_sc, n_t)) {
        return Err(Error::Shape("pilot grids disagree in size".into()));
    }
    let q = tx.len();
    let h = (0..n_sc)
        .map(|n| {
            let p = CMatrix::from_fn(q, n_t, |k, j| tx[k].symbols[(n, j)]);
            let y = CMatrix::from_fn(q, n_r, |k, i| rx[k].symbols[(n, i)]);
            regularized_solve(&p, &y, noise_var).map(|g| g.transpose())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyChannelEstimate { h, noise_var })
}

/// `ẑ(n) = (HᴴH + σ²I)⁻¹ Hᴴ y(n)` on every subcarrier.
pub fn lmmse_equalize<T: Scalar>(est: &FrequencyChannelEstimate<T>, rx: &FrequencyGrid<T>) -> Result<FrequencyGrid<T>> {
    let n_sc = est.h.len();
    if n_sc == 0 || rx.n_sc() != n_sc {
        return Err(Error::Size(format!("grid has {} subcarriers, estimate has {n_sc}", rx.n_sc())));
    }
    let (n_r, n_t) = est.h[0].shape();
    if rx.n_streams() != n_r {
        return Err(Error::Size(format!("grid has {} receive streams, estimate has {n_r}", rx.n_streams())));
    }
    let mut out = CMatrix::zeros(n_sc, n_t);
    for (n, h) in est.h.iter().enumerate() {
        let y = CMatrix::from_fn(n_r, 1, |i, _| rx.symbols[(n, i)]);
        let z = regularized_solve(h, &y, est.noise_var)?;
        for j in 0..n_t {
            out[(n, j)] = z[(j, 0)];
        }
    }
    Ok(FrequencyGrid::new(out))
}

/// How the sphere decoder picks its starting radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusPolicy {
    /// Unbounded: the first leaf reached is the Babai point and every
    /// later leaf shrinks the sphere.
    Unbounded,
    /// Squared radius; doubled until the sphere holds a lattice point.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereDecoding<T: Scalar> {
    /// Constellation index per transmit stream.
    pub indices: Vec<usize>,
    pub symbols: Vec<Complex<T>>,
    /// `‖y − H z‖²`, evaluated directly.
    pub metric: T,
    pub nodes_visited: usize,
}

/// `‖y − H z‖²` for the candidate `z`.
pub fn ml_metric<T: Scalar>(h: &CMatrix<T>, y: &DVector<Complex<T>>, z: &[Complex<T>]) -> T {
    let mut acc = T::zero();
    for i in 0..h.nrows() {
        let mut r = y[i];
        for (j, zj) in z.iter().enumerate() {
            r -= h[(i, j)] * zj;
        }
        acc += r.norm_sqr();
    }
    acc
}

struct Search<'a, T: Scalar> {
    r: &'a CMatrix<T>,
    ybar: Vec<Complex<T>>,
    table: &'a [Complex<T>],
    radius: T,
    slack: T,
    best: T,
    path: Vec<usize>,
    leaves: Vec<(T, Vec<usize>)>,
    nodes: usize,
}

impl<T: Scalar> Search<'_, T> {
    /// Depth-first descent from level `k` down to 0 with Schnorr–Euchner
    /// ordering: children are visited by increasing distance to the
    /// level's interference-cancelled centre.
    fn descend(&mut self, k: usize, partial: T) {
        let n_t = self.path.len();
        let mut centre = self.ybar[k];
        for j in (k + 1)..n_t {
            centre -= self.r[(k, j)] * self.table[self.path[j]];
        }
        let rkk = self.r[(k, k)];
        let mut order: Vec<(T, usize)> = self
            .table
            .iter()
            .enumerate()
            .map(|(i, s)| ((centre - rkk * s).norm_sqr(), i))
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        for (inc, idx) in order {
            self.nodes += 1;
            let d = partial + inc;
            if d > self.radius.min(self.best + self.slack) {
                break;
            }
            self.path[k] = idx;
            if k == 0 {
                if d < self.best {
                    self.best = d;
                }
                self.leaves.push((d, self.path.clone()));
            } else {
                self.descend(k - 1, d);
            }
        }
    }
}

/// Exact maximum-likelihood detection `argmin_z ‖y − H z‖²` over
/// `constellation^{n_t}`.
///
/// The search runs on the QR-rotated problem. Leaves whose rotated metric
/// lies within a rounding margin of the best are re-scored on the original
/// problem, so the result is the true minimizer of the directly evaluated
/// metric; among exact ties the first leaf found wins.
pub fn sphere_decode<T: Scalar>(
    h: &CMatrix<T>,
    y: &DVector<Complex<T>>,
    constellation: &[Complex<T>],
    policy: RadiusPolicy,
) -> Result<SphereDecoding<T>> {
    let (n_r, n_t) = h.shape();
    if constellation.is_empty() {
        return Err(Error::Config("empty constellation".into()));
    }
    if n_t == 0 || n_r < n_t || y.len() != n_r {
        return Err(Error::Shape(format!("H is {n_r}x{n_t} and y has {} entries", y.len())));
    }
    let qr = h.clone().qr();
    let r = qr.r();
    let ybar: Vec<Complex<T>> = (qr.q().adjoint() * y).iter().copied().collect();

    let peak = constellation.iter().map(|s| s.norm_sqr()).fold(T::zero(), |a, b| a.max(b));
    let scale = y.norm_squared() + h.norm_squared() * peak * T::lit(n_t as f64);
    let slack = T::lit(1e-9) * scale;

    let mut radius = match policy {
        RadiusPolicy::Unbounded => T::lit(f64::INFINITY),
        RadiusPolicy::Fixed(r2) if r2 > 0.0 && r2.is_finite() => T::lit(r2),
        RadiusPolicy::Fixed(r2) => return Err(Error::Config(format!("squared radius {r2} must be positive"))),
    };
    let mut nodes = 0;
    loop {
        let mut s = Search {
            r: &r,
            ybar: ybar.clone(),
            table: constellation,
            radius,
            slack,
            best: T::lit(f64::INFINITY),
            path: vec![0; n_t],
            leaves: Vec::new(),
            nodes: 0,
        };
        s.descend(n_t - 1, T::zero());
        nodes += s.nodes;
        if !s.leaves.is_empty() {
            let best = s.best;
            let mut pick: Option<(T, Vec<usize>)> = None;
            for (d, path) in s.leaves {
                if d > best + slack {
                    continue;
                }
                let z: Vec<Complex<T>> = path.iter().map(|&i| constellation[i]).collect();
                let m = ml_metric(h, y, &z);
                if pick.as_ref().is_none_or(|(pm, _)| m < *pm) {
                    pick = Some((m, path));
                }
            }
            let (metric, indices) = pick.expect("the best leaf is always within the margin");
            let symbols = indices.iter().map(|&i| constellation[i]).collect();
            return Ok(SphereDecoding { indices, symbols, metric, nodes_visited: nodes });
        }
        radius *= T::lit(2.0);
    }
}

/// Sphere-decodes every subcarrier of `rx` with the estimated channel.
pub fn sphere_detect_grid<T: Scalar>(
    est: &FrequencyChannelEstimate<T>,
    rx: &FrequencyGrid<T>,
    scheme: ModulationScheme,
) -> Result<FrequencyGrid<T>> {
    let n_sc = est.h.len();
    if n_sc == 0 || rx.n_sc() != n_sc {
        return Err(Error::Size(format!("grid has {} subcarriers, estimate has {n_sc}", rx.n_sc())));
    }
    let table = scheme.constellation::<T>();
    let n_t = est.h[0].ncols();
    let mut out = CMatrix::zeros(n_sc, n_t);
    for (n, h) in est.h.iter().enumerate() {
        let y = DVector::from_fn(rx.n_streams(), |i, _| rx.symbols[(n, i)]);
        let d = sphere_decode(h, &y, &table, RadiusPolicy::Unbounded)?;
        for (j, s) in d.symbols.into_iter().enumerate() {
            out[(n, j)] = s;
        }
    }
    Ok(FrequencyGrid::new(out))
}

/// Sylvester–Hadamard matrix of order `2^k`, entries `±1`.
fn hadamard(order: usize) -> Vec<Vec<i8>> {
    let mut h = vec![vec![1i8]];
    while h.len() < order {
        let n = h.len();
        let mut next = vec![vec![0i8; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = h[i][j];
                next[i][j + n] = h[i][j];
                next[i + n][j] = h[i][j];
                next[i + n][j + n] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

/// Reference symbols for the `q` training slots of a subframe.
///
/// When `q` is a power of two no smaller than `n_t`, subcarrier `n` carries
/// `P(n) = diag(r_n) · H_q[:, ..n_t] · diag(c_n)` with `H_q` a Hadamard
/// matrix, `r_n` random quarter turns and `c_n` random constellation
/// points, so `P(n)ᴴP(n)` is diagonal and every entry is still a
/// constellation point. Otherwise the pilots are i.i.d. constellation points.
pub fn reference_grids<T: Scalar, R: Rng + ?Sized>(
    cfg: &SubframeConfig,
    scheme: ModulationScheme,
    rng: &mut R,
) -> Vec<FrequencyGrid<T>> {
    let table = scheme.constellation::<T>();
    let (q, n_t, n_sc) = (cfg.q, cfg.n_t, cfg.n_sc);
    if !(q.is_power_of_two() && q >= n_t) {
        return (0..q)
            .map(|_| FrequencyGrid::new(CMatrix::from_fn(n_sc, n_t, |_, _| table[rng.random_range(0..table.len())])))
            .collect();
    }
    let had = hadamard(q);
    let turns = [c_unit::<T>(1.0, 0.0), c_unit(0.0, 1.0), c_unit(-1.0, 0.0), c_unit(0.0, -1.0)];
    let mut grids = vec![CMatrix::zeros(n_sc, n_t); q];
    for n in 0..n_sc {
        let r: Vec<Complex<T>> = (0..q).map(|_| turns[rng.random_range(0..4)]).collect();
        let cn: Vec<Complex<T>> = (0..n_t).map(|_| table[rng.random_range(0..table.len())]).collect();
        for (k, grid) in grids.iter_mut().enumerate() {
            for j in 0..n_t {
                grid[(n, j)] = r[k] * cn[j] * T::lit(had[k][j] as f64);
            }
        }
    }
    grids.into_iter().map(FrequencyGrid::new).collect()
}

fn c_unit<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}
