//! Transform and linear-algebra primitives.
//!
//! DFT convention: the forward transform is unnormalized and the inverse
//! carries the `1/N` factor, so `ifft(fft(x)) == x`.

use nalgebra::{DMatrix, DVector, Schur, SVD};
use num_complex::Complex;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, is_finite, Scalar};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Default relative singular-value cutoff for [`pseudo_inverse`].
pub const PINV_REL_TOL: f64 = 1e-10;

fn transform_in_place<T: Scalar>(buf: &mut [Complex<T>], direction: FftDirection) {
    if buf.is_empty() {
        return;
    }
    let plan = T::with_fft_planner(|p| p.plan_fft(buf.len(), direction));
    plan.process(buf);
}

/// Unnormalized forward DFT of a length-`n` vector.
pub fn fft<T: Scalar>(v: &[Complex<T>], n: usize) -> Result<Vec<Complex<T>>> {
    check_len(v.len(), n)?;
    let mut out = v.to_vec();
    transform_in_place(&mut out, FftDirection::Forward);
    Ok(out)
}

/// Inverse DFT with `1/N` scaling.
pub fn ifft<T: Scalar>(v: &[Complex<T>], n: usize) -> Result<Vec<Complex<T>>> {
    check_len(v.len(), n)?;
    let mut out = v.to_vec();
    ifft_in_place(&mut out);
    Ok(out)
}

pub fn fft_in_place<T: Scalar>(buf: &mut [Complex<T>]) {
    transform_in_place(buf, FftDirection::Forward);
}

pub fn ifft_in_place<T: Scalar>(buf: &mut [Complex<T>]) {
    transform_in_place(buf, FftDirection::Inverse);
    let scale = T::one() / T::from_usize(buf.len().max(1)).unwrap();
    for z in buf.iter_mut() {
        *z = z.scale(scale);
    }
}

/// Forward DFT applied to every column of `m`.
pub fn fft_columns<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        fft_in_place(col.as_mut_slice());
    }
    out
}

/// Inverse DFT applied to every column of `m`.
pub fn ifft_columns<T: Scalar>(m: &CMatrix<T>) -> CMatrix<T> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        ifft_in_place(col.as_mut_slice());
    }
    out
}

fn check_len(len: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Size("transform size must be at least 1".into()));
    }
    if len != n {
        return Err(Error::Size(format!("vector length {len} does not match transform size {n}")));
    }
    Ok(())
}

fn check_finite<T: Scalar>(a: &CMatrix<T>, what: &str) -> Result<()> {
    if a.iter().all(|z| is_finite(*z)) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} contains non-finite entries")))
    }
}

/// Moore–Penrose pseudo-inverse through the SVD.
///
/// Singular values below `rel_tol * σ_max` are treated as zero.
pub fn pseudo_inverse<T: Scalar>(a: &CMatrix<T>, rel_tol: T) -> Result<CMatrix<T>> {
    check_finite(a, "pseudo-inverse input")?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::Shape("pseudo-inverse of an empty matrix".into()));
    }
    let svd = SVD::try_new(a.clone(), true, true, T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(T::zero(), |acc, &s| acc.max(s));
    let cutoff = rel_tol * sigma_max;

    // A⁺ = V Σ⁺ Uᴴ, accumulated one singular triplet at a time.
    let mut pinv = CMatrix::<T>::zeros(n, m);
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == T::zero() {
            continue;
        }
        let inv = T::one() / s;
        let v_col = v_t.row(k).adjoint();
        let u_row = u.column(k).adjoint();
        pinv += (v_col * u_row).scale(inv);
    }
    Ok(pinv)
}

/// Least-squares solution `A⁺ B`.
pub fn lstsq<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>, rel_tol: T) -> Result<CMatrix<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "least squares: {} design rows vs {} target rows",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(pseudo_inverse(a, rel_tol)? * b)
}

/// Largest eigenvalue magnitude of a square complex matrix.
pub fn spectral_radius<T: Scalar>(a: &CMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::Shape(format!("spectral radius of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    check_finite(a, "spectral radius input")?;
    if a.iter().all(|z| *z == Complex::new(T::zero(), T::zero())) {
        return Ok(T::zero());
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    let eig = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("eigenvalues unavailable".into()))?;
    Ok(eig.iter().fold(T::zero(), |acc, &z| acc.max(cabs(z))))
}

/// Spectral radius of a real square matrix.
pub fn spectral_radius_real<T: Scalar>(a: &DMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::Shape(format!("spectral radius of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("spectral radius input contains non-finite entries".into()));
    }
    if a.iter().all(|x| *x == T::zero()) {
        return Ok(T::zero());
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 0)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().fold(T::zero(), |acc, &z| acc.max(cabs(z))))
}

/// Promotes a real matrix to complex.
pub fn to_complex<T: Scalar>(a: &DMatrix<T>) -> CMatrix<T> {
    a.map(|x| Complex::new(x, T::zero()))
}

/// Squared Frobenius norm.
pub fn frob2<T: Scalar>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Plain-data form of a complex matrix for JSON artifacts (column-major `[re, im]` pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixRecord {
    pub fn from_complex<T: Scalar>(m: &CMatrix<T>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
        }
    }

    pub fn from_real<T: Scalar>(m: &DMatrix<T>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().map(|x| [x.as_f64(), 0.0]).collect(),
        }
    }

    pub fn to_complex<T: Scalar>(&self) -> Result<CMatrix<T>> {
        self.check()?;
        Ok(CMatrix::from_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| Complex::new(T::lit(*re), T::lit(*im))),
        ))
    }

    pub fn to_real<T: Scalar>(&self) -> Result<DMatrix<T>> {
        self.check()?;
        Ok(DMatrix::from_iterator(self.rows, self.cols, self.data.iter().map(|[re, _]| T::lit(*re))))
    }

    fn check(&self) -> Result<()> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Size(format!(
                "matrix record holds {} entries for {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }
}
