//! Scalar abstraction shared by every numeric routine in the crate.

use std::cell::RefCell;
use std::fmt::Display;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::ToPrimitive;
use rustfft::{FftNum, FftPlanner};

/// Real floating point type the simulator can run on (`f32` or `f64`).
///
/// Complex quantities are `Complex<T>`; linear algebra is delegated to
/// nalgebra, transforms to rustfft.
pub trait Scalar: RealField + FftNum + ToPrimitive + Display + Copy {
    /// Runs `f` with a thread-local FFT planner for this scalar type.
    fn with_fft_planner<R>(f: impl FnOnce(&mut FftPlanner<Self>) -> R) -> R;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_scalar {
    ($t:ty, $planner:ident) => {
        thread_local! {
            static $planner: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
        }

        impl Scalar for $t {
            fn with_fft_planner<R>(f: impl FnOnce(&mut FftPlanner<Self>) -> R) -> R {
                $planner.with(|p| f(&mut p.borrow_mut()))
            }
        }
    };
}

impl_scalar!(f32, PLANNER_F32);
impl_scalar!(f64, PLANNER_F64);

/// `re + j·im` for real parts given as `f64`.
#[inline]
pub fn c<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// `|z|`
#[inline]
pub fn cabs<T: Scalar>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Principal argument of `z`.
#[inline]
pub fn carg<T: Scalar>(z: Complex<T>) -> T {
    z.im.atan2(z.re)
}

/// `e^{jθ}`
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn is_finite<T: Scalar>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
