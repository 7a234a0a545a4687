//! Scalar abstraction shared by every numerical module.

use nalgebra::{Complex, DMatrix, DVector, RealField};

/// Real floating-point type the simulator is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;
/// Dense complex matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over `T`.
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_subset(&x)
}

/// Converts `T` into `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_subset().unwrap_or(f64::NAN)
}

#[inline]
pub fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn cr<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

/// Tolerance floor for type `T`: the requested `f64` tolerance, but never tighter
/// than a few thousand ulps of `T`.
pub fn tolerance<T: Real>(requested: f64) -> T {
    let floor = T::default_epsilon() * lit(4096.0);
    let req = lit::<T>(requested);
    if req > floor {
        req
    } else {
        floor
    }
}

/// Converts a cyclic frequency in MHz to angular frequency in rad/μs.
#[inline]
pub fn angular<T: Real>(f_mhz: T) -> T {
    T::two_pi() * f_mhz
}
