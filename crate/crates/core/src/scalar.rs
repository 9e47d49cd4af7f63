use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the pointwise kernels: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy literal conversion from `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean distance between two points of equal length.
pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    dist2(a, b).sqrt()
}

pub fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

pub fn norm<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` clamped to [0, 1], with its first two derivatives.
pub fn smoothstep5<T: Real>(t: T) -> (T, T, T) {
    if t <= T::zero() {
        return (T::zero(), T::zero(), T::zero());
    }
    if t >= T::one() {
        return (T::one(), T::zero(), T::zero());
    }
    let (c6, c15, c10, c30, c60) = (
        T::lit(6.0),
        T::lit(15.0),
        T::lit(10.0),
        T::lit(30.0),
        T::lit(60.0),
    );
    let one = T::one();
    let t2 = t * t;
    let t3 = t2 * t;
    let s = t3 * (t * (c6 * t - c15) + c10);
    let ds = c30 * t2 * (t - one) * (t - one);
    let d2s = c60 * t * (t - one) * (t + t - one);
    (s, ds, d2s)
}
