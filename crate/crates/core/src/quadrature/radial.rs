//! Radial integrals `|S^{N-1}| ∫_0^∞ g(r) r^{N-1} dr` through `r = scale·tan θ`.

use super::gk::{integrate, GkOptions, GkResult};
use crate::scalar::Real;
use crate::special::sphere_area;

/// Raw integral `∫_0^∞ g(r) r^{N-1} dr` (no sphere factor) for vector-valued `g`.
///
/// `breaks` are radii (in units of `scale`) where the integrand changes character;
/// they become panel boundaries in the angular variable.
pub fn radial_moment<T, G, const D: usize>(
    g: G,
    n: usize,
    scale: T,
    breaks: &[T],
    opts: GkOptions<T>,
) -> GkResult<T, D>
where
    T: Real,
    G: Fn(T) -> [T; D] + Sync,
{
    let half_pi = T::FRAC_PI_2();
    let mut pts = vec![T::zero()];
    let mut bs: Vec<T> = breaks.iter().copied().filter(|b| *b > T::zero()).collect();
    bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for b in bs {
        pts.push(b.atan());
    }
    pts.push(half_pi);
    let nm1 = (n - 1) as i32;
    integrate(
        |th: T| {
            let (s, c) = th.sin_cos();
            let r = scale * s / c;
            let jac = scale / (c * c) * r.powi(nm1);
            if jac == T::zero() || !jac.is_finite() {
                return [T::zero(); D];
            }
            let mut v = g(r);
            for x in v.iter_mut() {
                *x = *x * jac;
            }
            v
        },
        &pts,
        opts,
    )
}

/// `∫_{R^N} g(|x|) dx` for scalar `g`.
pub fn radial_scalar<T, G>(g: G, n: usize, scale: T, opts: GkOptions<T>) -> GkResult<T, 1>
where
    T: Real,
    G: Fn(T) -> T + Sync,
{
    let mut r = radial_moment(|x| [g(x)], n, scale, &[T::one()], opts);
    let area = sphere_area::<T>(n);
    r.value[0] = r.value[0] * area;
    r.error[0] = r.error[0] * area;
    r
}
