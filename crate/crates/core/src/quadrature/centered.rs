//! Integrals over `R^N` of functions that depend on `x` only through
//! `(x1, x2, |x'' - c''|)` and are even in `x2`, in spherical coordinates about a
//! point `c` on the `x1` axis.
//!
//! With `y = x - c = ρ(sin β cos φ, sin β sin φ, cos β·ω)`, `ω ∈ S^{N-3}`,
//!
//! ```text
//! dx = |S^{N-3}| ρ^{N-1} sin β cos^{N-3} β dρ dβ dφ,   β ∈ [0, π/2], φ ∈ [0, 2π).
//! ```
//!
//! Evenness in `x2` halves the `φ` range.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::gk::{integrate, integrate_carried, GkResult};
use super::QuadratureSpec;
use crate::special::sphere_area;

pub const MAX_DIM: usize = 32;

/// Expansion point and radial panel layout.
#[derive(Debug, Clone)]
pub struct CenteredFrame {
    pub center: Vec<f64>,
    /// Substitution scale, `ρ = scale·tan θ`.
    pub scale: f64,
    /// Radii where the integrand changes character.
    pub breaks: Vec<f64>,
}

/// `∫_{R^N} f(x) dx` for integrands of the symmetry type above. `f` receives the full point.
pub fn centered_integral<F, const D: usize>(f: F, frame: &CenteredFrame, spec: &QuadratureSpec) -> GkResult<f64, D>
where
    F: Fn(&[f64]) -> [f64; D] + Sync,
{
    let n = frame.center.len();
    assert!((3..=MAX_DIM).contains(&n), "dimension out of range for the centered integrator");
    let c = &frame.center;
    let scale = frame.scale;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut theta_pts: Vec<f64> = frame
        .breaks
        .iter()
        .filter(|b| **b > 0.0 && b.is_finite())
        .map(|b| (b / scale).atan())
        .collect();
    theta_pts.push(0.0);
    theta_pts.push(half_pi);
    theta_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    theta_pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let inner_opts = spec.inner_gk();
    let pow_r = (n - 1) as i32;
    let pow_c = (n - 3) as i32;
    let count = AtomicUsize::new(0);

    let radial = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let rho = scale * st / ct;
        let jac_r = scale / (ct * ct) * rho.powi(pow_r);
        if jac_r == 0.0 || !jac_r.is_finite() {
            return ([0.0; D], [0.0; D]);
        }
        let polar = |beta: f64| {
            let (sb, cb) = beta.sin_cos();
            let jac_b = sb * cb.powi(pow_c);
            let azimuthal = integrate(
                |phi: f64| {
                    let (sp, cp) = phi.sin_cos();
                    let mut x = [0.0; MAX_DIM];
                    x[..n].copy_from_slice(c);
                    x[0] += rho * sb * cp;
                    x[1] += rho * sb * sp;
                    x[2] += rho * cb;
                    f(&x[..n])
                },
                &[0.0, half_pi, 2.0 * half_pi],
                inner_opts,
            );
            count.fetch_add(azimuthal.evals, Ordering::Relaxed);
            let mut v = azimuthal.value;
            let mut e = azimuthal.error;
            for k in 0..D {
                v[k] *= jac_b;
                e[k] *= jac_b;
            }
            (v, e)
        };
        let mid = integrate_carried(polar, &[0.0, 0.5 * half_pi, half_pi], inner_opts);
        let mut v = mid.value;
        let mut e = mid.error;
        for k in 0..D {
            v[k] *= jac_r;
            e[k] *= jac_r;
        }
        (v, e)
    };
    let mut r = integrate_carried(radial, &theta_pts, spec.gk().parallel(true));
    let factor = 2.0 * sphere_area::<f64>(n - 2);
    for k in 0..D {
        r.value[k] *= factor;
        r.error[k] *= factor;
    }
    r.evals = count.load(Ordering::Relaxed);
    r
}
