//! Integrals of `F(|x - z1|, |x - z2|)` over `R^N` in prolate spheroidal coordinates.
//!
//! With `d = |z1 - z2|`, `s = (d/2)(cosh η + cos φ)`, `t = (d/2)(cosh η - cos φ)` and
//! distance to the axis `h = (d/2) sinh η sin φ`,
//!
//! ```text
//! dx = |S^{N-2}| h^{N-2} (d/2)^2 (sinh²η + sin²φ) dη dφ,   η ≥ 0, φ ∈ [0, π].
//! ```
//!
//! This is the same measure as `|S^{N-2}| h^{N-3} (s t / d) ds dt` on the
//! triangle-inequality region, but without the edge singularities of that form.

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use super::gk::{integrate, integrate_carried, GkResult};
use super::{IntegralResult, QuadratureSpec, Scheme};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::scalar::dist;
use crate::special::sphere_area;

/// Length scales of the integrand near each center, used only to place panel breaks.
#[derive(Debug, Clone, Copy)]
pub struct FeatureScales {
    pub near_first: f64,
    pub near_second: f64,
}

impl FeatureScales {
    pub fn uniform(w: f64) -> Self {
        Self {
            near_first: w,
            near_second: w,
        }
    }
}

fn local_angle(w: f64, d: f64) -> f64 {
    (4.0 * w / d).sqrt().min(1.0)
}

fn dedup_sorted(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|x| *x > lo && *x < hi);
    v.push(lo);
    v.push(hi);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + b.abs()));
    v
}

/// Vector-valued two-center integral without the sphere factor `|S^{N-2}|`.
pub fn two_center_moments<F, const D: usize>(
    f: F,
    n: usize,
    d: f64,
    scales: FeatureScales,
    spec: &QuadratureSpec,
) -> GkResult<f64, D>
where
    F: Fn(f64, f64) -> [f64; D] + Sync,
{
    let hd = 0.5 * d;
    let (a1, a2) = (local_angle(scales.near_first, d), local_angle(scales.near_second, d));
    let pi = std::f64::consts::PI;
    let phi_pts = dedup_sorted(
        vec![0.25 * a2, a2, 4.0 * a2, pi - 4.0 * a1, pi - a1, pi - 0.25 * a1, 0.5 * pi],
        0.0,
        pi,
    );
    let eta_breaks = [0.25 * a1.min(a2), a1.min(a2), a1.max(a2), 4.0 * a1.max(a2), 1.0, 3.0];
    let theta_pts = dedup_sorted(
        eta_breaks.iter().map(|e| e.atan()).collect(),
        0.0,
        0.5 * pi,
    );
    let pow = (n - 2) as i32;
    let inner_opts = spec.inner_gk();
    let count = AtomicUsize::new(0);
    let outer = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let eta = st / ct;
        if eta > 600.0 {
            return ([0.0; D], [0.0; D]);
        }
        let deta = 1.0 / (ct * ct);
        let (ch, sh) = (eta.cosh(), eta.sinh());
        let inner = integrate(
            |phi: f64| {
                let (sp, cp) = phi.sin_cos();
                let s = hd * (ch + cp);
                let t = hd * (ch - cp);
                let h = hd * sh * sp;
                let jac = h.powi(pow) * hd * hd * (sh * sh + sp * sp) * deta;
                if jac == 0.0 || !jac.is_finite() {
                    return [0.0; D];
                }
                let mut v = f(s.max(0.0), t.max(0.0));
                for x in v.iter_mut() {
                    *x *= jac;
                }
                v
            },
            &phi_pts,
            inner_opts,
        );
        count.fetch_add(inner.evals, AtomicOrdering::Relaxed);
        (inner.value, inner.error)
    };
    let mut r = integrate_carried(outer, &theta_pts, spec.gk().parallel(true));
    r.evals = count.load(AtomicOrdering::Relaxed);
    r
}

/// `∫_{R^N} F(|x - z1|, |x - z2|) dx`.
pub fn two_center_integral<F>(
    f: F,
    z1: &[f64],
    z2: &[f64],
    p: &ProblemParams<f64>,
    spec: &QuadratureSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let d = dist(z1, z2);
    two_center_scaled(f, p.n(), d, FeatureScales::uniform(0.25 * d), spec)
}

/// [`two_center_integral`] for a given separation and feature scales.
pub fn two_center_scaled<F>(
    f: F,
    n: usize,
    d: f64,
    scales: FeatureScales,
    spec: &QuadratureSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    spec.validate()?;
    if !(d > 0.0) {
        return Err(Error::CoincidentCenters);
    }
    let r = two_center_moments(|s, t| [f(s, t)], n, d, scales, spec);
    let area = sphere_area::<f64>(n - 1);
    IntegralResult {
        value: r.value[0] * area,
        est_error: r.error[0] * area,
        nodes_used: r.evals,
        scheme: Scheme::TwoCenter2d,
        converged: r.converged,
    }
    .checked("two-center integral")
}
