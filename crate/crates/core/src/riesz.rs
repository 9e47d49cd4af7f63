//! Riesz potentials `|x|^{-α} * f`: the closed form for bubble powers and numeric
//! convolutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::{Ansatz, Bubble};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::gk::{integrate, GkOptions};
use crate::quadrature::qmc::{replicate_stats, sphere_designs, SHIFTS};
use crate::quadrature::radial::radial_moment;
use crate::quadrature::two_center::{two_center_moments, FeatureScales};
use crate::quadrature::{IntegralResult, QuadratureSpec, Scheme};
use crate::scalar::{dist, dist2, Real};
use crate::special::{riesz_identity_constant, sphere_area, SharpConstants};

/// Which constant multiplies `I(α/2)` in the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszConstant {
    /// `c(N,α)^{2*_α}`, the bubble normalization.
    BubbleCoefficient,
    /// `C(N,α)^{2*_α}`, the HLS constant; kept for comparison only.
    HlsConstant,
}

/// `|x|^{-α} * U_{z,λ}^{2*_α} = coefficient · (λ/(1+λ²|x-z|²))^{α/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszClosedForm<T> {
    pub coefficient: T,
    pub bubble: Bubble<T>,
}

pub fn closed_form_coefficient<T: Real>(p: &ProblemParams<T>, k: &SharpConstants<T>, which: RieszConstant) -> T {
    let base = match which {
        RieszConstant::BubbleCoefficient => k.bubble_coeff,
        RieszConstant::HlsConstant => k.hls_c,
    };
    let i = riesz_identity_constant(p, p.alpha() / T::lit(2.0)).expect("α/2 < N/2 for valid parameters");
    i * base.powf(p.two_star_alpha())
}

impl<T: Real> RieszClosedForm<T> {
    pub fn new(p: &ProblemParams<T>, k: &SharpConstants<T>, bubble: Bubble<T>) -> Self {
        Self {
            coefficient: closed_form_coefficient(p, k, RieszConstant::BubbleCoefficient),
            bubble,
        }
    }

    pub fn eval(&self, p: &ProblemParams<T>, x: &[T]) -> T {
        riesz_profile(p, self.coefficient, self.bubble.lambda, dist2(x, &self.bubble.center).sqrt())
    }
}

/// `coefficient · (λ/(1+λ²r²))^{α/2}`.
pub fn riesz_profile<T: Real>(p: &ProblemParams<T>, coefficient: T, lambda: T, r: T) -> T {
    coefficient * (lambda / (T::one() + lambda * lambda * r * r)).powf(p.alpha() / T::lit(2.0))
}

/// `∂/∂λ` of [`riesz_profile`].
pub fn riesz_profile_d_lambda<T: Real>(p: &ProblemParams<T>, coefficient: T, lambda: T, r: T) -> T {
    let l2r2 = lambda * lambda * r * r;
    riesz_profile(p, coefficient, lambda, r) * p.alpha() / T::lit(2.0) * (T::one() - l2r2)
        / (lambda * (T::one() + l2r2))
}

pub fn riesz_bubble_closed<T: Real>(p: &ProblemParams<T>, k: &SharpConstants<T>, b: &Bubble<T>, x: &[T]) -> T {
    RieszClosedForm::new(p, k, b.clone()).eval(p, x)
}

/// Panel layout for [`riesz_numeric_with`].
#[derive(Debug, Clone, Default)]
pub struct RadialLayout {
    /// Substitution scale in `ρ`.
    pub scale: f64,
    /// Radii (distances from `x`) where `f` has features.
    pub breaks: Vec<f64>,
    /// Direction (from `x`) along which `f` varies most, e.g. towards a bubble center.
    /// When set, the polar angle about it is integrated adaptively and QMC is used
    /// only on the remaining `S^{N-2}`.
    pub axis: Option<Vec<f64>>,
}

impl RadialLayout {
    pub fn new(scale: f64, breaks: Vec<f64>) -> Self {
        Self { scale, breaks, axis: None }
    }

    /// Layout for a density concentrated at `c` with width `w`, seen from `x`.
    pub fn towards(x: &[f64], c: &[f64], w: f64) -> Self {
        let d = dist(x, c);
        let axis = if d > 0.0 {
            Some(c.iter().zip(x).map(|(a, b)| (a - b) / d).collect())
        } else {
            None
        };
        Self {
            scale: w,
            breaks: vec![d - 4.0 * w, d, d + 4.0 * w],
            axis,
        }
    }
}

/// Orthonormal basis of the complement of the unit vector `e`.
fn complement_basis(e: &[f64]) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e[i].abs().partial_cmp(&e[j].abs()).unwrap());
    for &k in &order {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in std::iter::once(e).chain(basis.iter().map(|b| b.as_slice())) {
            let dot: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let nv = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if nv > 1e-8 {
            basis.push(v.into_iter().map(|t| t / nv).collect());
        }
    }
    basis
}

/// `∫ f(y) |x - y|^{-α} dy` in polar coordinates about `x` with a QMC sphere average.
pub fn riesz_numeric<F>(f: F, alpha: f64, x: &[f64], spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    riesz_numeric_with(f, alpha, x, &RadialLayout::new(1.0, vec![]), spec)
}

/// [`riesz_numeric`] with a radial layout.
///
/// The radial variable is `ρ = scale·tan^{1/(N-α)} θ`, which absorbs `ρ^{N-1-α}` and
/// keeps the integrand bounded for `f = O(ρ^{-2(N-α)})`. Directions come in antipodal
/// pairs; `spec.nodes` is the total number of direction pairs over the 8 shifts.
pub fn riesz_numeric_with<F>(
    f: F,
    alpha: f64,
    x: &[f64],
    layout: &RadialLayout,
    spec: &QuadratureSpec,
) -> Result<IntegralResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let n = x.len();
    let na = n as f64 - alpha;
    if !(na > 0.0) {
        return Err(Error::InvalidInput(format!("kernel order {alpha} must be below the dimension {n}")));
    }
    let scale = if layout.scale > 0.0 { layout.scale } else { 1.0 };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut pts: Vec<f64> = layout
        .breaks
        .iter()
        .filter(|b| **b > 0.0 && b.is_finite())
        .map(|b| ((b / scale).powf(na)).atan())
        .collect();
    pts.push(0.0);
    pts.push(half_pi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let jac0 = scale.powf(na) / na;
    let per = (spec.nodes / SHIFTS).max(1);
    let opts = GkOptions::new(spec.abs_tol.max(f64::MIN_POSITIVE), 0.1 * spec.rel_tol.max(1e-12), 200);
    assert!(n <= 64, "riesz_numeric supports N <= 64");

    // ∫_0^∞ ½(f(x + ρω) + f(x - ρω)) ρ^{N-1-α} dρ
    let line = |omega: &[f64]| {
        let r = integrate(
            |th: f64| {
                let (s, c) = th.sin_cos();
                let rho = scale * (s / c).powf(1.0 / na);
                let jac = jac0 / (c * c);
                if !jac.is_finite() || !rho.is_finite() {
                    return [0.0];
                }
                let mut yp = [0.0; 64];
                let mut ym = [0.0; 64];
                for k in 0..n {
                    yp[k] = x[k] + rho * omega[k];
                    ym[k] = x[k] - rho * omega[k];
                }
                [0.5 * (f(&yp[..n]) + f(&ym[..n])) * jac]
            },
            &pts,
            opts,
        );
        (r.value[0], r.error[0], r.evals)
    };

    let area = sphere_area::<f64>(n);
    let mut means = Vec::with_capacity(SHIFTS);
    let mut gk_err = 0.0;
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let count = |k: usize| {
        evals.fetch_add(k, std::sync::atomic::Ordering::Relaxed);
    };
    match &layout.axis {
        None => {
            for set in sphere_designs(n, per, spec.seed) {
                let per_dir: Vec<(f64, f64, usize)> = set.par_iter().map(|w| line(w)).collect();
                let (mut acc, mut err) = (0.0, 0.0);
                for (v, e, k) in per_dir {
                    acc += v;
                    err += e;
                    count(k);
                }
                means.push(area * acc / per as f64);
                gk_err += area * err / per as f64;
            }
        }
        Some(axis) => {
            let basis = complement_basis(axis);
            // polar angle panels refine towards the axis, where the line passes the feature
            let mut tpts = vec![0.0, std::f64::consts::PI];
            for b in &layout.breaks {
                if *b > 0.0 {
                    let a = (scale / b).atan();
                    tpts.extend([0.25 * a, a, 4.0 * a]);
                }
            }
            tpts.retain(|t| *t >= 0.0 && *t <= std::f64::consts::PI);
            tpts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            tpts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let rem = (per / 64).max(1);
            let sub_area = sphere_area::<f64>(n - 1);
            let pow = (n - 2) as i32;
            let outer_opts = GkOptions::new(spec.abs_tol.max(f64::MIN_POSITIVE), 0.1 * spec.rel_tol.max(1e-12), 400)
                .parallel(true);
            for set in sphere_designs(n - 1, rem, spec.seed) {
                let r = crate::quadrature::gk::integrate_carried(
                    |t: f64| {
                        let (st, ct) = t.sin_cos();
                        let w = st.powi(pow);
                        let (mut acc, mut err) = (0.0, 0.0);
                        let mut omega = vec![0.0; n];
                        for v in &set {
                            for k in 0..n {
                                omega[k] = ct * axis[k]
                                    + st * basis.iter().zip(v).map(|(b, vi)| b[k] * vi).sum::<f64>();
                            }
                            let (a, e, k) = line(&omega);
                            acc += a;
                            err += e;
                            count(k);
                        }
                        let inv = 1.0 / set.len() as f64;
                        ([w * acc * inv], [w * err * inv])
                    },
                    &tpts,
                    outer_opts,
                );
                means.push(sub_area * r.value[0]);
                gk_err += sub_area * r.error[0];
            }
        }
    }
    let evals = evals.into_inner();
    let (value, se) = replicate_stats(&means);
    let est_error = se + gk_err / SHIFTS as f64;
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("riesz convolution is not finite: {value}")));
    }
    Ok(IntegralResult {
        value,
        est_error,
        nodes_used: evals,
        scheme: Scheme::QmcNd,
        converged: est_error <= spec.abs_tol.max(spec.rel_tol * value.abs()),
    })
}

/// `∫ f(|y - c|) |x - y|^{-α} dy` for radial `f`, by the two-center reduction
/// (or a 1-D radial integral when `x = c`).
pub fn riesz_radial<F>(
    f: F,
    n: usize,
    alpha: f64,
    c: &[f64],
    x: &[f64],
    width: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let d = dist(x, c);
    if d <= 1e-12 * width {
        let r = radial_moment(|r: f64| [f(r) * r.powf(-alpha)], n, width, &[1.0], spec.gk());
        let area = sphere_area::<f64>(n);
        return IntegralResult {
            value: r.value[0] * area,
            est_error: r.error[0] * area,
            nodes_used: r.evals,
            scheme: Scheme::Radial1d,
            converged: r.converged,
        }
        .checked("radial Riesz potential");
    }
    let r = two_center_moments(
        |s, t| [f(s) * t.powf(-alpha)],
        n,
        d,
        FeatureScales { near_first: width.min(d), near_second: (0.25 * width).min(0.25 * d) },
        spec,
    );
    let area = sphere_area::<f64>(n - 1);
    IntegralResult {
        value: r.value[0] * area,
        est_error: r.error[0] * area,
        nodes_used: r.evals,
        scheme: Scheme::TwoCenter2d,
        converged: r.converged,
    }
    .checked("two-center Riesz potential")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszMode {
    /// `Σ_j` closed forms, i.e. the potential of `Σ_j U_j^{2*_α}`.
    ClosedStar,
    /// Numeric potential of `Σ_j U_j^{2*_α}`.
    NumericStar,
    /// Numeric potential of `Z^{2*_α}` (cutoff ansatz), with `Σ_j U_j^{2*_α}` as control variate.
    NumericCutoff,
}

fn piece_layout(a: &Ansatz<f64>, x: &[f64], z: &[f64]) -> RadialLayout {
    let w = 1.0 / a.lambda;
    let mut layout = RadialLayout::towards(x, z, w);
    layout.breaks.push(w);
    if a.use_cutoff {
        let t = a.cutoff.tube_distance(x);
        layout.breaks.extend([t + a.cutoff.delta, t + 2.0 * a.cutoff.delta]);
    }
    layout
}

fn sum_results(parts: Vec<IntegralResult>, offset: f64) -> IntegralResult {
    let mut out = IntegralResult {
        value: offset,
        est_error: 0.0,
        nodes_used: 0,
        scheme: Scheme::QmcNd,
        converged: true,
    };
    for r in parts {
        out.value += r.value;
        out.est_error += r.est_error;
        out.nodes_used += r.nodes_used;
        out.converged &= r.converged;
    }
    out
}

/// Riesz potential of the ansatz power at `x`.
///
/// The numeric modes split the density into one piece per bubble (directly for
/// `Σ_j U_j^{2*_α}`, through the partition `χ_j ∝ (1+λ²|y-z_j|²)^{-4}` otherwise) and
/// integrate each piece with its own axis.
pub fn riesz_ansatz(
    a: &Ansatz<f64>,
    k: &SharpConstants<f64>,
    x: &[f64],
    mode: RieszMode,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let p = &a.params;
    let coef = closed_form_coefficient(p, k, RieszConstant::BubbleCoefficient);
    let centers = &a.placement.centers;
    let closed: f64 = centers.iter().map(|z| riesz_profile(p, coef, a.lambda, dist(x, z))).sum();
    let e = p.two_star_alpha();
    let u = |y: &[f64], z: &[f64]| crate::bubbles::bubble_radial(p, a.coeff, a.lambda, dist(y, z));
    match mode {
        RieszMode::ClosedStar => Ok(IntegralResult {
            value: closed,
            est_error: closed * 4.0 * f64::EPSILON,
            nodes_used: a.m(),
            scheme: Scheme::Radial1d,
            converged: true,
        }),
        RieszMode::NumericStar => {
            let parts = centers
                .iter()
                .map(|z| riesz_numeric_with(|y| u(y, z).powf(e), p.alpha(), x, &piece_layout(a, x, z), spec))
                .collect::<Result<Vec<_>>>()?;
            Ok(sum_results(parts, 0.0))
        }
        RieszMode::NumericCutoff => {
            let l2 = a.lambda * a.lambda;
            let weight = |y: &[f64], z: &[f64]| (1.0 + l2 * dist2(y, z)).powi(-4);
            let parts = centers
                .iter()
                .map(|zj| {
                    let piece = |y: &[f64]| {
                        let total: f64 = centers.iter().map(|z| weight(y, z)).sum();
                        let star: f64 = centers.iter().map(|z| u(y, z).powf(e)).sum();
                        weight(y, zj) / total * (a.eval(y).powf(e) - star)
                    };
                    riesz_numeric_with(piece, p.alpha(), x, &piece_layout(a, x, zj), spec)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(sum_results(parts, closed))
        }
    }
}
