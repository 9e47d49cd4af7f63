//! The energy `J(u) = ½∫|∇u|² - (1/(2·2*_α)) ∫∫ K|u|^{2*_α}(x) K|u|^{2*_α}(y) |x-y|^{-α}`
//! on the ansatz, its `λ`-derivative, and the expansion coefficients.
//!
//! With `P = Σ_j U_j^{2*_α}` and `E = K Z^{2*_α} - P`, the double integral splits as
//! `D(P) + 2⟨E, |x|^{-α} * P⟩ + D(E)`. `D(P)` reduces to single-bubble radial
//! integrals and two-center pair integrals through the closed-form Riesz potential;
//! `⟨E, ·⟩` is integrated in the coaxial 3-D frame of the first bubble, localized by the
//! partition `χ_1 = w_1/Σ_j w_j`, `w_j = (1+λ²|x-z_j|²)^{-4}`. `D(E)` is not
//! computed; its Hardy–Littlewood–Sobolev bound `C(N,α)‖E‖_t²`, `t = 2N/(2N-α)`, is
//! added to the reported error.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bubbles::{
    bubble_d_lambda_radial, bubble_dr_radial, bubble_neg_laplacian_radial, bubble_radial, Ansatz,
};
use crate::error::{Error, Result};
use crate::geometry::interaction_sum;
use crate::params::ProblemParams;
use crate::potential::Potential;
use crate::quadrature::centered::{centered_integral, CenteredFrame};
use crate::quadrature::gk::GkResult;
use crate::quadrature::radial::radial_moment;
use crate::quadrature::two_center::{two_center_moments, FeatureScales};
use crate::quadrature::{IntegralResult, QuadratureSpec, Scheme};
use crate::riesz::{riesz_profile, riesz_profile_d_lambda};
use crate::scalar::{dist, dist2};
use crate::special::{hls_constant, riesz_identity_constant, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `½∫|∇u|²`.
    pub gradient_term: f64,
    /// `(1/(2·2*_α))·D(K u^{2*_α})`.
    pub nonlocal_term: f64,
    pub total: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Analytic,
    CentralFd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub value: f64,
    /// Quadrature (and, for differences, truncation) error.
    pub est_error: f64,
    /// Bound on the `λ`-derivative of the omitted `D(E)/(2·2*_α)`.
    pub omitted_bound: f64,
}

/// Riesz coefficient `I(α/2)·c^{2*_α}` for the ansatz's own bubble normalization.
fn riesz_coef(a: &Ansatz<f64>) -> f64 {
    let p = &a.params;
    riesz_identity_constant(p, p.alpha() / 2.0).expect("valid parameters") * a.coeff.powf(p.two_star_alpha())
}

fn tight(spec: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: spec.rel_tol.min(1e-12),
        ..*spec
    }
}

/// Single-bubble integrals `[g0, d0, ∂λg0, ∂λd0]` with
/// `g0 = ∫|∇U|²` and `d0 = ∫ (|x|^{-α} * U^{2*}) U^{2*}`.
fn single_bubble(a: &Ansatz<f64>, spec: &QuadratureSpec) -> GkResult<f64, 4> {
    let p = a.params;
    let (c, l, e, rc) = (a.coeff, a.lambda, p.two_star_alpha(), riesz_coef(a));
    let mut r = radial_moment(
        |r: f64| {
            let u = bubble_radial(&p, c, l, r);
            let ur = bubble_dr_radial(&p, c, l, r);
            let ul = bubble_d_lambda_radial(&p, c, l, r);
            let url = dr_d_lambda(&p, c, l, r);
            let rr = riesz_profile(&p, rc, l, r);
            [ur * ur, rr * u.powf(e), 2.0 * ur * url, 2.0 * e * rr * u.powf(e - 1.0) * ul]
        },
        p.n(),
        1.0 / l,
        &[1.0, 10.0],
        tight(spec).gk(),
    );
    let area = sphere_area::<f64>(p.n());
    for k in 0..4 {
        r.value[k] *= area;
        r.error[k] *= area;
    }
    r
}

/// `∂λ ∂r U`.
fn dr_d_lambda(p: &ProblemParams<f64>, c: f64, l: f64, r: f64) -> f64 {
    let b = p.half_n_minus_2();
    let q = 1.0 + l * l * r * r;
    -2.0 * b * c * r * l.powf(b + 1.0) * q.powf(-b - 2.0) * ((b + 2.0) - b * l * l * r * r)
}

/// Pair integrals between bubbles at distance `d`:
/// `[∫(-ΔU1)U2, ∫R1 U2^{2*}, ∂λ of the first, ∂λ of the second]`.
fn pair_terms(a: &Ansatz<f64>, d: f64, spec: &QuadratureSpec) -> GkResult<f64, 4> {
    let p = a.params;
    let (c, l, e, rc) = (a.coeff, a.lambda, p.two_star_alpha(), riesz_coef(a));
    let mut r = two_center_moments(
        |s, t| {
            let lap1 = bubble_neg_laplacian_radial(&p, c, l, s);
            let u2 = bubble_radial(&p, c, l, t);
            let u2l = bubble_d_lambda_radial(&p, c, l, t);
            let r1 = riesz_profile(&p, rc, l, s);
            let r1l = riesz_profile_d_lambda(&p, rc, l, s);
            [
                lap1 * u2,
                r1 * u2.powf(e),
                2.0 * lap1 * u2l,
                r1l * u2.powf(e) + e * r1 * u2.powf(e - 1.0) * u2l,
            ]
        },
        p.n(),
        d,
        FeatureScales::uniform(1.0 / l),
        &tight(spec),
    );
    let area = sphere_area::<f64>(p.n() - 1);
    for k in 0..4 {
        r.value[k] *= area;
        r.error[k] *= area;
    }
    r
}

/// Accumulates `(Σu)^e - Σu^e` and its λ-derivative with the largest term split off.
#[derive(Default)]
struct PowerExcess {
    top: f64,
    top_l: f64,
    rest: f64,
    rest_l: f64,
    rest_e: f64,
    rest_de: f64,
}

impl PowerExcess {
    fn push(&mut self, e: f64, u: f64, ul: f64) {
        let (mut u, mut ul) = (u, ul);
        if u > self.top {
            std::mem::swap(&mut u, &mut self.top);
            std::mem::swap(&mut ul, &mut self.top_l);
        }
        if u > 0.0 {
            let ue1 = u.powf(e - 1.0);
            self.rest += u;
            self.rest_l += ul;
            self.rest_e += ue1 * u;
            self.rest_de += e * ue1 * ul;
        }
    }

    /// `(excess, ∂λ excess)`.
    fn finish(&self, e: f64) -> (f64, f64) {
        if self.top <= 0.0 {
            return (0.0, 0.0);
        }
        let lr = (self.rest / self.top).ln_1p();
        let te1 = self.top.powf(e - 1.0);
        let s1 = (self.top + self.rest).powf(e - 1.0);
        (
            te1 * self.top * (e * lr).exp_m1() - self.rest_e,
            e * self.top_l * te1 * ((e - 1.0) * lr).exp_m1() + e * s1 * self.rest_l - self.rest_de,
        )
    }
}

/// Pointwise data of `Z*`, `∂λZ*`, the star density and its potential at `x`.
struct Local {
    s: f64,
    grad_s: [f64; 32],
    ds: f64,
    grad_ds: [f64; 32],
    excess: f64,
    dexcess: f64,
    rp: f64,
    drp: f64,
    chi1: f64,
}

fn local(a: &Ansatz<f64>, rc: f64, x: &[f64]) -> Local {
    let p = &a.params;
    let n = x.len();
    let (c, l, e) = (a.coeff, a.lambda, p.two_star_alpha());
    let b = p.half_n_minus_2();
    let mut out = Local {
        s: 0.0,
        grad_s: [0.0; 32],
        ds: 0.0,
        grad_ds: [0.0; 32],
        excess: 0.0,
        dexcess: 0.0,
        rp: 0.0,
        drp: 0.0,
        chi1: 1.0,
    };
    let mut wsum = 0.0;
    let mut w1 = 0.0;
    let mut pe = PowerExcess::default();
    for (j, z) in a.placement.centers.iter().enumerate() {
        let r2 = dist2(x, z);
        let r = r2.sqrt();
        let q = 1.0 + l * l * r2;
        let u = c * (l / q).powf(b);
        let ul = u * b * (1.0 - l * l * r2) / (l * q);
        // ∇U = -(N-2)λ²(x-z)U/q, ∇∂λU = (∂λ∂rU / r)(x-z)
        let g = -(2.0 * b) * l * l * u / q;
        let gl = -2.0 * b * c * l.powf(b + 1.0) * q.powf(-b - 2.0) * ((b + 2.0) - b * l * l * r2);
        for k in 0..n {
            out.grad_s[k] += g * (x[k] - z[k]);
            out.grad_ds[k] += gl * (x[k] - z[k]);
        }
        out.s += u;
        out.ds += ul;
        pe.push(e, u, ul);
        out.rp += riesz_profile(p, rc, l, r);
        out.drp += riesz_profile_d_lambda(p, rc, l, r);
        let w = (1.0 / q).powi(4);
        wsum += w;
        if j == 0 {
            w1 = w;
        }
    }
    (out.excess, out.dexcess) = pe.finish(e);
    out.chi1 = if wsum > 0.0 { w1 / wsum } else { 1.0 / a.m() as f64 };
    out
}

/// Correction integrands `[cut_g, ⟨E,R_P⟩, |E|^t, ∂λcut_g, ∂λ⟨E,R_P⟩, |∂λE|^t]` at `x`,
/// and the partition weight `χ_1(x)`.
fn correction_integrand<P: Potential + ?Sized>(a: &Ansatz<f64>, k: &P, rc: f64, x: &[f64]) -> ([f64; 6], f64) {
    let n = x.len();
    let e = a.params.two_star_alpha();
    let t = 2.0 * n as f64 / (2.0 * n as f64 - a.params.alpha());
    let lc = local(a, rc, x);
    let km1 = if k.is_constant_one() { 0.0 } else { k.value_minus_one(x) };
    let (xi, cut_g, dcut_g) = if a.use_cutoff {
        let cj = a.cutoff.eval(x);
        let mut g2 = 0.0;
        let mut g2s = 0.0;
        let mut dg = 0.0;
        let mut dgs = 0.0;
        for i in 0..n {
            let gz = cj.value * lc.grad_s[i] + lc.s * cj.grad[i];
            let gzl = cj.value * lc.grad_ds[i] + lc.ds * cj.grad[i];
            g2 += gz * gz;
            g2s += lc.grad_s[i] * lc.grad_s[i];
            dg += gz * gzl;
            dgs += lc.grad_s[i] * lc.grad_ds[i];
        }
        (cj.value, g2 - g2s, 2.0 * (dg - dgs))
    } else {
        (1.0, 0.0, 0.0)
    };
    let se1 = if lc.s > 0.0 { lc.s.powf(e - 1.0) } else { 0.0 };
    let ze = xi.powf(e) * se1 * lc.s;
    let dz = e * xi.powf(e) * se1 * lc.ds;
    // Z^{2*} - P = (ξ^{2*} - 1) S^{2*} + (S^{2*} - P)
    let xm1 = if xi == 1.0 { 0.0 } else if xi > 0.0 { (e * xi.ln()).exp_m1() } else { -1.0 };
    let big_e = km1 * ze + xm1 * se1 * lc.s + lc.excess;
    let d_big_e = km1 * dz + xm1 * e * se1 * lc.ds + lc.dexcess;
    (
        [
            cut_g,
            big_e * lc.rp,
            big_e.abs().powf(t),
            dcut_g,
            d_big_e * lc.rp + big_e * lc.drp,
            d_big_e.abs().powf(t),
        ],
        lc.chi1,
    )
}

/// [`correction_integrand`] for two bubbles, `K ≡ 1` and no cutoff, at distances `s`, `t`.
fn two_bubble_integrand(a: &Ansatz<f64>, rc: f64, s: f64, t: f64) -> [f64; 6] {
    let p = &a.params;
    let (c, l, e) = (a.coeff, a.lambda, p.two_star_alpha());
    let tt = 2.0 * p.n_real() / (2.0 * p.n_real() - p.alpha());
    let (u1, u2) = (bubble_radial(p, c, l, s), bubble_radial(p, c, l, t));
    let (v1, v2) = (bubble_d_lambda_radial(p, c, l, s), bubble_d_lambda_radial(p, c, l, t));
    let mut pe = PowerExcess::default();
    pe.push(e, u1, v1);
    pe.push(e, u2, v2);
    let (big_e, d_big_e) = pe.finish(e);
    let rp = riesz_profile(p, rc, l, s) + riesz_profile(p, rc, l, t);
    let drp = riesz_profile_d_lambda(p, rc, l, s) + riesz_profile_d_lambda(p, rc, l, t);
    [
        0.0,
        big_e * rp,
        big_e.abs().powf(tt),
        0.0,
        d_big_e * rp + big_e * drp,
        d_big_e.abs().powf(tt),
    ]
}

fn needs_correction<P: Potential + ?Sized>(a: &Ansatz<f64>, k: &P) -> bool {
    a.use_cutoff || !k.is_constant_one() || a.m() > 1
}

/// Tolerance for the `|E|^t` components, which only enter an error bound.
const NORM_REL_TOL: f64 = 1e-3;

/// Integrates `select(correction_integrand)` over `R^N`.
fn correction_part<P, const D: usize>(
    a: &Ansatz<f64>,
    k: &P,
    spec: &QuadratureSpec,
    select: fn(&[f64; 6]) -> [f64; D],
) -> Result<GkResult<f64, D>>
where
    P: Potential + ?Sized,
{
    let rc = riesz_coef(a);
    let l = a.lambda;
    let n = a.params.n();
    if a.m() == 2 && k.is_constant_one() && !a.use_cutoff {
        // the integrands depend on the two distances only
        let d = dist(&a.placement.centers[0], &a.placement.centers[1]);
        let mut r = two_center_moments(
            |s, t| select(&two_bubble_integrand(a, rc, s, t)),
            n,
            d,
            FeatureScales::uniform(1.0 / l),
            &tight(spec),
        );
        let area = sphere_area::<f64>(n - 1);
        for i in 0..D {
            r.value[i] *= area;
            r.error[i] *= area;
        }
        return Ok(r);
    }
    let z1 = &a.placement.centers[0];
    let same = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(p, q)| (p - q).abs() <= 1e-12);
    let xb = &a.placement.x_bar_pp;
    if (a.use_cutoff && !same(xb, &a.cutoff.x0_pp)) || (!k.is_constant_one() && !same(xb, k.x0_pp())) {
        return Err(Error::NotCoaxial);
    }
    let mut breaks = vec![1.0 / l, 10.0 / l, 100.0 / l];
    for j in 2..=a.m() {
        let d = a.placement.chord(j);
        breaks.extend([d - 4.0 / l, d, d + 4.0 / l]);
    }
    if a.use_cutoff {
        let off = (a.placement.r_bar - a.cutoff.r0).abs();
        let dl = a.cutoff.delta;
        breaks.extend([dl - off, dl + off, 2.0 * dl - off, 2.0 * dl + off]);
    }
    if !k.is_constant_one() {
        let off = (a.placement.r_bar - k.r0()).abs();
        for f in k.feature_radii() {
            breaks.extend([f - off, f + off]);
        }
    }
    let frame = CenteredFrame {
        center: z1.clone(),
        scale: 1.0 / l,
        breaks,
    };
    let mut r = centered_integral(
        |x| {
            let (v, chi) = correction_integrand(a, k, rc, x);
            select(&v).map(|t| chi * t)
        },
        &frame,
        spec,
    );
    let m = a.m() as f64;
    for i in 0..D {
        r.value[i] *= m;
        r.error[i] *= m;
    }
    Ok(r)
}

/// `[cut_g, ⟨E,R_P⟩, ∂λcut_g, ∂λ⟨E,R_P⟩]` and `[∫|E|^t, ∫|∂λE|^t]`.
fn correction<P: Potential + ?Sized>(
    a: &Ansatz<f64>,
    k: &P,
    spec: &QuadratureSpec,
) -> Result<(GkResult<f64, 4>, GkResult<f64, 2>)> {
    let main = correction_part(a, k, spec, |v| [v[0], v[1], v[3], v[4]])?;
    let loose = QuadratureSpec {
        rel_tol: spec.rel_tol.max(NORM_REL_TOL),
        ..*spec
    };
    let norms = correction_part(a, k, &loose, |v| [v[2], v[5]])?;
    Ok((main, norms))
}

/// Unique chord indices with multiplicities: `|z1 - zj| = |z1 - z_{m+2-j}|`.
fn chord_classes(m: usize) -> Vec<(usize, f64)> {
    (2..=m)
        .filter(|&j| j - 1 <= m + 1 - j)
        .map(|j| (j, if j - 1 == m + 1 - j { 1.0 } else { 2.0 }))
        .collect()
}

struct Assembled {
    g: f64,
    g_err: f64,
    d: f64,
    d_err: f64,
    dg: f64,
    dg_err: f64,
    dd: f64,
    dd_err: f64,
    e_norm: f64,
    de_norm: f64,
    converged: bool,
}

fn assemble<P: Potential + ?Sized>(a: &Ansatz<f64>, k: &P, spec: &QuadratureSpec) -> Result<Assembled> {
    spec.validate()?;
    let m = a.m() as f64;
    let single = single_bubble(a, spec);
    let mut out = Assembled {
        g: m * single.value[0],
        g_err: m * single.error[0],
        d: m * single.value[1],
        d_err: m * single.error[1],
        dg: m * single.value[2],
        dg_err: m * single.error[2],
        dd: m * single.value[3],
        dd_err: m * single.error[3],
        e_norm: 0.0,
        de_norm: 0.0,
        converged: single.converged,
    };
    for (j, mult) in chord_classes(a.m()) {
        let pr = pair_terms(a, a.placement.chord(j), spec);
        let w = m * mult;
        out.g += w * pr.value[0];
        out.g_err += w * pr.error[0];
        out.d += w * pr.value[1];
        out.d_err += w * pr.error[1];
        out.dg += w * pr.value[2];
        out.dg_err += w * pr.error[2];
        out.dd += w * pr.value[3];
        out.dd_err += w * pr.error[3];
        out.converged &= pr.converged;
    }
    if needs_correction(a, k) {
        let (c, nm) = correction(a, k, spec)?;
        let t = 2.0 * a.params.n_real() / (2.0 * a.params.n_real() - a.params.alpha());
        out.g += c.value[0];
        out.g_err += c.error[0];
        out.d += 2.0 * c.value[1];
        out.d_err += 2.0 * c.error[1];
        out.dg += c.value[2];
        out.dg_err += c.error[2];
        out.dd += 2.0 * c.value[3];
        out.dd_err += 2.0 * c.error[3];
        out.e_norm = (nm.value[0] + nm.error[0]).max(0.0).powf(1.0 / t);
        out.de_norm = (nm.value[1] + nm.error[1]).max(0.0).powf(1.0 / t);
        out.converged &= c.converged;
    }
    Ok(out)
}

/// `J` on the ansatz with potential `K`.
pub fn energy_eval<P: Potential + ?Sized>(a: &Ansatz<f64>, k: &P, spec: &QuadratureSpec) -> Result<EnergyReport> {
    let (mut r, bound) = energy_parts(a, k, spec)?;
    r.est_error += bound;
    Ok(r)
}

/// `J` without `D(E)`, with its quadrature error only, and the bound on the omitted term.
fn energy_parts<P: Potential + ?Sized>(a: &Ansatz<f64>, k: &P, spec: &QuadratureSpec) -> Result<(EnergyReport, f64)> {
    let s = assemble(a, k, spec)?;
    let e2 = 2.0 * a.params.two_star_alpha();
    let d_bound = hls_constant(&a.params) * s.e_norm * s.e_norm / e2;
    let gradient_term = 0.5 * s.g;
    let nonlocal_term = s.d / e2;
    let est_error = 0.5 * s.g_err + s.d_err / e2;
    if !s.converged || !(gradient_term.is_finite() && nonlocal_term.is_finite()) {
        return Err(Error::QuadratureFailure(format!(
            "energy did not reach the requested tolerance (estimated error {est_error:e})"
        )));
    }
    let r = EnergyReport {
        gradient_term,
        nonlocal_term,
        total: gradient_term - nonlocal_term,
        est_error,
    };
    Ok((r, d_bound))
}

/// `dJ/dλ` on the ansatz, without the `D(E)` contribution (bounded separately).
///
/// `Analytic` integrates the differentiated integrands. `CentralFd` uses the 5-point
/// stencil with step `fd_step·λ` on [`energy_eval`]; steps of `0.1λ` or more are rejected.
pub fn dj_dlambda<P: Potential + ?Sized>(
    a: &Ansatz<f64>,
    k: &P,
    spec: &QuadratureSpec,
    method: DerivativeMethod,
) -> Result<Derivative> {
    dj_dlambda_with_step(a, k, spec, method, 1e-2)
}

pub fn dj_dlambda_with_step<P: Potential + ?Sized>(
    a: &Ansatz<f64>,
    k: &P,
    spec: &QuadratureSpec,
    method: DerivativeMethod,
    fd_step: f64,
) -> Result<Derivative> {
    match method {
        DerivativeMethod::Analytic => {
            let s = assemble(a, k, spec)?;
            let e2 = 2.0 * a.params.two_star_alpha();
            let value = 0.5 * s.dg - s.dd / e2;
            let est_error = 0.5 * s.dg_err + s.dd_err / e2;
            if !s.converged || !value.is_finite() {
                return Err(Error::QuadratureFailure(format!(
                    "dJ/dλ did not reach the requested tolerance (estimated error {est_error:e})"
                )));
            }
            Ok(Derivative {
                value,
                est_error,
                omitted_bound: 2.0 * hls_constant(&a.params) * s.e_norm * s.de_norm / e2,
            })
        }
        DerivativeMethod::CentralFd => {
            let l = a.lambda;
            let h = fd_step * l;
            if !(fd_step > 0.0) || fd_step >= 0.1 {
                return Err(Error::StepTooCoarse { step: h, lambda: l });
            }
            let j = |t: f64| energy_parts(&a.with_lambda(l + t * h), k, spec).map(|r| r.0);
            let (p2, p1, m1, m2) = (j(2.0)?, j(1.0)?, j(-1.0)?, j(-2.0)?);
            let s = assemble(a, k, spec)?;
            let omitted_bound = 2.0 * hls_constant(&a.params) * s.e_norm * s.de_norm / (2.0 * a.params.two_star_alpha());
            let value = (-p2.total + 8.0 * p1.total - 8.0 * m1.total + m2.total) / (12.0 * h);
            let three = (p1.total - m1.total) / (2.0 * h);
            let err_q = (p2.est_error + 8.0 * p1.est_error + 8.0 * m1.est_error + m2.est_error) / (12.0 * h);
            // the 3-point/5-point gap overestimates the 5-point truncation error
            let err_t = (value - three).abs() * 0.25;
            Ok(Derivative {
                value,
                est_error: err_q + err_t,
                omitted_bound,
            })
        }
    }
}

/// Fitted coefficients of `dJ/dλ ≈ m(-A1/λ³ + A2·B(m,r̄)/λ^{N-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub a1: f64,
    /// Absent for `m = 1`, where there is no interaction.
    pub a2: Option<f64>,
    /// `A2·B(m,r̄)/m^{N-2}`.
    pub a3: Option<f64>,
    pub residuals: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub samples: Vec<f64>,
    /// Weighted residual norm relative to the weighted data norm.
    pub rel_residual: f64,
}

impl ExpansionFit {
    pub fn predict(&self, p: &ProblemParams<f64>, m: usize, r_bar: f64, lambda: f64) -> f64 {
        let n = p.n_real();
        let mut v = -self.a1 / lambda.powi(3);
        if let (Some(a2), true) = (self.a2, m >= 2) {
            v += a2 * interaction_sum(m, r_bar, n - 2.0).unwrap_or(0.0) / lambda.powf(n - 1.0);
        }
        m as f64 * v
    }
}

/// Least-squares fit of samples `dj[i] ≈ dJ/dλ(λ_i)` to the two-term model, with
/// residuals weighted by `λ³`.
pub fn fit_samples(p: &ProblemParams<f64>, m: usize, r_bar: f64, lambdas: &[f64], dj: &[f64]) -> Result<ExpansionFit> {
    if lambdas.len() != dj.len() {
        return Err(Error::InvalidInput("lambda grid and samples differ in length".into()));
    }
    if lambdas.len() < 4 {
        return Err(Error::IllConditionedFit(format!("need at least 4 λ values, got {}", lambdas.len())));
    }
    let (lo, hi) = lambdas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if !(lo > 0.0) || hi < 4.0 * lo {
        return Err(Error::IllConditionedFit(format!("λ grid spans [{lo}, {hi}], less than a factor 4")));
    }
    let n = p.n_real();
    let mf = m as f64;
    let b = if m >= 2 { Some(interaction_sum(m, r_bar, n - 2.0)?) } else { None };
    let cols = if b.is_some() { 2 } else { 1 };
    let rows = lambdas.len();
    let mut x = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for (i, (&l, &v)) in lambdas.iter().zip(dj).enumerate() {
        let w = l.powi(3);
        x[(i, 0)] = -mf / l.powi(3) * w;
        if let Some(b) = b {
            x[(i, 1)] = mf * b / l.powf(n - 1.0) * w;
        }
        y[i] = v * w;
    }
    // column scaling before the SVD keeps the condition number meaningful
    let scales: Vec<f64> = (0..cols).map(|j| x.column(j).norm()).collect();
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::IllConditionedFit("degenerate design column".into()));
    }
    let mut xs = x.clone();
    for j in 0..cols {
        xs.column_mut(j).scale_mut(1.0 / scales[j]);
    }
    let svd = xs.clone().svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !(cond < 1e8) {
        return Err(Error::IllConditionedFit(format!("design condition number {cond:e}")));
    }
    let coef = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::IllConditionedFit(e.to_string()))?;
    let coef: Vec<f64> = (0..cols).map(|j| coef[j] / scales[j]).collect();
    let fitted = &x * DVector::from_vec(coef.clone());
    let resid_w = &y - &fitted;
    let residuals: Vec<f64> = resid_w
        .iter()
        .zip(lambdas)
        .map(|(r, l)| r / l.powi(3))
        .collect();
    let a2 = b.map(|_| coef[1]);
    Ok(ExpansionFit {
        a1: coef[0],
        a2,
        a3: a2.zip(b).map(|(a2, b)| a2 * b / mf.powf(n - 2.0)),
        residuals,
        lambda_grid: lambdas.to_vec(),
        samples: dj.to_vec(),
        rel_residual: resid_w.norm() / y.norm().max(f64::MIN_POSITIVE),
    })
}

/// Samples `dJ/dλ` (analytic) on the grid and fits the expansion.
pub fn fit_expansion<P: Potential + ?Sized>(
    template: &Ansatz<f64>,
    k: &P,
    lambda_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<ExpansionFit> {
    let dj = lambda_grid
        .iter()
        .map(|&l| dj_dlambda(&template.with_lambda(l), k, spec, DerivativeMethod::Analytic).map(|d| d.value))
        .collect::<Result<Vec<_>>>()?;
    fit_samples(&template.params, template.m(), template.placement.r_bar, lambda_grid, &dj)
}

/// `M2 = ∫|y|² (|x|^{-α} * U^{2*})(y) U^{2*}(y) dy` at `λ = 1`.
pub fn second_moment(p: &ProblemParams<f64>, c: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let rc = riesz_identity_constant(p, p.alpha() / 2.0)? * c.powf(p.two_star_alpha());
    let e = p.two_star_alpha();
    let r = radial_moment(
        |r: f64| [r * r * riesz_profile(p, rc, 1.0, r) * bubble_radial(p, c, 1.0, r).powf(e)],
        p.n(),
        1.0,
        &[1.0, 10.0],
        tight(spec).gk(),
    );
    let area = sphere_area::<f64>(p.n());
    IntegralResult {
        value: r.value[0] * area,
        est_error: r.error[0] * area,
        nodes_used: r.evals,
        scheme: Scheme::Radial1d,
        converged: r.converged,
    }
    .checked("second moment")
}

/// Leading-order `A1 = (-ΔK(x0)/(N·2*_α))·M2`, from expanding `K` to second order
/// about a bubble sitting at its critical point.
pub fn coefficient_a1_moment<P: Potential + ?Sized>(
    p: &ProblemParams<f64>,
    c: f64,
    k: &P,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let m2 = second_moment(p, c, spec)?;
    let f = k.neg_laplacian_at_critical() / (p.n_real() * p.two_star_alpha());
    Ok(m2.scaled(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInteraction {
    /// `∫ (|x|^{-α} * U1^{2*}) U1^{2*-2} U2 ∂λU1`.
    pub value: f64,
    pub est_error: f64,
    /// `-value·λ^{N-1}|z1-z2|^{N-2}`, which tends to a constant.
    pub coefficient: f64,
}

pub fn pair_interaction(
    p: &ProblemParams<f64>,
    c: f64,
    z1: &[f64],
    z2: &[f64],
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<PairInteraction> {
    let d = dist(z1, z2);
    if d == 0.0 {
        return Err(Error::CoincidentCenters);
    }
    if lambda * d < 10.0 {
        return Err(Error::TooClose(lambda * d));
    }
    let e = p.two_star_alpha();
    let rc = riesz_identity_constant(p, p.alpha() / 2.0)? * c.powf(e);
    let r = two_center_moments(
        |s, t| {
            let u1 = bubble_radial(p, c, lambda, s);
            [riesz_profile(p, rc, lambda, s)
                * u1.powf(e - 2.0)
                * bubble_d_lambda_radial(p, c, lambda, s)
                * bubble_radial(p, c, lambda, t)]
        },
        p.n(),
        d,
        FeatureScales::uniform(1.0 / lambda),
        &tight(spec),
    );
    let area = sphere_area::<f64>(p.n() - 1);
    let res = IntegralResult {
        value: r.value[0] * area,
        est_error: r.error[0] * area,
        nodes_used: r.evals,
        scheme: Scheme::TwoCenter2d,
        converged: r.converged,
    }
    .checked("pair interaction")?;
    let n = p.n_real();
    Ok(PairInteraction {
        value: res.value,
        est_error: res.est_error,
        coefficient: -res.value * lambda.powf(n - 1.0) * d.powf(n - 2.0),
    })
}

/// `∫|∇U|² / D(U^{2*_α})^{1/2*_α}` for a single bubble, both integrals by radial quadrature.
pub fn hls_quotient(p: &ProblemParams<f64>, c: f64, lambda: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    let cut = crate::geometry::CutoffSpec::new(1.0, vec![0.0; p.n() - 2], 0.1)?;
    let a = Ansatz::new(*p, c, 1, 1.0, &vec![0.0; p.n() - 2], lambda, cut, false)?;
    let s = single_bubble(&a, spec);
    if !s.converged {
        return Err(Error::QuadratureFailure("HLS quotient integrals did not converge".into()));
    }
    let e = p.two_star_alpha();
    let q = s.value[0] / s.value[1].powf(1.0 / e);
    Ok(IntegralResult {
        value: q,
        est_error: q * (s.error[0] / s.value[0] + s.error[1] / (e * s.value[1])),
        nodes_used: s.evals,
        scheme: Scheme::Radial1d,
        converged: true,
    })
}
