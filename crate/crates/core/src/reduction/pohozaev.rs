//! Local Pohožaev residuals over the tube `D_ρ = {|(r, x'') - (r0, x0'')| ≤ ρ}`.
//!
//! With `x' = r(cos θ, sin θ)` and `(r - r0, x'' - x0'') = σ(cos β, sin β·ν)`,
//! `ν ∈ S^{N-3}`,
//!
//! ```text
//! dx = r σ^{N-2} sin^{N-3}β dβ dν dσ dθ.
//! ```
//!
//! `θ`, `σ` and `β` are integrated by nested adaptive Gauss–Kronrod, `ν` by shifted
//! Halton sphere designs in antithetic pairs; each shift is carried as a separate component and the
//! spread of the shift means gives the sampling error. For fields that depend on
//! `x''` only through `|x'' - x0''|` the `ν` average is exact.

use serde::{Deserialize, Serialize};

use crate::bubbles::Ansatz;
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::potential::Potential;
use crate::quadrature::gk::{integrate, integrate_carried, GkOptions, GkResult};
use crate::quadrature::qmc::{replicate_stats, sphere_designs, SHIFTS};
use crate::quadrature::QuadratureSpec;
use crate::riesz::{riesz_profile, riesz_radial};
use crate::scalar::{dist, dist2};
use crate::special::{riesz_identity_constant, sphere_area};

const MAX_DIM: usize = 32;
const OUTER_PANELS: usize = 400;
const INNER_PANELS: usize = 200;
const POLAR_PANELS: usize = 50;
/// Per-point roundoff allowance, in units of `ε` times the absolute integrand.
const ROUNDOFF: f64 = 64.0;

/// A scalar field with value, gradient and Laplacian.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Writes `∇u` into `grad[..dim]` and returns `(u, Δu)`.
    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64);
    /// Concentration points and their widths, used to place quadrature breakpoints.
    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        Vec::new()
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64) {
        (**self).jet(x, grad)
    }

    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        (**self).features()
    }
}

/// The ansatz `Z` (or `Z*`) with its closed-form derivatives.
pub struct AnsatzField<'a>(pub &'a Ansatz<f64>);

impl Field for AnsatzField<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.eval(x)
    }

    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let a = self.0;
        if a.use_cutoff {
            let (v, g, l) = a.jet(x);
            grad[..g.len()].copy_from_slice(&g);
            return (v, l);
        }
        let n = x.len();
        let p = &a.params;
        let l = a.lambda;
        let b = p.half_n_minus_2();
        grad[..n].iter_mut().for_each(|g| *g = 0.0);
        let mut s = 0.0;
        let mut lap = 0.0;
        for z in &a.placement.centers {
            let r2 = dist2(x, z);
            let q = 1.0 + l * l * r2;
            let u = a.coeff * (l / q).powf(b);
            s += u;
            let k = -2.0 * b * l * l * u / q;
            for i in 0..n {
                grad[i] += k * (x[i] - z[i]);
            }
            // ΔU = -N(N-2)λ² U / q²
            lap -= p.n_real() * 2.0 * b * l * l * u / (q * q);
        }
        (s, lap)
    }

    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        let w = 1.0 / self.0.lambda;
        self.0.placement.centers.iter().map(|z| (z.clone(), w)).collect()
    }
}

/// `u + a·exp(-|x - c|²/w²)`.
pub struct BumpedField<F> {
    pub base: F,
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl<F: Field> BumpedField<F> {
    fn bump(&self, x: &[f64]) -> (f64, f64) {
        let d2 = dist2(x, &self.center);
        let w2 = self.width * self.width;
        (self.amplitude * (-d2 / w2).exp(), d2 / w2)
    }
}

impl<F: Field> Field for BumpedField<F> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + self.bump(x).0
    }

    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let (v, l) = self.base.jet(x, grad);
        let (g, q) = self.bump(x);
        let w2 = self.width * self.width;
        let n = x.len();
        for i in 0..n {
            grad[i] -= 2.0 * (x[i] - self.center[i]) / w2 * g;
        }
        (v + g, l + (4.0 * q - 2.0 * n as f64) / w2 * g)
    }

    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        let mut f = self.base.features();
        f.push((self.center.clone(), self.width));
        f
    }
}

/// `k·u`.
pub struct ScaledField<F> {
    pub factor: f64,
    pub inner: F,
}

impl<F: Field> Field for ScaledField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let (v, l) = self.inner.jet(x, grad);
        grad[..x.len()].iter_mut().for_each(|g| *g *= self.factor);
        (self.factor * v, self.factor * l)
    }

    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner.features()
    }
}

/// Derivatives of `inner` by 7-point central stencils along each axis; only
/// `inner.value` is used.
pub struct FdField<F> {
    pub inner: F,
    pub step: f64,
}

const D1: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

impl<F: Field> FdField<F> {
    /// Step `10^{-2}` times the narrowest feature width of `inner` (`10^{-3}` without features).
    pub fn new(inner: F) -> Self {
        let w = inner.features().iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
        let step = if w.is_finite() { 1e-2 * w } else { 1e-3 };
        Self { inner, step }
    }
}

impl<F: Field> Field for FdField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn jet(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let n = x.len();
        let h = self.step;
        let u0 = self.inner.value(x);
        let mut y = [0.0; MAX_DIM];
        y[..n].copy_from_slice(x);
        let mut lap = 0.0;
        for i in 0..n {
            let mut d1 = 0.0;
            let mut d2 = D2[0] * u0;
            for k in 1..=3 {
                y[i] = x[i] + k as f64 * h;
                let up = self.inner.value(&y[..n]);
                y[i] = x[i] - k as f64 * h;
                let um = self.inner.value(&y[..n]);
                d1 += D1[k - 1] * (up - um);
                d2 += D2[k] * (up + um);
            }
            y[i] = x[i];
            grad[i] = d1 / h;
            lap += d2 / (h * h);
        }
        (u0, lap)
    }

    fn features(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner.features()
    }
}

/// Riesz potential `|x|^{-α} * (K|u|^{2*_α})` of the field under test.
pub trait Nonlocal: Sync {
    fn potential(&self, x: &[f64]) -> f64;
    /// Bound on the absolute pointwise error of [`Nonlocal::potential`].
    fn abs_error(&self) -> f64 {
        0.0
    }
}

impl<V: Nonlocal + ?Sized> Nonlocal for &V {
    fn potential(&self, x: &[f64]) -> f64 {
        (**self).potential(x)
    }

    fn abs_error(&self) -> f64 {
        (**self).abs_error()
    }
}

/// `Σ_j` closed-form potentials of `U_{z_j,λ}^{2*_α}`: exact for one bubble with `K ≡ 1`.
pub struct ClosedFormNonlocal {
    pub params: ProblemParams<f64>,
    pub coefficient: f64,
    pub lambda: f64,
    pub centers: Vec<Vec<f64>>,
}

impl ClosedFormNonlocal {
    pub fn for_ansatz(a: &Ansatz<f64>) -> Result<Self> {
        let p = a.params;
        Ok(Self {
            params: p,
            coefficient: riesz_identity_constant(&p, p.alpha() / 2.0)? * a.coeff.powf(p.two_star_alpha()),
            lambda: a.lambda,
            centers: a.placement.centers.clone(),
        })
    }
}

impl Nonlocal for ClosedFormNonlocal {
    fn potential(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .map(|z| riesz_profile(&self.params, self.coefficient, self.lambda, dist(x, z)))
            .sum()
    }
}

/// `k·V`.
pub struct ScaledNonlocal<V> {
    pub factor: f64,
    pub inner: V,
}

impl<V: Nonlocal> Nonlocal for ScaledNonlocal<V> {
    fn potential(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.potential(x)
    }

    fn abs_error(&self) -> f64 {
        self.factor.abs() * self.inner.abs_error()
    }
}

/// A closed-form part plus the potential of a radial remainder density `g(|y - c|)`,
/// tabulated by Chebyshev interpolation in `t = r/(r + w)` and weighted by
/// `(1 + (r/w)²)^{α/2}` so that the tabulated function stays bounded.
pub struct RadialTableNonlocal<V> {
    pub base: V,
    center: Vec<f64>,
    width: f64,
    alpha: f64,
    t_max: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    table_error: f64,
}

impl<V: Nonlocal> RadialTableNonlocal<V> {
    /// Tabulates `∫ g(|y - c|)|x - y|^{-α} dy` for `|x - c| ≤ r_max` at `degree + 1`
    /// Chebyshev points; the interpolation error is measured at the panel midpoints.
    #[allow(clippy::too_many_arguments)]
    pub fn build<G>(
        base: V,
        g: G,
        p: &ProblemParams<f64>,
        center: &[f64],
        width: f64,
        r_max: f64,
        degree: usize,
        spec: &QuadratureSpec,
    ) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Sync,
    {
        if !(width > 0.0 && r_max > 0.0) || degree < 2 {
            return Err(Error::InvalidInput("radial table needs width > 0, r_max > 0, degree >= 2".into()));
        }
        let n = p.n();
        let alpha = p.alpha();
        let t_max = r_max / (r_max + width);
        let direct = |t: f64| -> Result<(f64, f64)> {
            let r = width * t / (1.0 - t);
            let mut x = center.to_vec();
            x[0] += r;
            let v = riesz_radial(&g, n, alpha, center, &x, width, spec)?;
            let w = (1.0 + (r / width).powi(2)).powf(0.5 * alpha);
            Ok((v.value * w, v.est_error))
        };
        let nodes: Vec<f64> = (0..=degree)
            .map(|k| 0.5 * t_max * (1.0 - (std::f64::consts::PI * k as f64 / degree as f64).cos()))
            .collect();
        let mut values = Vec::with_capacity(nodes.len());
        let mut quad_err = 0.0f64;
        for &t in &nodes {
            let (v, e) = direct(t)?;
            values.push(v);
            quad_err = quad_err.max(e);
        }
        let mut out = Self {
            base,
            center: center.to_vec(),
            width,
            alpha,
            t_max,
            nodes,
            values,
            table_error: 0.0,
        };
        let mut err = quad_err;
        for k in (0..degree).step_by((degree / 8).max(1)) {
            let t = 0.5 * (out.nodes[k] + out.nodes[k + 1]);
            let (v, e) = direct(t)?;
            let r = width * t / (1.0 - t);
            let w = (1.0 + (r / width).powi(2)).powf(0.5 * alpha);
            err = err.max(((out.interpolate(t) - v) / w).abs() + e);
        }
        out.table_error = err;
        Ok(out)
    }

    /// Barycentric interpolation at Chebyshev points of the second kind.
    fn interpolate(&self, t: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        let last = self.nodes.len() - 1;
        for (k, (&tk, &vk)) in self.nodes.iter().zip(&self.values).enumerate() {
            let d = t - tk;
            if d == 0.0 {
                return vk;
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == last {
                w *= 0.5;
            }
            num += w / d * vk;
            den += w / d;
        }
        num / den
    }

    pub fn table_error(&self) -> f64 {
        self.table_error
    }
}

impl<V: Nonlocal> Nonlocal for RadialTableNonlocal<V> {
    fn potential(&self, x: &[f64]) -> f64 {
        let r = dist(x, &self.center);
        let t = (r / (r + self.width)).min(self.t_max);
        let w = (1.0 + (r / self.width).powi(2)).powf(-0.5 * self.alpha);
        self.base.potential(x) + self.interpolate(t) * w
    }

    fn abs_error(&self) -> f64 {
        self.base.abs_error() + self.table_error
    }
}

/// The tube `D_ρ` around the critical circle of `K`, with the cutoff radius `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub r0: f64,
    pub x0_pp: Vec<f64>,
    pub rho: f64,
    pub delta: f64,
}

/// Default `ρ / δ`.
pub const DEFAULT_RHO_FACTOR: f64 = 3.5;

impl Tube {
    /// Requires `2δ < ρ < 5δ` and `ρ < r0`.
    pub fn new(r0: f64, x0_pp: Vec<f64>, delta: f64, rho: f64) -> Result<Self> {
        if !(delta > 0.0 && r0 > 0.0) {
            return Err(Error::InvalidInput("tube needs delta > 0 and r0 > 0".into()));
        }
        let (lo, hi) = (2.0 * delta, (5.0 * delta).min(r0));
        if !(rho > lo && rho < hi) {
            return Err(Error::RhoOutOfRange { rho, lo, hi });
        }
        Ok(Self { r0, x0_pp, rho, delta })
    }

    pub fn around<P: Potential + ?Sized>(k: &P, delta: f64, rho: f64) -> Result<Self> {
        Self::new(k.r0(), k.x0_pp().to_vec(), delta, rho)
    }

    pub fn dim(&self) -> usize {
        self.x0_pp.len() + 2
    }

    /// Largest distance from `c` to a point of the tube.
    pub fn max_distance_from(&self, c: &[f64]) -> f64 {
        let cr = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let off = dist(&c[2..], &self.x0_pp);
        cr + self.r0 + 2.0 * self.rho + off
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevResidual {
    /// `∫_{D_ρ} (-Δu - K V u^{2*-1})·T dx` for the test field `T`.
    pub value: f64,
    pub est_error: f64,
    /// `∫ (-Δu)·T`.
    pub linear_part: f64,
    pub linear_error: f64,
    /// `∫ K V u^{2*-1}·T`.
    pub nonlocal_part: f64,
    pub nonlocal_error: f64,
    /// `∫ (|Δu| + |K V u^{2*-1}|)|T|`.
    pub l1: f64,
    pub evals: usize,
}

/// Test field of the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TestField {
    Dilation,
    /// 0-based coordinate.
    Translation(usize),
}

/// `∫_{D_ρ}(-Δu - K(|x|^{-α} * K|u|^{2*})u^{2*-1})⟨x, ∇u⟩ dx`.
pub fn pohozaev_dilation_residual<F, P, V>(
    u: &F,
    k: &P,
    v: &V,
    tube: &Tube,
    p: &ProblemParams<f64>,
    spec: &QuadratureSpec,
) -> Result<PohozaevResidual>
where
    F: Field + ?Sized,
    P: Potential + ?Sized,
    V: Nonlocal + ?Sized,
{
    residual(u, k, v, tube, p, spec, TestField::Dilation)
}

/// As [`pohozaev_dilation_residual`] with test field `∂u/∂x_i`, `i ∈ 3..=N` (1-based).
pub fn pohozaev_translation_residual<F, P, V>(
    u: &F,
    k: &P,
    v: &V,
    tube: &Tube,
    i: usize,
    p: &ProblemParams<f64>,
    spec: &QuadratureSpec,
) -> Result<PohozaevResidual>
where
    F: Field + ?Sized,
    P: Potential + ?Sized,
    V: Nonlocal + ?Sized,
{
    if !(3..=p.n()).contains(&i) {
        return Err(Error::InvalidInput(format!("translation index i = {i} outside 3..={}", p.n())));
    }
    residual(u, k, v, tube, p, spec, TestField::Translation(i - 1))
}

/// Breakpoints in `θ` and `σ` from the field's concentration points.
fn breaks(u: &(impl Field + ?Sized), tube: &Tube) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut th = vec![-PI, 0.0, PI];
    let mut sg = vec![0.0, tube.rho];
    for (c, w) in u.features() {
        let cr = (c[0] * c[0] + c[1] * c[1]).sqrt();
        let phi = c[1].atan2(c[0]);
        if cr > 0.0 {
            for k in [-10.0, -1.0, 0.0, 1.0, 10.0] {
                let mut a = phi + k * w / cr;
                if a > PI {
                    a -= 2.0 * PI;
                }
                if a < -PI {
                    a += 2.0 * PI;
                }
                th.push(a);
            }
        }
        let s = ((cr - tube.r0).powi(2) + dist2(&c[2..], &tube.x0_pp)).sqrt();
        for k in [-10.0, -1.0, 0.0, 1.0, 10.0] {
            sg.push(s + k * w);
        }
    }
    let clean = |v: &mut Vec<f64>, lo: f64, hi: f64| {
        v.retain(|x| *x >= lo && *x <= hi);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (hi - lo));
    };
    clean(&mut th, -PI, PI);
    clean(&mut sg, 0.0, tube.rho);
    (th, sg)
}

fn nested<G, const D: usize>(
    g: G,
    theta_pts: &[f64],
    sigma_pts: &[f64],
    opts: [GkOptions<f64>; 3],
) -> GkResult<f64, D>
where
    G: Fn(f64, f64, f64) -> [f64; D] + Sync,
{
    use std::f64::consts::PI;
    use std::sync::atomic::{AtomicUsize, Ordering};
    let count = AtomicUsize::new(0);
    let mut r = integrate_carried(
        |th: f64| {
            let s = integrate_carried(
                |sg: f64| {
                    let b = integrate(|beta: f64| g(th, sg, beta), &[0.0, 0.5 * PI, PI], opts[2]);
                    count.fetch_add(b.evals, Ordering::Relaxed);
                    (b.value, b.error)
                },
                sigma_pts,
                opts[1],
            );
            (s.value, s.error)
        },
        theta_pts,
        opts[0].parallel(true),
    );
    r.evals = count.into_inner();
    r
}

/// Point on the tube from `(θ, σ, β, ν)`; returns the Jacobian factor `r`.
fn tube_point(tube: &Tube, theta: f64, sigma: f64, (sb, cb): (f64, f64), nu: &[f64], x: &mut [f64]) -> f64 {
    let r = tube.r0 + sigma * cb;
    let (s, c) = theta.sin_cos();
    x[0] = r * c;
    x[1] = r * s;
    for (k, xk) in x[2..].iter_mut().enumerate() {
        *xk = tube.x0_pp[k] + sigma * sb * nu[k];
    }
    r
}

const COMPONENTS: usize = 5;

fn residual<F, P, V>(
    u: &F,
    k: &P,
    v: &V,
    tube: &Tube,
    p: &ProblemParams<f64>,
    spec: &QuadratureSpec,
    test: TestField,
) -> Result<PohozaevResidual>
where
    F: Field + ?Sized,
    P: Potential + ?Sized,
    V: Nonlocal + ?Sized,
{
    spec.validate()?;
    let n = p.n();
    if u.dim() != n || tube.dim() != n {
        return Err(Error::InvalidInput("field, tube and problem dimensions differ".into()));
    }
    if n > MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {n} above {MAX_DIM}")));
    }
    let e = p.two_star_alpha();
    // antithetic pairs make odd dependence on ν cancel exactly
    let designs: Vec<Vec<Vec<f64>>> = sphere_designs(n - 2, spec.nodes, spec.seed)
        .into_iter()
        .map(|set| {
            let neg: Vec<Vec<f64>> = set.iter().map(|v| v.iter().map(|c| -c).collect()).collect();
            set.into_iter().chain(neg).collect()
        })
        .collect();
    let area = sphere_area::<f64>(n - 2);
    let (pow_s, pow_b) = ((n - 2) as i32, (n - 3) as i32);

    // [diff, linear, nonlocal, l1, |K u^{2*-1} T|]
    let point = |x: &[f64]| -> [f64; COMPONENTS] {
        let mut grad = [0.0; MAX_DIM];
        let (val, lap) = u.jet(x, &mut grad);
        let t = match test {
            TestField::Dilation => x.iter().zip(&grad[..n]).map(|(a, b)| a * b).sum::<f64>(),
            TestField::Translation(i) => grad[i],
        };
        let kv = k.value(x);
        let pw = val.abs().powf(e - 2.0) * val;
        let nl = kv * v.potential(x) * pw;
        [
            (-lap - nl) * t,
            -lap * t,
            nl * t,
            (lap.abs() + nl.abs()) * t.abs(),
            (kv * pw * t).abs(),
        ]
    };
    let sphere_mean = |th: f64, sg: f64, beta: f64, set: &[Vec<f64>], out: &mut [f64]| {
        let mut x = [0.0; MAX_DIM];
        let (sb, cb) = beta.sin_cos();
        let jac = area * sg.powi(pow_s) * sb.powi(pow_b) / set.len() as f64;
        if jac == 0.0 {
            return;
        }
        for nu in set {
            let r = tube_point(tube, th, sg, (sb, cb), nu, &mut x[..n]);
            let f = point(&x[..n]);
            for c in 0..out.len() {
                out[c] += jac * r * f[c];
            }
        }
    };
    let (th_pts, sg_pts) = breaks(u, tube);

    // coarse pass for the absolute scale of the integrand
    let coarse = nested(
        |th, sg, beta| {
            let mut o = [0.0; COMPONENTS];
            sphere_mean(th, sg, beta, &designs[0], &mut o);
            [o[3]]
        },
        &th_pts,
        &sg_pts,
        [GkOptions::new(f64::MIN_POSITIVE, 1e-2, 50); 3],
    );
    let scale = coarse.value[0].abs().max(f64::MIN_POSITIVE);
    let abs_outer = spec.abs_tol.max(spec.rel_tol * scale);
    let abs_inner = 0.25 * abs_outer / (2.0 * std::f64::consts::PI);
    let abs_polar = 0.25 * abs_inner / tube.rho;

    const D: usize = COMPONENTS * SHIFTS;
    let r = nested(
        |th, sg, beta| {
            let mut o = [0.0; D];
            for (s, set) in designs.iter().enumerate() {
                sphere_mean(th, sg, beta, set, &mut o[s * COMPONENTS..(s + 1) * COMPONENTS]);
            }
            o
        },
        &th_pts,
        &sg_pts,
        [
            GkOptions::new(abs_outer, spec.rel_tol, OUTER_PANELS),
            GkOptions::new(abs_inner, 0.25 * spec.rel_tol, INNER_PANELS),
            GkOptions::new(abs_polar, 0.0625 * spec.rel_tol, POLAR_PANELS),
        ],
    );
    let stat = |c: usize| {
        let means: Vec<f64> = (0..SHIFTS).map(|s| r.value[s * COMPONENTS + c]).collect();
        let gk_err = (0..SHIFTS).map(|s| r.error[s * COMPONENTS + c]).sum::<f64>() / SHIFTS as f64;
        let (m, se) = replicate_stats(&means);
        (m, se + gk_err)
    };
    let (value, diff_err) = stat(0);
    let (lin, lin_err) = stat(1);
    let (nl, nl_err) = stat(2);
    let (l1, _) = stat(3);
    let (w, _) = stat(4);
    if !(value.is_finite() && l1.is_finite()) {
        return Err(Error::QuadratureFailure("Pohožaev residual is not finite".into()));
    }
    let roundoff = ROUNDOFF * f64::EPSILON * l1;
    let nonlocal_model = v.abs_error() * w;
    Ok(PohozaevResidual {
        value,
        est_error: diff_err + roundoff + nonlocal_model,
        linear_part: lin,
        linear_error: lin_err + roundoff,
        nonlocal_part: nl,
        nonlocal_error: nl_err + roundoff + nonlocal_model,
        l1,
        evals: (r.evals + coarse.evals) * spec.nodes * SHIFTS,
    })
}
