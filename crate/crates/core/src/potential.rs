//! Potentials `K(r, x'')` with a nondegenerate maximum on the circle `r = r0`, `x'' = x0''`.
//!
//! The built-in family is `K = 1 - a q(s)` with `s = |(r, x'') - (r0, x0'')|`,
//! `q = s²` up to `ρ_t`, blended by a quintic smoothstep into the constant `ρ_t²`
//! beyond `2ρ_t`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{smoothstep5, Real};

/// Derivatives of `K` in the reduced variables `(r, x'')`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialJet<T> {
    pub value: T,
    pub grad_r: T,
    pub grad_xpp: Vec<T>,
    /// `∂_r² K + Δ_{x''} K`.
    pub partial_laplacian: T,
}

/// Anything usable as `K` by the energy and reduction code.
pub trait Potential: Sync {
    fn r0(&self) -> f64;
    fn x0_pp(&self) -> &[f64];
    /// `K` at a point of `R^N`.
    fn value(&self, x: &[f64]) -> f64;
    /// `K - 1`, for implementations that can avoid the cancellation.
    fn value_minus_one(&self, x: &[f64]) -> f64 {
        self.value(x) - 1.0
    }
    /// Gradient in `(r, x'')` at the given reduced coordinates.
    fn reduced_grad(&self, r: f64, xpp: &[f64]) -> Vec<f64>;
    /// Hessian in `(r, x'')`.
    fn reduced_hessian(&self, r: f64, xpp: &[f64]) -> DMatrix<f64>;
    /// `-ΔK` at the critical point, in the `N - 1` reduced variables.
    fn neg_laplacian_at_critical(&self) -> f64 {
        let h = self.reduced_hessian(self.r0(), self.x0_pp());
        -h.trace()
    }
    /// True when `K ≡ 1`.
    fn is_constant_one(&self) -> bool {
        false
    }
    /// Distances from the critical circle where `K` is less smooth.
    fn feature_radii(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialModel<T> {
    pub r0: T,
    pub x0_pp: Vec<T>,
    pub a: T,
    pub rho_t: T,
    pub floor: T,
}

/// `max q(s)/ρ_t²` over the transition `ρ_t ≤ s ≤ 2ρ_t`.
pub fn transition_overshoot<T: Real>() -> T {
    let q = |s: T| {
        let (sm, _, _) = smoothstep5(s - T::one());
        s * s + (T::one() - s * s) * sm
    };
    let k = 4000;
    let mut best = (T::one(), T::one());
    for i in 0..=k {
        let s = T::one() + T::from_usize_lossy(i) / T::from_usize_lossy(k);
        let v = q(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    // golden-section refinement around the grid maximum
    let h = T::one() / T::from_usize_lossy(k);
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = T::lit(0.618_033_988_749_894_8);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if q(a) > q(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    q((lo + hi) * T::lit(0.5))
}

pub fn make_quadratic_model<T: Real>(r0: T, x0_pp: Vec<T>, a: T, rho_t: T) -> Result<PotentialModel<T>> {
    if !(r0 > T::zero() && rho_t > T::zero()) {
        return Err(Error::InvalidInput("r0 and rho_t must be positive".into()));
    }
    if !(a > T::zero()) {
        return Err(Error::InvalidInput("curvature a must be positive".into()));
    }
    if !(a * rho_t * rho_t * transition_overshoot::<T>() < T::one()) {
        return Err(Error::CurvatureTooLarge {
            a: a.to_f64_lossy(),
            rho_t: rho_t.to_f64_lossy(),
        });
    }
    Ok(PotentialModel {
        r0,
        x0_pp,
        a,
        rho_t,
        floor: T::one() - a * rho_t * rho_t,
    })
}

/// Defaults: `a = 1/(2(N-1))` so that `ΔK = -1` at the maximum, `ρ_t = r0/2`.
pub fn default_quadratic_model(n: usize) -> PotentialModel<f64> {
    make_quadratic_model(1.0, vec![0.0; n - 2], 1.0 / (2.0 * (n as f64 - 1.0)), 0.5)
        .expect("default parameters are admissible")
}

impl<T: Real> PotentialModel<T> {
    /// `K ≡ 1`, written as the `a = 0` member of the family.
    pub fn constant_one(r0: T, x0_pp: Vec<T>) -> Self {
        Self {
            r0,
            x0_pp,
            a: T::zero(),
            rho_t: r0 * T::lit(0.5),
            floor: T::one(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.a == T::zero()
    }

    /// `q`, `q'`, `q''` in `s`.
    fn q(&self, s: T) -> (T, T, T) {
        let rt = self.rho_t;
        let two = T::lit(2.0);
        if s <= rt {
            return (s * s, two * s, two);
        }
        if s >= two * rt {
            return (rt * rt, T::zero(), T::zero());
        }
        let (sm, ds, d2s) = smoothstep5((s - rt) / rt);
        let (ds, d2s) = (ds / rt, d2s / (rt * rt));
        let gap = rt * rt - s * s;
        (
            s * s + gap * sm,
            two * s - two * s * sm + gap * ds,
            two - two * sm - T::lit(4.0) * s * ds + gap * d2s,
        )
    }

    /// `K` and its first two derivatives in `s`.
    pub fn profile(&self, s: T) -> (T, T, T) {
        let (q, dq, d2q) = self.q(s);
        (T::one() - self.a * q, -self.a * dq, -self.a * d2q)
    }

    fn reduced_offset(&self, r: T, xpp: &[T]) -> (Vec<T>, T) {
        let mut v = Vec::with_capacity(xpp.len() + 1);
        v.push(r - self.r0);
        for (a, b) in xpp.iter().zip(&self.x0_pp) {
            v.push(*a - *b);
        }
        let s = v.iter().fold(T::zero(), |acc, &w| acc + w * w).sqrt();
        (v, s)
    }

    pub fn reduced_coords(x: &[T]) -> (T, Vec<T>) {
        ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[2..].to_vec())
    }

    pub fn eval_reduced(&self, r: T, xpp: &[T]) -> PotentialJet<T> {
        let (v, s) = self.reduced_offset(r, xpp);
        let (k, dk, d2k) = self.profile(s);
        let dim = T::from_usize_lossy(v.len());
        if s == T::zero() {
            return PotentialJet {
                value: k,
                grad_r: T::zero(),
                grad_xpp: vec![T::zero(); xpp.len()],
                partial_laplacian: d2k * dim,
            };
        }
        let f = dk / s;
        PotentialJet {
            value: k,
            grad_r: f * v[0],
            grad_xpp: v[1..].iter().map(|&w| f * w).collect(),
            partial_laplacian: d2k + (dim - T::one()) * dk / s,
        }
    }

    /// `K`, reduced gradient and partial Laplacian at a point of `R^N`.
    pub fn eval(&self, x: &[T]) -> PotentialJet<T> {
        let (r, xpp) = Self::reduced_coords(x);
        self.eval_reduced(r, &xpp)
    }

    pub fn value_at(&self, x: &[T]) -> T {
        let (r, xpp) = Self::reduced_coords(x);
        self.profile(self.reduced_offset(r, &xpp).1).0
    }

    /// Hessian in `(r, x'')`: `k'' n nᵀ + (k'/s)(I - n nᵀ)`.
    pub fn hessian_reduced(&self, r: T, xpp: &[T]) -> Vec<Vec<T>> {
        let (v, s) = self.reduced_offset(r, xpp);
        let d = v.len();
        let (_, dk, d2k) = self.profile(s);
        let mut h = vec![vec![T::zero(); d]; d];
        if s == T::zero() {
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = d2k;
            }
            return h;
        }
        for i in 0..d {
            for j in 0..d {
                let nn = v[i] * v[j] / (s * s);
                let id = if i == j { T::one() } else { T::zero() };
                h[i][j] = d2k * nn + dk / s * (id - nn);
            }
        }
        h
    }

    /// Validates the model against a cutoff radius: `K > 0` on the `10δ` ball.
    pub fn check_positive_near(&self, delta: T) -> Result<()> {
        let k = 400;
        for i in 0..=k {
            let s = T::lit(10.0) * delta * T::from_usize_lossy(i) / T::from_usize_lossy(k);
            if !(self.profile(s).0 > T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "K is not positive at distance {} from the critical circle",
                    s.to_f64_lossy()
                )));
            }
        }
        Ok(())
    }
}

/// Sign of the determinant of the reduced Hessian at the critical point.
pub fn degree_sign<P: Potential + ?Sized>(model: &P) -> Result<i32> {
    let h = model.reduced_hessian(model.r0(), model.x0_pp());
    let det = h.determinant();
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(h.nrows() as i32);
    if det == 0.0 || det.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateHessian(det));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

impl Potential for PotentialModel<f64> {
    fn r0(&self) -> f64 {
        self.r0
    }

    fn x0_pp(&self) -> &[f64] {
        &self.x0_pp
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_at(x)
    }

    fn value_minus_one(&self, x: &[f64]) -> f64 {
        let (r, xpp) = Self::reduced_coords(x);
        -self.a * self.q(self.reduced_offset(r, &xpp).1).0
    }

    fn reduced_grad(&self, r: f64, xpp: &[f64]) -> Vec<f64> {
        let j = self.eval_reduced(r, xpp);
        let mut g = vec![j.grad_r];
        g.extend(j.grad_xpp);
        g
    }

    fn reduced_hessian(&self, r: f64, xpp: &[f64]) -> DMatrix<f64> {
        let h = self.hessian_reduced(r, xpp);
        let d = h.len();
        DMatrix::from_fn(d, d, |i, j| h[i][j])
    }

    fn neg_laplacian_at_critical(&self) -> f64 {
        -self.eval_reduced(self.r0, &self.x0_pp).partial_laplacian
    }

    fn feature_radii(&self) -> Vec<f64> {
        vec![self.rho_t, 2.0 * self.rho_t]
    }

    fn is_constant_one(&self) -> bool {
        self.is_constant()
    }
}

/// A user-supplied `K(r, x'')` with finite-difference derivatives.
pub struct FnPotential<F> {
    pub f: F,
    pub r0: f64,
    pub x0_pp: Vec<f64>,
    pub step: f64,
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> FnPotential<F> {
    pub fn new(f: F, r0: f64, x0_pp: Vec<f64>) -> Self {
        Self { f, r0, x0_pp, step: 1e-4 }
    }

    fn at(&self, y: &[f64]) -> f64 {
        (self.f)(y[0], &y[1..])
    }

    /// Checks that `(r0, x0'')` is a critical point with nonzero degree, by finite differences.
    pub fn check_assumptions(&self, tol: f64) -> Result<i32> {
        let g = self.reduced_grad(self.r0, &self.x0_pp);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn > tol {
            return Err(Error::InvalidInput(format!(
                "supplied K is not critical at (r0, x0''): |grad K| = {gn:e}"
            )));
        }
        degree_sign(self)
    }
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> Potential for FnPotential<F> {
    fn r0(&self) -> f64 {
        self.r0
    }

    fn x0_pp(&self) -> &[f64] {
        &self.x0_pp
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)((x[0] * x[0] + x[1] * x[1]).sqrt(), &x[2..])
    }

    fn reduced_grad(&self, r: f64, xpp: &[f64]) -> Vec<f64> {
        let mut y = vec![r];
        y.extend_from_slice(xpp);
        let h = self.step;
        (0..y.len())
            .map(|i| {
                let (mut a, mut b) = (y.clone(), y.clone());
                a[i] += h;
                b[i] -= h;
                (self.at(&a) - self.at(&b)) / (2.0 * h)
            })
            .collect()
    }

    fn reduced_hessian(&self, r: f64, xpp: &[f64]) -> DMatrix<f64> {
        let mut y = vec![r];
        y.extend_from_slice(xpp);
        let h = self.step;
        let d = y.len();
        DMatrix::from_fn(d, d, |i, j| {
            let shifted = |si: f64, sj: f64| {
                let mut z = y.clone();
                z[i] += si;
                z[j] += sj;
                self.at(&z)
            };
            (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h)
        })
    }
}
