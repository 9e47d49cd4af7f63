//! Gamma function and the sharp constants of the problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::gk::GkOptions;
use crate::quadrature::radial::radial_moment;
use crate::scalar::Real;

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::NonPositiveArgument(x.to_f64_lossy()));
    }
    Ok(T::lit(statrs::function::gamma::gamma(x.to_f64_lossy())))
}

fn gamma_pos<T: Real>(x: T) -> T {
    gamma_fn(x).expect("positive gamma argument")
}

/// Surface area `2π^{n/2}/Γ(n/2)` of the unit sphere in `R^n`.
pub fn sphere_area<T: Real>(n: usize) -> T {
    let h = T::from_usize_lossy(n) / T::lit(2.0);
    T::lit(2.0) * T::PI().powf(h) / gamma_pos(h)
}

/// Volume `π^{n/2}R^n/Γ(n/2 + 1)` of the radius-`R` ball in `R^n`.
pub fn ball_volume<T: Real>(n: usize, radius: T) -> T {
    let h = T::from_usize_lossy(n) / T::lit(2.0);
    T::PI().powf(h) * radius.powi(n as i32) / gamma_pos(h + T::one())
}

/// Sharp Hardy–Littlewood–Sobolev constant `C(N, α)`.
pub fn hls_constant<T: Real>(p: &ProblemParams<T>) -> T {
    let n = p.n_real();
    let a = p.alpha();
    let two = T::lit(2.0);
    T::PI().powf(a / two) * gamma_pos(n / two - a / two) / gamma_pos(n - a / two)
        * (gamma_pos(n / two) / gamma_pos(n)).powf(-T::one() + a / n)
}

/// `I(s) = π^{N/2} Γ((N-2s)/2) / Γ(N-s)`, the constant in
/// `∫ |x-y|^{-2s} (1+|y|²)^{-(N-s)} dy = I(s) (1+|x|²)^{-s}`.
pub fn riesz_identity_constant<T: Real>(p: &ProblemParams<T>, s: T) -> Result<T> {
    let n = p.n_real();
    let two = T::lit(2.0);
    if !(s > T::zero() && s < n / two) {
        return Err(Error::SOutOfRange {
            s: s.to_f64_lossy(),
            half_n: n.to_f64_lossy() / 2.0,
        });
    }
    Ok(T::PI().powf(n / two) * gamma_pos((n - two * s) / two) / gamma_pos(n - s))
}

/// Rayleigh quotient `‖∇W‖₂² / ‖W‖_{2*}²` of `W(x) = (w·(1+|x/w|²))^{-(N-2)/2}`.
///
/// `width = 1` gives the standard profile; other widths exercise scale invariance.
pub fn sobolev_quotient<T: Real>(n: usize, width: T, rel_tol: T) -> Result<(T, T)> {
    let nf = T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let b = (nf - two) / two;
    let crit = two * nf / (nf - two);
    let opts = GkOptions::new(T::min_positive_value(), rel_tol, 4096);
    let r = radial_moment(
        |r: T| {
            let q = T::one() + (r / width) * (r / width);
            let w = (width * q).powf(-b);
            // |W'| = (N-2) (r/w²) (w q)^{-b-1} w
            let dw = (nf - two) * r / (width * width) * (width * q).powf(-b - T::one()) * width;
            [dw * dw, w.powf(crit)]
        },
        n,
        width,
        &[T::one()],
        opts,
    );
    if !r.converged {
        return Err(Error::QuadratureFailure(format!(
            "Sobolev quotient: errors {:?} for values {:?}",
            r.error.iter().map(|e| e.to_f64_lossy()).collect::<Vec<_>>(),
            r.value.iter().map(|e| e.to_f64_lossy()).collect::<Vec<_>>()
        )));
    }
    let area = sphere_area::<T>(n);
    let grad = r.value[0] * area;
    let lp = r.value[1] * area;
    let q = grad / lp.powf(two / crit);
    let err = r.error[0] / r.value[0] + (two / crit) * r.error[1] / r.value[1];
    Ok((q, q * err))
}

/// Best Sobolev constant `S`, from the Rayleigh quotient at the Aubin–Talenti profile.
pub fn sobolev_constant<T: Real>(p: &ProblemParams<T>) -> Result<T> {
    let tol = if T::epsilon() < T::lit(1e-10) { T::lit(1e-12) } else { T::lit(1e-5) };
    sobolev_quotient(p.n(), T::one(), tol).map(|(s, _)| s)
}

/// Normalization `c(N, α)` of the extremal bubble.
pub fn bubble_coefficient<T: Real>(p: &ProblemParams<T>, s: T, c_hls: T) -> T {
    let n = p.n_real();
    let a = p.alpha();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let denom = n - a + two;
    s.powf((n - a) * (two - n) / (four * denom))
        * c_hls.powf((two - n) / (two * denom))
        * (n * (n - two)).powf((n - two) / four)
}

/// `S_{H,L} = S / C(N,α)^{1/2*_α}`.
pub fn shl_constant<T: Real>(p: &ProblemParams<T>, s: T, c_hls: T) -> T {
    s / c_hls.powf(T::one() / p.two_star_alpha())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstants<T> {
    pub hls_c: T,
    pub sobolev_s: T,
    pub shl: T,
    pub bubble_coeff: T,
    /// `I(α/2)`.
    pub i_half_alpha: T,
}

impl<T: Real> SharpConstants<T> {
    pub fn compute(p: &ProblemParams<T>) -> Result<Self> {
        let hls_c = hls_constant(p);
        let sobolev_s = sobolev_constant(p)?;
        Ok(Self {
            hls_c,
            sobolev_s,
            shl: shl_constant(p, sobolev_s, hls_c),
            bubble_coeff: bubble_coefficient(p, sobolev_s, hls_c),
            i_half_alpha: riesz_identity_constant(p, p.alpha() / T::lit(2.0))?,
        })
    }

    /// Same as [`compute`](Self::compute) but with the bubble coefficient replaced.
    pub fn with_bubble_coeff(mut self, c: T) -> Self {
        self.bubble_coeff = c;
        self
    }
}
