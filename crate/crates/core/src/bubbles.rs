//! Bubbles `U_{z,λ}(x) = c (λ/(1 + λ²|x - z|²))^{(N-2)/2}` and the m-bubble ansatz.

use serde::{Deserialize, Serialize};

use crate::geometry::{place_bubbles, CutoffSpec, Placement};
use crate::error::Result;
use crate::params::ProblemParams;
use crate::scalar::{dist2, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble<T> {
    pub center: Vec<T>,
    pub lambda: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubblePartials<T> {
    pub d_lambda: T,
    /// `∂U/∂z_k`.
    pub d_center: Vec<T>,
}

impl<T: Real> Bubble<T> {
    pub fn new(center: Vec<T>, lambda: T) -> Self {
        Self { center, lambda }
    }

    pub fn at_origin(n: usize, lambda: T) -> Self {
        Self::new(vec![T::zero(); n], lambda)
    }
}

fn b_of<T: Real>(p: &ProblemParams<T>) -> T {
    p.half_n_minus_2()
}

/// Radial profile `c (λ/(1+λ²r²))^{(N-2)/2}` as a function of `r = |x - z|`.
pub fn bubble_radial<T: Real>(p: &ProblemParams<T>, c: T, lambda: T, r: T) -> T {
    c * (lambda / (T::one() + lambda * lambda * r * r)).powf(b_of(p))
}

pub fn bubble_eval<T: Real>(p: &ProblemParams<T>, c: T, b: &Bubble<T>, x: &[T]) -> T {
    bubble_radial(p, c, b.lambda, dist2(x, &b.center).sqrt())
}

/// Closed-form `∂U/∂λ` and `∂U/∂z_k`.
pub fn bubble_partials<T: Real>(p: &ProblemParams<T>, c: T, b: &Bubble<T>, x: &[T]) -> BubblePartials<T> {
    let l = b.lambda;
    let l2r2 = l * l * dist2(x, &b.center);
    let q = T::one() + l2r2;
    let u = c * (l / q).powf(b_of(p));
    let d_lambda = u * b_of(p) * (T::one() - l2r2) / (l * q);
    let k = (p.n_real() - T::lit(2.0)) * l * l * u / q;
    let d_center = x.iter().zip(&b.center).map(|(&xi, &zi)| k * (xi - zi)).collect();
    BubblePartials { d_lambda, d_center }
}

/// `∂U/∂λ` as a function of `r = |x - z|`.
pub fn bubble_d_lambda_radial<T: Real>(p: &ProblemParams<T>, c: T, lambda: T, r: T) -> T {
    let l2r2 = lambda * lambda * r * r;
    let q = T::one() + l2r2;
    bubble_radial(p, c, lambda, r) * b_of(p) * (T::one() - l2r2) / (lambda * q)
}

/// `-ΔU = c N(N-2) λ^{(N+2)/2} (1+λ²r²)^{-(N+2)/2}`.
pub fn bubble_neg_laplacian_radial<T: Real>(p: &ProblemParams<T>, c: T, lambda: T, r: T) -> T {
    let n = p.n_real();
    let e = b_of(p) + T::lit(2.0);
    c * n * (n - T::lit(2.0)) * (lambda / (T::one() + lambda * lambda * r * r)).powf(e)
}

/// `∂_r U` as a function of `r`.
pub fn bubble_dr_radial<T: Real>(p: &ProblemParams<T>, c: T, lambda: T, r: T) -> T {
    let q = T::one() + lambda * lambda * r * r;
    -(p.n_real() - T::lit(2.0)) * lambda * lambda * r * bubble_radial(p, c, lambda, r) / q
}

/// Sum of bubbles at the polygonal placement, optionally multiplied by the tube cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz<T> {
    pub params: ProblemParams<T>,
    pub coeff: T,
    pub placement: Placement<T>,
    pub lambda: T,
    pub cutoff: CutoffSpec<T>,
    pub use_cutoff: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzPartials<T> {
    pub d_lambda: T,
    pub d_r_bar: T,
    pub d_x_bar_pp: Vec<T>,
}

impl<T: Real> Ansatz<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        params: ProblemParams<T>,
        coeff: T,
        m: usize,
        r_bar: T,
        x_bar_pp: &[T],
        lambda: T,
        cutoff: CutoffSpec<T>,
        use_cutoff: bool,
    ) -> Result<Self> {
        Ok(Self {
            params,
            coeff,
            placement: place_bubbles(m, r_bar, x_bar_pp)?,
            lambda,
            cutoff,
            use_cutoff,
        })
    }

    pub fn m(&self) -> usize {
        self.placement.m()
    }

    pub fn dim(&self) -> usize {
        self.params.n()
    }

    pub fn bubble(&self, j: usize) -> Bubble<T> {
        Bubble::new(self.placement.centers[j].clone(), self.lambda)
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn without_cutoff(&self) -> Self {
        Self { use_cutoff: false, ..self.clone() }
    }

    fn xi(&self, x: &[T]) -> T {
        if self.use_cutoff {
            self.cutoff.value(x)
        } else {
            T::one()
        }
    }

    fn radial(&self, x: &[T], z: &[T]) -> T {
        bubble_radial(&self.params, self.coeff, self.lambda, dist2(x, z).sqrt())
    }

    /// `Σ_j U_{z_j,λ}(x)` without the cutoff.
    pub fn raw_sum(&self, x: &[T]) -> T {
        self.placement
            .centers
            .iter()
            .fold(T::zero(), |acc, z| acc + self.radial(x, z))
    }

    pub fn eval(&self, x: &[T]) -> T {
        let xi = self.xi(x);
        if xi == T::zero() {
            return T::zero();
        }
        xi * self.raw_sum(x)
    }

    pub fn grad(&self, x: &[T]) -> Vec<T> {
        self.jet(x).1
    }

    /// Value, gradient and Laplacian.
    pub fn jet(&self, x: &[T]) -> (T, Vec<T>, T) {
        let n = x.len();
        let p = &self.params;
        let l = self.lambda;
        let mut s = T::zero();
        let mut gs = vec![T::zero(); n];
        let mut ls = T::zero();
        for z in &self.placement.centers {
            let r2 = dist2(x, z);
            let q = T::one() + l * l * r2;
            let u = self.coeff * (l / q).powf(b_of(p));
            s = s + u;
            let k = -(p.n_real() - T::lit(2.0)) * l * l * u / q;
            for i in 0..n {
                gs[i] = gs[i] + k * (x[i] - z[i]);
            }
            ls = ls - bubble_neg_laplacian_radial(p, self.coeff, l, r2.sqrt());
        }
        if !self.use_cutoff {
            return (s, gs, ls);
        }
        let c = self.cutoff.eval(x);
        let mut g = vec![T::zero(); n];
        let mut dot = T::zero();
        for i in 0..n {
            g[i] = c.value * gs[i] + c.grad[i] * s;
            dot = dot + c.grad[i] * gs[i];
        }
        (c.value * s, g, c.value * ls + T::lit(2.0) * dot + s * c.laplacian)
    }

    /// Derivatives in the reduced variables `λ`, `r̄`, `x̄''_k`; moving `r̄` or `x̄''`
    /// moves all centers together.
    pub fn partials(&self, x: &[T]) -> AnsatzPartials<T> {
        let n = x.len();
        let m = T::from_usize_lossy(self.m());
        let mut d_lambda = T::zero();
        let mut d_r_bar = T::zero();
        let mut d_x = vec![T::zero(); n - 2];
        for (j, z) in self.placement.centers.iter().enumerate() {
            let bp = bubble_partials(&self.params, self.coeff, &Bubble::new(z.clone(), self.lambda), x);
            d_lambda = d_lambda + bp.d_lambda;
            let ang = T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / m;
            let (s, c) = ang.sin_cos();
            d_r_bar = d_r_bar + bp.d_center[0] * c + bp.d_center[1] * s;
            for k in 0..n - 2 {
                d_x[k] = d_x[k] + bp.d_center[k + 2];
            }
        }
        let xi = self.xi(x);
        AnsatzPartials {
            d_lambda: xi * d_lambda,
            d_r_bar: xi * d_r_bar,
            d_x_bar_pp: d_x.into_iter().map(|v| xi * v).collect(),
        }
    }
}
