//! Problem parameters and the shared configuration types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dimension `N`, Riesz order `α`, and the exponents derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams<T> {
    n: usize,
    alpha: T,
    two_star_alpha: T,
    tau: T,
}

impl<T: Real> ProblemParams<T> {
    /// Validates `N >= 5` and `5 - 6/(N-2) < α < N`.
    pub fn new(n: usize, alpha: T) -> Result<Self> {
        if n < 5 {
            return Err(Error::DimensionTooSmall(n));
        }
        let nf = T::from_usize_lossy(n);
        let two = T::lit(2.0);
        let lower = T::lit(5.0) - T::lit(6.0) / (nf - two);
        if !(alpha > lower && alpha < nf) {
            return Err(Error::AlphaOutOfRange {
                alpha: alpha.to_f64_lossy(),
                lower: lower.to_f64_lossy(),
                upper: n as f64,
            });
        }
        Ok(Self {
            n,
            alpha,
            two_star_alpha: (two * nf - alpha) / (nf - two),
            tau: (nf - T::lit(4.0)) / (nf - two),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_real(&self) -> T {
        T::from_usize_lossy(self.n)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Upper critical HLS exponent `(2N - α)/(N - 2)`.
    pub fn two_star_alpha(&self) -> T {
        self.two_star_alpha
    }

    /// Weight exponent `(N - 4)/(N - 2)` of the weighted sup-norms.
    pub fn tau(&self) -> T {
        self.tau
    }

    /// Bubble decay exponent `(N - 2)/2`.
    pub fn half_n_minus_2(&self) -> T {
        (self.n_real() - T::lit(2.0)) / T::lit(2.0)
    }

    /// Exponent in the scaling law `λ ~ m^{(N-2)/(N-4)}`.
    pub fn window_exponent(&self) -> T {
        (self.n_real() - T::lit(2.0)) / (self.n_real() - T::lit(4.0))
    }
}

/// Shorthand used throughout the docs and tests.
pub fn make_problem(n: usize, alpha: f64) -> Result<ProblemParams<f64>> {
    ProblemParams::new(n, alpha)
}

/// The m-bubble symmetric configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig<T> {
    pub m: usize,
    pub r_bar: T,
    pub x_bar_pp: Vec<T>,
    pub lambda: T,
    pub delta: T,
    pub window: (T, T),
    pub theta: T,
}

impl<T: Real> AnsatzConfig<T> {
    pub fn validate(&self, p: &ProblemParams<T>) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidInput("m must be >= 1".into()));
        }
        if self.x_bar_pp.len() != p.n() - 2 {
            return Err(Error::InvalidInput(format!(
                "x_bar_pp has length {}, expected N-2 = {}",
                self.x_bar_pp.len(),
                p.n() - 2
            )));
        }
        if !(self.r_bar > T::zero() && self.lambda > T::zero() && self.delta > T::zero()) {
            return Err(Error::InvalidInput("r_bar, lambda and delta must be positive".into()));
        }
        let (l0, l1) = self.window;
        if !(l0 > T::zero() && l1 > l0) {
            return Err(Error::InvalidInput("window needs L1 > L0 > 0".into()));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::InvalidInput("theta must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// `λ ∈ [L0 m^{(N-2)/(N-4)}, L1 m^{(N-2)/(N-4)}]`.
    pub fn lambda_in_window(&self, p: &ProblemParams<T>) -> bool {
        let scale = T::from_usize_lossy(self.m).powf(p.window_exponent());
        self.lambda >= self.window.0 * scale && self.lambda <= self.window.1 * scale
    }

    /// `|(r̄, x̄'') - (r0, x0'')| <= λ^{-(1-θ)}`.
    pub fn satisfies_proximity(&self, r0: T, x0_pp: &[T]) -> bool {
        let mut d2 = (self.r_bar - r0) * (self.r_bar - r0);
        for (a, b) in self.x_bar_pp.iter().zip(x0_pp) {
            d2 = d2 + (*a - *b) * (*a - *b);
        }
        d2.sqrt() <= self.lambda.powf(-(T::one() - self.theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn six_four_has_integer_exponent() {
        let p = make_problem(6, 4.0).unwrap();
        assert_eq!(p.two_star_alpha(), 2.0);
        assert_eq!(p.tau(), 0.5);
    }

    #[test]
    fn five_four() {
        let p = make_problem(5, 4.0).unwrap();
        assert_eq!(p.two_star_alpha(), 2.0);
        assert!((p.tau() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            make_problem(5, 2.9),
            Err(Error::AlphaOutOfRange { .. })
        ));
        // lower bound is strict: 5 - 6/3 = 3 at N = 5
        assert!(matches!(make_problem(5, 3.0), Err(Error::AlphaOutOfRange { .. })));
        assert!(matches!(make_problem(6, 6.0), Err(Error::AlphaOutOfRange { .. })));
        assert_eq!(make_problem(4, 2.0), Err(Error::DimensionTooSmall(4)));
    }

    #[test]
    fn works_in_single_precision() {
        let p = ProblemParams::<f32>::new(6, 4.0).unwrap();
        assert_eq!(p.two_star_alpha(), 2.0f32);
    }

    #[test]
    fn window_and_proximity() {
        let p = make_problem(6, 4.0).unwrap();
        let cfg = AnsatzConfig {
            m: 4,
            r_bar: 1.0,
            x_bar_pp: vec![0.0; 4],
            lambda: 16.0,
            delta: 0.1,
            window: (0.5, 2.0),
            theta: 0.1,
        };
        cfg.validate(&p).unwrap();
        assert!(cfg.lambda_in_window(&p));
        assert!(cfg.satisfies_proximity(1.0, &[0.0; 4]));
        assert!(!cfg.satisfies_proximity(1.5, &[0.0; 4]));
    }

    proptest! {
        #[test]
        fn exponent_identity(n in 5usize..12, frac in 0.01f64..0.99) {
            let lower = 5.0 - 6.0 / (n as f64 - 2.0);
            let alpha = lower + frac * (n as f64 - lower);
            let p = make_problem(n, alpha).unwrap();
            let lhs = (n as f64 - 2.0) * p.two_star_alpha() + alpha;
            prop_assert!((lhs - 2.0 * n as f64).abs() < 1e-12);
            prop_assert_eq!(p, make_problem(n, alpha).unwrap());
        }
    }
}
