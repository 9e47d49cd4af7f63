//! The reduced algebraic system: `∇_{(r̄, x̄'')} K = 0` and the balance equation in `t`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::energy::ExpansionFit;
use crate::error::{Error, Result};
use crate::geometry::interaction_sum;
use crate::params::ProblemParams;
use crate::potential::{degree_sign, Potential};

/// Default window `[L0, L1]` for `t = λ / m^{(N-2)/(N-4)}`.
pub const DEFAULT_WINDOW: (f64, f64) = (0.25, 4.0);
/// Default window-offset exponent.
pub const DEFAULT_THETA: f64 = 0.1;

/// Positive root of `-A1/t³ + A3/t^{N-1} = 0`.
pub fn balance_root(a1: f64, a3: f64, p: &ProblemParams<f64>) -> Result<f64> {
    if !(a1 > 0.0 && a3 > 0.0) || !a1.is_finite() || !a3.is_finite() {
        return Err(Error::NonPositiveCoefficient { a1, a3 });
    }
    let k = p.n_real() - 4.0;
    let t = (a3 / a1).powf(1.0 / k);
    // one Newton step on the cleared form -A1 t^{N-4} + A3
    let f = a3 - a1 * t.powf(k);
    let df = -a1 * k * t.powf(k - 1.0);
    Ok(t - f / df)
}

/// `|-A1/t³ + A3/t^{N-1}|`.
pub fn balance_residual(a1: f64, a3: f64, p: &ProblemParams<f64>, t: f64) -> f64 {
    (-a1 / t.powi(3) + a3 / t.powf(p.n_real() - 1.0)).abs()
}

/// `A3 = A2·B(m, r̄)/m^{N-2}`.
pub fn a3_from_a2(p: &ProblemParams<f64>, m: usize, r_bar: f64, a2: f64) -> Result<f64> {
    let e = p.n_real() - 2.0;
    Ok(a2 * interaction_sum(m, r_bar, e)? / (m as f64).powf(e))
}

/// Where the balance coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BalanceCoefficients {
    /// `A1` and the pair constant `A2`; `A3` follows from the solved `r̄`.
    FromA2 { a1: f64, a2: f64 },
    /// `A1` and `A3` given directly.
    Fixed { a1: f64, a3: f64 },
}

impl BalanceCoefficients {
    /// `A1` from a single-bubble fit and `A2` from a two-bubble fit.
    pub fn from_fits(single: &ExpansionFit, pair: &ExpansionFit) -> Result<Self> {
        let a2 = pair
            .a2
            .ok_or_else(|| Error::InvalidInput("pair fit carries no A2 coefficient".into()))?;
        Ok(Self::FromA2 { a1: single.a1, a2 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    pub window: (f64, f64),
    pub theta: f64,
    /// Target for `|∇K|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Newton start; `(r0, x0'')` when absent.
    pub start: Option<Vec<f64>>,
    /// Return `RootOutsideWindow` instead of a solution with `in_window = false`.
    pub enforce_window: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            theta: DEFAULT_THETA,
            tol: 1e-12,
            max_iter: 40,
            start: None,
            enforce_window: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub m: usize,
    pub r_bar_m: f64,
    pub x_bar_pp_m: Vec<f64>,
    pub lambda_m: f64,
    pub t_m: f64,
    pub a1: f64,
    pub a3: f64,
    pub grad_k_residual: f64,
    pub balance_residual: f64,
    pub in_window: bool,
    /// `|(r̄_m, x̄''_m) - (r0, x0'')|`.
    pub proximity: f64,
    /// `λ_m^{-(1-θ)}`.
    pub proximity_bound: f64,
    pub proximity_ok: bool,
    pub degree_sign: i32,
    pub newton_iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton for `∇K = 0` in `(r, x'')`; returns the point, `|∇K|` and the step count.
pub fn newton_critical_point<P: Potential + ?Sized>(
    k: &P,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let grad = |y: &[f64]| k.reduced_grad(y[0], &y[1..]);
    let mut y = start.to_vec();
    let mut g = grad(&y);
    let mut gn = norm(&g);
    for it in 0..max_iter {
        if gn <= tol {
            return Ok((y, gn, it));
        }
        let h = k.reduced_hessian(y[0], &y[1..]);
        let step = h
            .lu()
            .solve(&DVector::from_column_slice(&g))
            .ok_or_else(|| Error::DegenerateHessian(k.reduced_hessian(y[0], &y[1..]).determinant()))?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a - scale * s).collect();
            if trial[0] > 0.0 {
                let gt = grad(&trial);
                let gtn = norm(&gt);
                if gtn < gn {
                    y = trial;
                    g = gt;
                    gn = gtn;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            if gn <= tol.max(1e3 * f64::EPSILON) {
                return Ok((y, gn, it));
            }
            return Err(Error::NewtonDiverged { iterations: it, grad_norm: gn });
        }
    }
    if gn <= tol {
        Ok((y, gn, max_iter))
    } else {
        Err(Error::NewtonDiverged { iterations: max_iter, grad_norm: gn })
    }
}

/// Critical point of `K`, balance root `t_m`, and `λ_m = t_m m^{(N-2)/(N-4)}`.
pub fn solve_reduced<P: Potential + ?Sized>(
    k: &P,
    m: usize,
    coeffs: BalanceCoefficients,
    p: &ProblemParams<f64>,
    opts: &SolveOptions,
) -> Result<ReducedSolution> {
    if m < 2 {
        return Err(Error::MTooSmall(m));
    }
    let (l0, l1) = opts.window;
    if !(l0 > 0.0 && l1 > l0) {
        return Err(Error::InvalidInput("window needs L1 > L0 > 0".into()));
    }
    if !(opts.theta > 0.0 && opts.theta < 1.0) {
        return Err(Error::InvalidInput("theta must lie in (0, 1)".into()));
    }
    let mut y0 = vec![k.r0()];
    y0.extend_from_slice(k.x0_pp());
    let start = opts.start.clone().unwrap_or_else(|| y0.clone());
    if start.len() != y0.len() {
        return Err(Error::InvalidInput(format!("Newton start has length {}, expected N-1 = {}", start.len(), y0.len())));
    }
    let (y, grad_k_residual, newton_iterations) = newton_critical_point(k, &start, opts.tol, opts.max_iter)?;
    let degree_sign = degree_sign(k)?;
    let (a1, a3) = match coeffs {
        BalanceCoefficients::FromA2 { a1, a2 } => (a1, a3_from_a2(p, m, y[0], a2)?),
        BalanceCoefficients::Fixed { a1, a3 } => (a1, a3),
    };
    let t_m = balance_root(a1, a3, p)?;
    let in_window = t_m >= l0 && t_m <= l1;
    if opts.enforce_window && !in_window {
        return Err(Error::RootOutsideWindow { t: t_m, l0, l1 });
    }
    let lambda_m = t_m * (m as f64).powf(p.window_exponent());
    let offset: Vec<f64> = y.iter().zip(&y0).map(|(a, b)| a - b).collect();
    let proximity = norm(&offset);
    let proximity_bound = lambda_m.powf(-(1.0 - opts.theta));
    Ok(ReducedSolution {
        m,
        r_bar_m: y[0],
        x_bar_pp_m: y[1..].to_vec(),
        lambda_m,
        t_m,
        a1,
        a3,
        grad_k_residual,
        balance_residual: balance_residual(a1, a3, p, t_m),
        in_window,
        proximity,
        proximity_bound,
        proximity_ok: proximity <= proximity_bound,
        degree_sign,
        newton_iterations,
    })
}
